#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "snake_case"))]
pub enum EstimateMethod {
    /// Fisher z-transform with the asymptotic CCC variance.
    FisherZ,
    /// Nonparametric pairs bootstrap, percentile interval.
    Bootstrap,
    /// Parametric bootstrap from the bivariate normal ML fit.
    ParametricBootstrap,
    /// Circular block bootstrap on paired first differences.
    BlockBootstrap,
    /// Maximum-likelihood plug-in, no interval.
    PlugIn,
}

/// Point estimate with optional standard error and confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AgreementEstimate {
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub alpha: Option<f64>,
    pub method: EstimateMethod,
}

impl AgreementEstimate {
    pub fn point(estimate: f64, method: EstimateMethod) -> Self {
        Self { estimate, std_error: None, ci: None, alpha: None, method }
    }
}
