use super::covariance::Family;
use super::fit::{fit_bivariate_ml, SpatialFit};
use super::GridField;
use crate::{AgreementEstimate, Error, EstimateMethod, Result};
use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

/// Plug-in `ρ̂_c(h) = η̂ ρ̂_XY(h)` with its components.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PluginEstimate {
    pub estimate: AgreementEstimate,
    /// `η̂ = ((v̂ + 1/v̂ + û²)/2)⁻¹`
    pub eta: f64,
    /// `v̂ = (Ĉ_X(0)/Ĉ_Y(0))^{1/2}`
    pub v: f64,
    /// `û = (μ̂_X − μ̂_Y)/(Ĉ_X(0)Ĉ_Y(0))^{1/4}`
    pub u: f64,
    /// Fitted parametric cross-correlation at lag h.
    pub rho_xy: f64,
    pub fit: SpatialFit,
}

/// ML fit followed by the plug-in spatial CCC at lag `h`.
pub fn spatial_ccc_plugin(field: &GridField, family: Family, h: [f64; 2]) -> Result<PluginEstimate> {
    spatial_ccc_from_fit(&fit_bivariate_ml(field, family)?, h)
}

/// Plug-in spatial CCC at lag `h` from an existing fit, so several lags can
/// share one likelihood maximization.
pub fn spatial_ccc_from_fit(fit: &SpatialFit, h: [f64; 2]) -> Result<PluginEstimate> {
    let m = fit.model;
    if !(m.var_x > 0.0 && m.var_y > 0.0) {
        return Err(Error::Degenerate("a fitted channel variance is zero; η̂ is undefined".into()));
    }
    let v = (m.var_x / m.var_y).sqrt();
    let u = (m.mu_x - m.mu_y) / (m.var_x * m.var_y).sqrt().sqrt();
    let eta = 2.0 / (v + 1.0 / v + u * u);
    let r = (h[0] * h[0] + h[1] * h[1]).sqrt();
    let rho_xy = m.rho_co * m.family.smoothness().2.correlation(r, m.range_xy);
    Ok(PluginEstimate { estimate: AgreementEstimate::point(eta * rho_xy, EstimateMethod::PlugIn), eta, v, u, rho_xy, fit: *fit })
}

fn lagged_pairs(rows: usize, cols: usize, lag: (isize, isize)) -> impl Iterator<Item = ((usize, usize), (usize, usize))> {
    let (dx, dy) = lag;
    (0..rows).flat_map(move |i| {
        (0..cols).filter_map(move |j| {
            let (i2, j2) = (i as isize + dy, j as isize + dx);
            (i2 >= 0 && j2 >= 0 && (i2 as usize) < rows && (j2 as usize) < cols).then_some(((i, j), (i2 as usize, j2 as usize)))
        })
    })
}

/// Method-of-moments semivariogram `½ mean (Z(s + h) − Z(s))²` of one
/// channel at the integer lag `(dx, dy)` (grid steps). `None` if no pairs.
pub fn empirical_variogram(values: &DMatrix<f64>, lag: (isize, isize)) -> Option<f64> {
    let (mut acc, mut k) = (0.0, 0usize);
    for (a, b) in lagged_pairs(values.nrows(), values.ncols(), lag) {
        acc += (values[b] - values[a]).powi(2);
        k += 1;
    }
    (k > 0).then(|| 0.5 * acc / k as f64)
}

/// Method-of-moments cross-covariogram `mean (X(s) − X̄)(Y(s + h) − Ȳ)` at
/// the integer lag `(dx, dy)`. A diagnostic alongside the parametric plug-in.
pub fn empirical_cross_covariogram(field: &GridField, lag: (isize, isize)) -> Option<f64> {
    let (x, y) = (field.x(), field.y());
    let (mx, my) = (x.mean(), y.mean());
    let (mut acc, mut k) = (0.0, 0usize);
    for (a, b) in lagged_pairs(x.nrows(), x.ncols(), lag) {
        acc += (x[a] - mx) * (y[b] - my);
        k += 1;
    }
    (k > 0).then(|| acc / k as f64)
}
