//! Probability of agreement ψ_c = P(|X − Y| ≤ c) under bivariate normality.

use alloc::{format, vec::Vec};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::math::{norm_cdf, percentile_interval, sd};
use crate::sample::{fit_bivariate_normal, BivariateNormalParams};
use crate::{AgreementEstimate, Error, EstimateMethod, PairedSample, Result, Rng};

/// Methods are called interchangeable at threshold c when ψ̂_c reaches this.
pub const INTERCHANGEABILITY_THRESHOLD: f64 = 0.95;
pub const DEFAULT_RESAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PaSpec {
    pub mu_d: f64,
    pub sigma_d: f64,
    pub c: f64,
}

impl PaSpec {
    pub fn new(mu_d: f64, sigma_d: f64, c: f64) -> Result<Self> {
        let s = Self { mu_d, sigma_d, c };
        s.validate()?;
        Ok(s)
    }

    pub fn from_params(p: &BivariateNormalParams, c: f64) -> Result<Self> {
        Self::new(p.mu_d(), p.var_d().max(0.0).sqrt(), c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidThreshold(self.c));
        }
        if !(self.sigma_d >= 0.0) || !self.sigma_d.is_finite() || !self.mu_d.is_finite() {
            return Err(Error::InvalidArgument(format!("σ_D = {} must be finite and nonnegative", self.sigma_d)));
        }
        Ok(())
    }
}

/// `ψ_c = Φ((c − μ_D)/σ_D) − Φ(−(c + μ_D)/σ_D)`; with σ_D = 0 the difference
/// is a point mass, so ψ_c is 1 when |μ_D| ≤ c and 0 otherwise.
pub fn pa_normal(spec: &PaSpec) -> Result<f64> {
    spec.validate()?;
    let PaSpec { mu_d, sigma_d, c } = *spec;
    if sigma_d == 0.0 {
        return Ok(if mu_d.abs() <= c { 1.0 } else { 0.0 });
    }
    let m = mu_d.abs();
    let v = norm_cdf((c - m) / sigma_d) - norm_cdf(-(c + m) / sigma_d);
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PaCurve {
    pub c_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// μ_D and σ_D the curve was evaluated at.
    pub mu_d: f64,
    pub sigma_d: f64,
}

impl PaCurve {
    /// Per-threshold interchangeability flags (ψ_c ≥ 0.95).
    pub fn interchangeable(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v >= INTERCHANGEABILITY_THRESHOLD).collect()
    }
}

pub fn validate_grid(c_grid: &[f64]) -> Result<()> {
    if c_grid.is_empty() {
        return Err(Error::InvalidGrid("empty c grid".into()));
    }
    if c_grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidGrid("c values must be positive and finite".into()));
    }
    if c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("c grid must be strictly ascending".into()));
    }
    Ok(())
}

pub fn pa_curve(params: &BivariateNormalParams, c_grid: &[f64]) -> Result<PaCurve> {
    validate_grid(c_grid)?;
    let mu_d = params.mu_d();
    let sigma_d = params.var_d().max(0.0).sqrt();
    let values = c_grid.iter().map(|&c| pa_normal(&PaSpec::new(mu_d, sigma_d, c)?)).collect::<Result<Vec<_>>>()?;
    Ok(PaCurve { c_grid: c_grid.to_vec(), values, mu_d, sigma_d })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PaInference {
    pub c: f64,
    pub estimate: AgreementEstimate,
    pub interchangeable: bool,
    /// The ML fit has σ̂_D = 0; the interval is the point mass.
    pub degenerate: bool,
    pub resamples: usize,
    /// Key of the per-replicate streams.
    pub stream_seed: u64,
}

/// Plug-in ψ̂_c from the ML fit with a parametric-bootstrap percentile interval.
///
/// ψ_c depends on the fit only through (μ̂_D, σ̂_D), which are the ML mean and
/// standard deviation of the differences, so each replicate simulates n
/// differences from N(μ̂_D, σ̂_D²) and refits those two moments. Replicate k
/// draws from stream k of a key taken from `rng`, so the result does not
/// depend on evaluation order.
pub fn pa_inference(sample: &PairedSample, c: f64, alpha: f64, b: usize, rng: &mut Rng) -> Result<PaInference> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if b < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 resamples, got {b}")));
    }
    let fit = fit_bivariate_normal(sample);
    let spec = PaSpec::from_params(&fit.params, c)?;
    let psi = pa_normal(&spec)?;
    let stream_seed = rng.fork_seed();
    let scale = spec.mu_d.abs().max(fit.params.var_x.sqrt()).max(fit.params.var_y.sqrt()).max(1.0);
    if spec.sigma_d <= 1e-12 * scale {
        return Ok(PaInference {
            c,
            estimate: AgreementEstimate {
                estimate: psi,
                std_error: Some(0.0),
                ci: Some((psi, psi)),
                alpha: Some(alpha),
                method: EstimateMethod::ParametricBootstrap,
            },
            interchangeable: psi >= INTERCHANGEABILITY_THRESHOLD,
            degenerate: true,
            resamples: 0,
            stream_seed,
        });
    }
    let mut reps: Vec<f64> = (0..b)
        .map(|k| {
            let mut r = Rng::with_stream(stream_seed, k as u64);
            let d: Vec<f64> = (0..n).map(|_| spec.mu_d + spec.sigma_d * r.normal()).collect();
            let m = d.iter().sum::<f64>() / n as f64;
            let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
            pa_normal(&PaSpec { mu_d: m, sigma_d: v.sqrt(), c }).unwrap_or(f64::NAN)
        })
        .collect();
    let se = sd(&reps);
    let ci = percentile_interval(&mut reps, alpha);
    Ok(PaInference {
        c,
        estimate: AgreementEstimate {
            estimate: psi,
            std_error: Some(se),
            ci: Some(ci),
            alpha: Some(alpha),
            method: EstimateMethod::ParametricBootstrap,
        },
        interchangeable: psi >= INTERCHANGEABILITY_THRESHOLD,
        degenerate: false,
        resamples: b,
        stream_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::sample_bivariate;
    use crate::Rng;
    use alloc::vec;
    use proptest::prelude::*;

    fn pa(m: f64, s: f64, c: f64) -> f64 {
        pa_normal(&PaSpec::new(m, s, c).unwrap()).unwrap()
    }

    #[test]
    fn anchor_values() {
        assert!((pa(0.0, 1.0, 1.96) - 0.95).abs() < 2e-4);
        assert!((pa(0.0, 1.0, 100.0) - 1.0).abs() < 1e-12);
        // Φ(0.5) − Φ(−1.5) from tabulated values.
        assert!((pa(0.5, 1.0, 1.0) - (0.691_462_461_274_013_1 - 0.066_807_201_268_858_06)).abs() < 1e-5);
        assert_eq!(pa(0.3, 0.0, 0.5), 1.0);
        assert_eq!(pa(0.6, 0.0, 0.5), 0.0);
        assert!(matches!(PaSpec::new(0.0, 1.0, 0.0), Err(Error::InvalidThreshold(_))));
    }

    #[test]
    fn curve_cases() {
        let same = BivariateNormalParams::new(1.0, 1.0, 2.0, 2.0, 2.0).unwrap();
        let c = pa_curve(&same, &[0.1, 0.5, 1.0]).unwrap();
        assert!(c.values.iter().all(|&v| v == 1.0));
        assert!(matches!(pa_curve(&same, &[]), Err(Error::InvalidGrid(_))));
        assert!(matches!(pa_curve(&same, &[0.2, 0.1]), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn identical_sample_inference() {
        let s = PairedSample::new(vec![1.0, 2.0, 4.0, 7.0], vec![1.0, 2.0, 4.0, 7.0]).unwrap();
        let r = pa_inference(&s, 0.5, 0.05, 200, &mut Rng::new(1)).unwrap();
        assert_eq!(r.estimate.estimate, 1.0);
        assert!(r.interchangeable && r.degenerate);
        assert_eq!(r.estimate.ci, Some((1.0, 1.0)));
    }

    #[test]
    fn empirical_probability_matches() {
        let mut outer = Rng::new(77);
        for _ in 0..20 {
            let vx = 0.5 + 2.0 * outer.uniform();
            let vy = 0.5 + 2.0 * outer.uniform();
            let r = 1.8 * outer.uniform() - 0.9;
            let p = BivariateNormalParams::new(outer.normal(), outer.normal(), vx, vy, r * (vx * vy).sqrt()).unwrap();
            let c = 0.2 + 2.0 * outer.uniform();
            let psi = pa_normal(&PaSpec::from_params(&p, c).unwrap()).unwrap();
            let n = 1_000_000;
            let s = sample_bivariate(&p, n, &mut Rng::new(outer.next_u64())).unwrap();
            let hits = s.pairs().filter(|(x, y)| (x - y).abs() <= c).count() as f64 / n as f64;
            let se = (psi * (1.0 - psi) / n as f64).sqrt();
            assert!((hits - psi).abs() <= 3.0 * se + 1e-12, "{hits} vs {psi}");
        }
    }

    #[test]
    fn bootstrap_coverage() {
        let truth = BivariateNormalParams::new(0.0, 0.3, 1.0, 1.0, 0.7).unwrap();
        let c = 0.8;
        let psi = pa_normal(&PaSpec::from_params(&truth, c).unwrap()).unwrap();
        let mut covered = 0;
        for k in 0..500 {
            let s = sample_bivariate(&truth, 500, &mut Rng::with_stream(2024, k)).unwrap();
            let r = pa_inference(&s, c, 0.05, 1000, &mut Rng::with_stream(9, k)).unwrap();
            let (lo, hi) = r.estimate.ci.unwrap();
            if lo <= psi && psi <= hi {
                covered += 1;
            }
        }
        assert!(covered as f64 / 500.0 >= 0.93, "coverage {covered}/500");
    }

    #[test]
    fn inference_is_reproducible() {
        let truth = BivariateNormalParams::new(0.0, 0.3, 1.0, 1.0, 0.7).unwrap();
        let s = sample_bivariate(&truth, 50, &mut Rng::new(3)).unwrap();
        let a = pa_inference(&s, 1.0, 0.05, 300, &mut Rng::new(5)).unwrap();
        let b = pa_inference(&s, 1.0, 0.05, 300, &mut Rng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn pa_invariants(mu in -3f64..3.0, s in 0.01f64..5.0, c in 0.01f64..10.0, dc in 0.001f64..1.0, ds in 0.001f64..1.0) {
            let v = pa(mu, s, c);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, pa(-mu, s, c));
            prop_assert!(pa(mu, s, c + dc) >= v);
            if c > mu.abs() {
                prop_assert!(pa(mu, s + ds, c) <= v + 1e-15);
            }
        }
    }
}
