//! Distance-function agreement coefficients: the U-statistic ρ̂_g and the
//! L₁ coefficient ρ₁ under normal and elliptically contoured laws.
//!
//! The ρ_g convention used throughout is
//!
//! ```text
//!        [E_I g(X−Y) − E_I g(X+Y)] − [E g(X−Y) − E g(X+Y)]
//! ρ_g = ───────────────────────────────────────────────────
//!        [E_I g(X−Y) − E_I g(X+Y)] + ½[E g(2X) + E g(2Y)]
//! ```
//!
//! where `E_I` is the expectation with X and Y independent. With `g(z) = z²`
//! this is exactly Lin's CCC and `X = Y` gives 1. The sample form replaces
//! `E_I` by `(1/n)ΣᵢΣⱼ` and the joint expectations by `Σᵢ` (common factor n).

use alloc::{format, vec::Vec};
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::math::norm_cdf;
use crate::quadrature::{integrate_from, integrate_to, DEFAULT_TOL};
use crate::sample::BivariateNormalParams;
use crate::{Error, PairedSample, Result, Rng};

/// Largest n for which the independence double sum is evaluated exactly.
pub const EXACT_PAIR_LIMIT: usize = 20_000;
/// Random (i, j) pairs drawn to estimate the double sum beyond the exact limit.
pub const SUBSAMPLE_PAIRS: usize = 4_000_000;
pub const SUBSAMPLE_SEED: u64 = 0x5EED_0001;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DistanceFunction {
    Squared,
    Absolute,
    /// `|z|^δ`
    Power(f64),
    /// `min(|z|, z₀)^δ`: the power law capped at its value at `z₀`.
    WinsorizedPower {
        delta: f64,
        cap: f64,
    },
}

impl DistanceFunction {
    /// Presets for the exponents found to perform best in simulation.
    pub const PRESET_DELTAS: [f64; 2] = [1.0, 1.5];

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Power(d) if !(d > 0.0 && d.is_finite()) => Err(Error::InvalidArgument(format!("exponent δ = {d} must be positive"))),
            Self::WinsorizedPower { delta, cap } if !(delta > 0.0 && delta.is_finite() && cap > 0.0) => {
                Err(Error::InvalidArgument(format!("winsorized power needs δ > 0 and z₀ > 0, got ({delta}, {cap})")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Self::Squared => z * z,
            Self::Absolute => z.abs(),
            Self::Power(d) => z.abs().powf(d),
            Self::WinsorizedPower { delta, cap } => z.abs().min(cap).powf(delta),
        }
    }
}

/// Sample ρ̂_g. Exact O(n²) double sum for `n ≤ EXACT_PAIR_LIMIT`; beyond
/// that the independence term is estimated from [`SUBSAMPLE_PAIRS`] seeded
/// random index pairs.
pub fn rho_g_sample(sample: &PairedSample, g: DistanceFunction) -> Result<f64> {
    g.validate()?;
    let (x, y) = (sample.x(), sample.y());
    let n = x.len();
    let indep = if n <= EXACT_PAIR_LIMIT {
        let mut total = 0.0;
        for &xi in x {
            let mut row = 0.0;
            for &yj in y {
                row += g.eval(xi - yj) - g.eval(xi + yj);
            }
            total += row;
        }
        total / n as f64
    } else {
        let mut rng = Rng::new(SUBSAMPLE_SEED);
        let mut acc = 0.0;
        for _ in 0..SUBSAMPLE_PAIRS {
            let (xi, yj) = (x[rng.below(n)], y[rng.below(n)]);
            acc += g.eval(xi - yj) - g.eval(xi + yj);
        }
        acc / SUBSAMPLE_PAIRS as f64 * n as f64
    };
    let joint: f64 = x.iter().zip(y).map(|(&a, &b)| g.eval(a - b) - g.eval(a + b)).sum();
    let doubled: f64 = x.iter().zip(y).map(|(&a, &b)| g.eval(2.0 * a) + g.eval(2.0 * b)).sum();
    let den = indep + 0.5 * doubled;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate("ρ_g denominator is zero".into()));
    }
    Ok((indep - joint) / den)
}

/// `E|γ + τR|` for a standard normal R.
fn normal_abs_mean(gamma: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        return gamma.abs();
    }
    let a = gamma / tau;
    gamma * (1.0 - 2.0 * norm_cdf(-a)) + tau * (2.0 / PI).sqrt() * (-0.5 * a * a).exp()
}

fn check_params(p: &BivariateNormalParams) -> Result<(f64, f64, f64)> {
    let tau2 = p.var_x + p.var_y - 2.0 * p.cov_xy;
    let s2 = p.var_x + p.var_y;
    if tau2 < -1e-12 * s2.max(1.0) || p.cov_xy * p.cov_xy > p.var_x * p.var_y * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::InvalidCovariance(format!("τ² = {tau2} from a non-PSD covariance")));
    }
    if !(s2 > 0.0) {
        return Err(Error::Degenerate("σ_X² + σ_Y² must be positive".into()));
    }
    Ok((p.mu_x - p.mu_y, tau2.max(0.0).sqrt(), s2.sqrt()))
}

/// ρ₁ = 1 − E|X−Y| / E(|X−Y| : σ_XY = 0) under bivariate normality.
pub fn rho1_normal(p: &BivariateNormalParams) -> Result<f64> {
    let (gamma, tau, s) = check_params(p)?;
    if gamma == 0.0 {
        return Ok(rho1_normal_equal_means(p.var_x, p.var_y, p.cov_xy));
    }
    Ok(1.0 - normal_abs_mean(gamma, tau) / normal_abs_mean(gamma, s))
}

/// Equal-means form `1 − √((σ_X² + σ_Y² − 2σ_XY)/(σ_X² + σ_Y²))`.
pub fn rho1_normal_equal_means(var_x: f64, var_y: f64, cov_xy: f64) -> f64 {
    1.0 - ((var_x + var_y - 2.0 * cov_xy).max(0.0) / (var_x + var_y)).sqrt()
}

/// Density generators of two-dimensional elliptical laws.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Generator {
    Gaussian,
    /// Student t with ν > 2 degrees of freedom.
    StudentT(f64),
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::StudentT(nu) if !(nu > 2.0 && nu.is_finite()) => {
                Err(Error::InvalidArgument(format!("student t generator requires ν > 2 (finite variance), got {nu}")))
            }
            _ => Ok(()),
        }
    }

    /// Bivariate generator `g(u)` with density `C_g |Σ|^{-1/2} g(q)`.
    pub fn g2(&self, u: f64) -> f64 {
        match *self {
            Self::Gaussian => (-0.5 * u).exp(),
            Self::StudentT(nu) => (1.0 + u / nu).powf(-(nu + 2.0) / 2.0),
        }
    }

    /// Shape of the univariate marginal generator, proportional to
    /// `∫ g(u + s²) ds`.
    pub fn g1(&self, u: f64) -> f64 {
        match *self {
            Self::Gaussian => (-0.5 * u).exp(),
            Self::StudentT(nu) => (1.0 + u / nu).powf(-(nu + 1.0) / 2.0),
        }
    }

    /// `C_g` with `∫∫ C_g g(x² + y²) dx dy = 1`, via `π ∫₀^∞ g(s) ds`.
    pub fn normalizing_constant(&self) -> Result<f64> {
        self.validate()?;
        let q = integrate_from(|s| self.g2(s), 0.0, DEFAULT_TOL)?;
        Ok(1.0 / (PI * q.value))
    }

    /// Constant making `C₁ g₁(r²)` a density on the line.
    pub fn marginal_constant(&self) -> Result<f64> {
        self.validate()?;
        let q = integrate_from(|r| 2.0 * self.g1(r * r), 0.0, DEFAULT_TOL)?;
        Ok(1.0 / q.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EllipticalSpec {
    pub generator: Generator,
    /// Location and dispersion (Σ) of the law.
    pub params: BivariateNormalParams,
}

impl EllipticalSpec {
    pub fn new(generator: Generator, params: BivariateNormalParams) -> Result<Self> {
        generator.validate()?;
        params.validate()?;
        Ok(Self { generator, params })
    }

    pub fn normalizing_constant(&self) -> Result<f64> {
        self.generator.normalizing_constant()
    }
}

/// `E|γ + tR|` where R has the standardized marginal density `c₁ g₁(r²)`:
/// `γ(1 − 2c₁∫_{−∞}^{−α} g₁(r²)dr) − 2c₁ t ∫_{−∞}^{−α} r g₁(r²)dr`, α = γ/t.
fn elliptical_abs_mean(gen: &Generator, c1: f64, gamma: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(gamma.abs());
    }
    let alpha = gamma / t;
    let mass = integrate_to(|r| gen.g1(r * r), -alpha, DEFAULT_TOL)?.value;
    let first = integrate_to(|r| r * gen.g1(r * r), -alpha, DEFAULT_TOL)?.value;
    Ok(gamma * (1.0 - 2.0 * c1 * mass) - 2.0 * c1 * t * first)
}

/// ρ₁ for an elliptically contoured law, by adaptive quadrature of the
/// one-dimensional marginal integrals.
pub fn rho1_elliptical(spec: &EllipticalSpec) -> Result<f64> {
    let (gamma, tau, s) = check_params(&spec.params)?;
    let c1 = spec.generator.marginal_constant()?;
    let num = elliptical_abs_mean(&spec.generator, c1, gamma, tau)?;
    let den = elliptical_abs_mean(&spec.generator, c1, gamma, s)?;
    if !(den > 0.0) {
        return Err(Error::NumericFailure(format!("independence expectation evaluated to {den}")));
    }
    Ok(1.0 - num / den)
}

/// Monte Carlo estimate of `1 − E|X−Y| / E_I|X−Y|` with its standard error
/// (delta method on the ratio), from `n` draws of `(X, Y)` and `n` draws of
/// the uncorrelated law. Both draws use the same generator.
pub fn rho1_monte_carlo(spec: &EllipticalSpec, n: usize, rng: &mut Rng) -> Result<(f64, f64)> {
    let p = spec.params;
    let indep = BivariateNormalParams { cov_xy: 0.0, ..p };
    let joint = draw_abs_diff(&spec.generator, &p, n, rng)?;
    let marg = draw_abs_diff(&spec.generator, &indep, n, rng)?;
    let (m1, v1) = mean_var(&joint);
    let (m2, v2) = mean_var(&marg);
    let r = m1 / m2;
    let se = r * ((v1 / (m1 * m1) + v2 / (m2 * m2)) / n as f64).sqrt();
    Ok((1.0 - r, se))
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let s = v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() as f64 - 1.0);
    (m, s)
}

/// `|X − Y|` draws via the normal scale mixture (χ²_ν mixing for Student t).
fn draw_abs_diff(gen: &Generator, p: &BivariateNormalParams, n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let tau2 = (p.var_x + p.var_y - 2.0 * p.cov_xy).max(0.0);
    let tau = tau2.sqrt();
    let gamma = p.mu_x - p.mu_y;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let scale = match *gen {
            Generator::Gaussian => 1.0,
            Generator::StudentT(nu) => (nu / (2.0 * gamma_variate(nu / 2.0, rng))).sqrt(),
        };
        out.push((gamma + tau * scale * rng.normal()).abs());
    }
    Ok(out)
}

/// Gamma(shape, 1) variate (Marsaglia–Tsang).
pub(crate) fn gamma_variate(shape: f64, rng: &mut Rng) -> f64 {
    if shape < 1.0 {
        let u = rng.uniform();
        return gamma_variate(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z = rng.normal();
        let v = (1.0 + c * z).powi(3);
        if v <= 0.0 {
            continue;
        }
        let u = rng.uniform();
        if u.ln() < 0.5 * z * z + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}
