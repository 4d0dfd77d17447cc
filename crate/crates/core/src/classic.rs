//! Pearson correlation, Lin's concordance correlation coefficient, Fisher-z
//! inference, Bland–Altman limits of agreement, and the regression
//! calibration workflow.

use alloc::{format, vec::Vec};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::math::{mean, norm_cdf, percentile_interval, z_two_sided};
use crate::sample::{summarize, BivariateNormalParams, Divisor, PairedSample, SampleMoments};
use crate::{Error, EstimateMethod, Result, Rng};

/// Largest |ρ̂_c| passed to the z-transform.
pub const CCC_CLAMP: f64 = 1.0 - 1e-12;
/// Below this |ρ̂| the asymptotic variance is replaced by a bootstrap.
pub const PEARSON_FLOOR: f64 = 1e-8;
pub const BOOTSTRAP_RESAMPLES: usize = 2000;
pub const BOOTSTRAP_SEED: u64 = 0x00C0_FFEE;

pub fn pearson(m: &SampleMoments) -> Result<f64> {
    if m.var_x <= 0.0 {
        return Err(Error::UndefinedCorrelation("x"));
    }
    if m.var_y <= 0.0 {
        return Err(Error::UndefinedCorrelation("y"));
    }
    Ok((m.cov_xy / (m.var_x * m.var_y).sqrt()).clamp(-1.0, 1.0))
}

/// True when both channels are constant and equal, where the CCC ratio is 0/0.
pub fn ccc_is_degenerate(m: &SampleMoments) -> bool {
    m.var_x + m.var_y + (m.mean_x - m.mean_y).powi(2) <= 0.0
}

/// `ρ̂_c = 2S_XY / (S_X² + S_Y² + (X̄ − Ȳ)²)` with the moments' divisor.
///
/// The 0/0 case (both samples constant and equal) is reported as 1; check
/// [`ccc_is_degenerate`] to flag it.
pub fn lin_ccc(m: &SampleMoments) -> f64 {
    let den = m.var_x + m.var_y + (m.mean_x - m.mean_y).powi(2);
    if den <= 0.0 {
        return 1.0;
    }
    (2.0 * m.cov_xy / den).clamp(-1.0, 1.0)
}

/// `ρ_c = ρ · C_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CccDecomposition {
    /// Pearson correlation (precision).
    pub rho: f64,
    /// Bias correction factor `((v + 1/v + u²)/2)⁻¹` (accuracy).
    pub c_b: f64,
    /// Scale ratio `σ_X / σ_Y`.
    pub v: f64,
    /// Location shift `(μ_X − μ_Y) / √(σ_X σ_Y)`.
    pub u: f64,
    pub ccc: f64,
}

pub fn ccc_decompose(p: &BivariateNormalParams) -> Result<CccDecomposition> {
    if p.var_x <= 0.0 {
        return Err(Error::UndefinedCorrelation("x"));
    }
    if p.var_y <= 0.0 {
        return Err(Error::UndefinedCorrelation("y"));
    }
    let (sx, sy) = (p.var_x.sqrt(), p.var_y.sqrt());
    let rho = p.cov_xy / (sx * sy);
    let v = sx / sy;
    let u = p.mu_d() / (sx * sy).sqrt();
    let c_b = 2.0 / (v + 1.0 / v + u * u);
    Ok(CccDecomposition { rho, c_b, v, u, ccc: rho * c_b })
}

/// Fisher-z interval for the CCC.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FisherZInference {
    pub estimate: f64,
    pub z_hat: f64,
    pub sigma_z: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub n: usize,
    pub method: EstimateMethod,
    /// |ρ̂_c| hit the clamp; the interval collapses to the point estimate.
    pub degenerate: bool,
}

impl FisherZInference {
    /// Two-sided approximate p-value for `H₀: ρ_c = ρ₀`.
    pub fn p_value(&self, rho0: f64) -> Result<f64> {
        if !(rho0 > -1.0 && rho0 < 1.0) {
            return Err(Error::InvalidArgument(format!("ρ₀ = {rho0} must lie in (-1, 1)")));
        }
        if self.sigma_z <= 0.0 {
            return Err(Error::Degenerate("zero standard error".into()));
        }
        let z = (self.z_hat - rho0.atanh()) / self.sigma_z;
        Ok(2.0 * norm_cdf(-z.abs()))
    }
}

/// Asymptotic variance of `atanh(ρ̂_c)` under bivariate normality (Lin 1989):
///
/// `σ_Z² = [ (1−ρ²)ρ_c² / ((1−ρ_c²)ρ²) + 2ρ_c³(1−ρ_c)u² / (ρ(1−ρ_c²)²)
///          − ρ_c⁴u⁴ / (2ρ²(1−ρ_c²)²) ] / (n − 2)`
pub fn fisher_z_variance(ccc: f64, rho: f64, u: f64, n: usize) -> f64 {
    let rc2 = ccc * ccc;
    let one_m = 1.0 - rc2;
    let t1 = (1.0 - rho * rho) * rc2 / (one_m * rho * rho);
    let t2 = 2.0 * ccc.powi(3) * (1.0 - ccc) * u * u / (rho * one_m * one_m);
    let t3 = rc2 * rc2 * u.powi(4) / (2.0 * rho * rho * one_m * one_m);
    (t1 + t2 - t3) / (n as f64 - 2.0)
}

/// CCC point estimate (unbiased moments) with a Fisher-z interval.
///
/// When |ρ̂| < [`PEARSON_FLOOR`] the asymptotic variance is undefined and a
/// percentile pairs bootstrap ([`BOOTSTRAP_RESAMPLES`] resamples, seed
/// [`BOOTSTRAP_SEED`]) is used instead; `method` records which was used.
pub fn ccc_inference(sample: &PairedSample, alpha: f64) -> Result<FisherZInference> {
    ccc_inference_seeded(sample, alpha, BOOTSTRAP_SEED)
}

pub fn ccc_inference_seeded(sample: &PairedSample, alpha: f64, seed: u64) -> Result<FisherZInference> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let m = summarize(sample, Divisor::Unbiased);
    let estimate = lin_ccc(&m);
    let clamped = estimate.clamp(-CCC_CLAMP, CCC_CLAMP);
    let z_hat = clamped.atanh();
    if estimate.abs() >= CCC_CLAMP {
        return Ok(FisherZInference {
            estimate,
            z_hat,
            sigma_z: 0.0,
            ci_low: estimate,
            ci_high: estimate,
            alpha,
            n,
            method: EstimateMethod::FisherZ,
            degenerate: true,
        });
    }
    let rho = if m.var_x > 0.0 && m.var_y > 0.0 { m.cov_xy / (m.var_x * m.var_y).sqrt() } else { 0.0 };
    if rho.abs() >= PEARSON_FLOOR {
        let u = (m.mean_x - m.mean_y) / (m.var_x * m.var_y).sqrt().sqrt();
        let var_z = fisher_z_variance(clamped, rho, u, n);
        if var_z.is_finite() && var_z >= 0.0 {
            let sigma_z = var_z.sqrt();
            let half = z_two_sided(alpha) * sigma_z;
            return Ok(FisherZInference {
                estimate,
                z_hat,
                sigma_z,
                ci_low: (z_hat - half).tanh(),
                ci_high: (z_hat + half).tanh(),
                alpha,
                n,
                method: EstimateMethod::FisherZ,
                degenerate: false,
            });
        }
    }
    Ok(bootstrap_ccc(sample, alpha, estimate, seed))
}

fn bootstrap_ccc(sample: &PairedSample, alpha: f64, estimate: f64, seed: u64) -> FisherZInference {
    let n = sample.len();
    let mut idx = alloc::vec![0usize; n];
    let mut stats: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|b| {
            let mut rng = Rng::with_stream(seed, b as u64);
            for i in idx.iter_mut() {
                *i = rng.below(n);
            }
            lin_ccc(&summarize(&sample.select(&idx), Divisor::Unbiased))
        })
        .collect();
    let zs: Vec<f64> = stats.iter().map(|r| r.clamp(-CCC_CLAMP, CCC_CLAMP).atanh()).collect();
    let zm = mean(&zs);
    let sigma_z = (zs.iter().map(|z| (z - zm) * (z - zm)).sum::<f64>() / (zs.len() as f64 - 1.0)).sqrt();
    let (lo, hi) = percentile_interval(&mut stats, alpha);
    FisherZInference {
        estimate,
        z_hat: estimate.clamp(-CCC_CLAMP, CCC_CLAMP).atanh(),
        sigma_z,
        ci_low: lo,
        ci_high: hi,
        alpha,
        n,
        method: EstimateMethod::Bootstrap,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LimitsOfAgreement {
    /// `D̄`, the mean of `D_i = X_i − Y_i`.
    pub mean_diff: f64,
    /// `s_D` with divisor `n − 1`.
    pub sd_diff: f64,
    pub lower: f64,
    pub upper: f64,
    pub multiplier: f64,
}

/// Limits of agreement plus the `(M̄_i, D_i)` point set of the Bland–Altman plot.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BlandAltman {
    pub limits: LimitsOfAgreement,
    pub means: Vec<f64>,
    pub diffs: Vec<f64>,
}

impl BlandAltman {
    /// Fraction of differences inside the limits.
    pub fn coverage(&self) -> f64 {
        let l = &self.limits;
        self.diffs.iter().filter(|&&d| d >= l.lower && d <= l.upper).count() as f64 / self.diffs.len() as f64
    }
}

pub fn bland_altman(sample: &PairedSample, multiplier: f64) -> Result<BlandAltman> {
    if !(multiplier >= 0.0) || !multiplier.is_finite() {
        return Err(Error::InvalidArgument(format!("multiplier = {multiplier}")));
    }
    let diffs = sample.differences();
    let means: Vec<f64> = sample.pairs().map(|(x, y)| 0.5 * (x + y)).collect();
    let mean_diff = mean(&diffs);
    let ss: f64 = diffs.iter().map(|d| (d - mean_diff) * (d - mean_diff)).sum();
    let sd_diff = (ss / (diffs.len() as f64 - 1.0)).sqrt();
    let limits = LimitsOfAgreement {
        mean_diff,
        sd_diff,
        lower: mean_diff - multiplier * sd_diff,
        upper: mean_diff + multiplier * sd_diff,
        multiplier,
    };
    Ok(BlandAltman { limits, means, diffs })
}

/// CCC from the mean squared difference and the ML covariance:
/// `ρ̂_c = (1 + MSE / (2σ̂_XY))⁻¹`.
pub fn ccc_from_mse(mse: f64, cov_ml: f64) -> Result<f64> {
    if !(mse >= 0.0) {
        return Err(Error::InvalidArgument(format!("mse = {mse} must be nonnegative")));
    }
    if cov_ml == 0.0 {
        return Err(Error::Degenerate("zero covariance".into()));
    }
    Ok(1.0 / (1.0 + mse / (2.0 * cov_ml)))
}

/// First-order approximation of `ρ_c(X, g(X))` from `g(μ)`, `g'(μ)` and
/// the moments of `X`.
pub fn ccc_transform_first_order(g_at_mu: f64, g_prime_at_mu: f64, mu_x: f64, var_x: f64) -> Result<f64> {
    if !(var_x > 0.0) {
        return Err(Error::InvalidArgument(format!("var_x = {var_x} must be positive")));
    }
    let den = var_x * (1.0 + g_prime_at_mu * g_prime_at_mu) + (mu_x - g_at_mu).powi(2);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate("zero denominator".into()));
    }
    Ok(2.0 * g_prime_at_mu * var_x / den)
}

/// Second-order expansion of `ρ_c(X, X + εh(X))` in `ε`:
/// `1 − ε²h(μ)²/(2σ²) − ε²h'(μ)²/2`. Meaningful for `|ε| ≪ 1`.
pub fn ccc_transform_perturbation(h_at_mu: f64, h_prime_at_mu: f64, var_x: f64, eps: f64) -> Result<f64> {
    if !(var_x > 0.0) {
        return Err(Error::InvalidArgument(format!("var_x = {var_x} must be positive")));
    }
    let e2 = eps * eps;
    Ok(1.0 - e2 * h_at_mu * h_at_mu / (2.0 * var_x) - 0.5 * e2 * h_prime_at_mu * h_prime_at_mu)
}

/// Least-squares calibration of the reference (`y`) on the candidate (`x`)
/// followed by CCC inference between observed reference and predictions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CalibrationReport {
    pub n: usize,
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
    /// `1 − (1 − R²)(n − 1)/(n − 2)`.
    pub r2_adj: f64,
    pub residual_sd: f64,
    pub predicted: Vec<f64>,
    pub ccc: FisherZInference,
}

impl CalibrationReport {
    /// Pairs (observed reference, prediction).
    pub fn agreement_sample(&self, sample: &PairedSample) -> Result<PairedSample> {
        PairedSample::new(sample.y().to_vec(), self.predicted.clone())
    }
}

pub fn calibrate_and_agree(sample: &PairedSample, alpha: f64) -> Result<CalibrationReport> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let m = summarize(sample, Divisor::Ml);
    let scale = m.mean_x.abs().max(1.0);
    if m.var_x <= 1e-24 * scale * scale {
        return Err(Error::SingularFit("predictor is constant".into()));
    }
    let slope = m.cov_xy / m.var_x;
    let intercept = m.mean_y - slope * m.mean_x;
    let predicted: Vec<f64> = sample.x().iter().map(|x| intercept + slope * x).collect();
    let sse: f64 = sample.y().iter().zip(&predicted).map(|(y, p)| (y - p) * (y - p)).sum();
    let sst = m.var_y * n as f64;
    let r2 = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 1.0 };
    let nf = n as f64;
    let r2_adj = 1.0 - (1.0 - r2) * (nf - 1.0) / (nf - 2.0);
    let residual_sd = (sse / (nf - 2.0)).sqrt();
    let agree = PairedSample::new(sample.y().to_vec(), predicted.clone())?;
    let ccc = ccc_inference(&agree, alpha)?;
    Ok(CalibrationReport { n, intercept, slope, r2, r2_adj, residual_sd, predicted, ccc })
}
