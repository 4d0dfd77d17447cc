//! Paired samples, moments, and bivariate normal fitting.

use alloc::{format, vec::Vec};
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::{linalg, Error, Result, Rng};

/// Aligned measurements `(x_i, y_i)` of the same subjects by two methods.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: x.len() });
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            let i = i % x.len();
            return Err(Error::InvalidData(format!("non-finite value in pair {i}")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    /// Differences `x_i - y_i`.
    pub fn differences(&self) -> Vec<f64> {
        self.pairs().map(|(x, y)| x - y).collect()
    }

    /// Mean squared difference `(1/n) Σ (x_i - y_i)²`.
    pub fn mse(&self) -> f64 {
        self.pairs().map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / self.len() as f64
    }

    /// Sample with the pairs at `indices` (bootstrap resampling).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self { x: indices.iter().map(|&i| self.x[i]).collect(), y: indices.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.y)
    }
}

/// Divisor for variances and covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "snake_case"))]
pub enum Divisor {
    /// `n - 1`
    Unbiased,
    /// `n` (maximum likelihood under normality)
    Ml,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SampleMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    pub n: usize,
    pub divisor: Divisor,
}

impl SampleMoments {
    /// Same moments under another divisor convention.
    pub fn with_divisor(&self, divisor: Divisor) -> Self {
        let n = self.n as f64;
        let factor = match (self.divisor, divisor) {
            (Divisor::Unbiased, Divisor::Ml) => (n - 1.0) / n,
            (Divisor::Ml, Divisor::Unbiased) => n / (n - 1.0),
            _ => 1.0,
        };
        Self { var_x: self.var_x * factor, var_y: self.var_y * factor, cov_xy: self.cov_xy * factor, divisor, ..*self }
    }

    pub fn to_params(&self) -> BivariateNormalParams {
        BivariateNormalParams {
            mu_x: self.mean_x,
            mu_y: self.mean_y,
            var_x: self.var_x,
            var_y: self.var_y,
            cov_xy: clamp_cov(self.cov_xy, self.var_x, self.var_y),
        }
    }
}

fn clamp_cov(cov: f64, vx: f64, vy: f64) -> f64 {
    let bound = (vx * vy).sqrt();
    cov.clamp(-bound, bound)
}

/// Means, variances and covariance (two-pass).
pub fn summarize(sample: &PairedSample, divisor: Divisor) -> SampleMoments {
    let n = sample.len();
    let nf = n as f64;
    let mean_x = sample.x.iter().sum::<f64>() / nf;
    let mean_y = sample.y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in sample.pairs() {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let d = match divisor {
        Divisor::Unbiased => nf - 1.0,
        Divisor::Ml => nf,
    };
    SampleMoments { mean_x, mean_y, var_x: sxx / d, var_y: syy / d, cov_xy: sxy / d, n, divisor }
}

/// Parameters of a bivariate normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BivariateNormalParams {
    pub mu_x: f64,
    pub mu_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
}

impl BivariateNormalParams {
    pub fn new(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov_xy: f64) -> Result<Self> {
        let p = Self { mu_x, mu_y, var_x, var_y, cov_xy };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu_x, self.mu_y, self.var_x, self.var_y, self.cov_xy];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite parameter".into()));
        }
        if self.var_x < 0.0 || self.var_y < 0.0 {
            return Err(Error::InvalidCovariance("negative variance".into()));
        }
        let bound = self.var_x * self.var_y;
        if self.cov_xy * self.cov_xy > bound + 1e-12 * bound.max(1.0) {
            return Err(Error::InvalidCovariance(format!("cov_xy² = {} exceeds var_x·var_y = {}", self.cov_xy * self.cov_xy, bound)));
        }
        Ok(())
    }

    /// `μ_D = μ_X − μ_Y`
    pub fn mu_d(&self) -> f64 {
        self.mu_x - self.mu_y
    }

    /// `σ_D² = σ_X² + σ_Y² − 2σ_XY`, floored at zero.
    pub fn var_d(&self) -> f64 {
        (self.var_x + self.var_y - 2.0 * self.cov_xy).max(0.0)
    }

    pub fn correlation(&self) -> Option<f64> {
        (self.var_x > 0.0 && self.var_y > 0.0).then(|| self.cov_xy / (self.var_x * self.var_y).sqrt())
    }

    /// Population CCC `2σ_XY / (σ_X² + σ_Y² + (μ_X − μ_Y)²)`.
    pub fn ccc(&self) -> Option<f64> {
        let den = self.var_x + self.var_y + self.mu_d() * self.mu_d();
        (den > 0.0).then(|| 2.0 * self.cov_xy / den)
    }

    pub fn mean_vector(&self) -> DVector<f64> {
        DVector::from_vec(alloc::vec![self.mu_x, self.mu_y])
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.var_x, self.cov_xy, self.cov_xy, self.var_y])
    }
}

/// Result of [`fit_bivariate_normal`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BivariateFit {
    pub params: BivariateNormalParams,
    /// Both channels have zero variance.
    pub degenerate: bool,
}

/// Maximum-likelihood fit (divisor `n`).
pub fn fit_bivariate_normal(sample: &PairedSample) -> BivariateFit {
    let m = summarize(sample, Divisor::Ml);
    BivariateFit { params: m.to_params(), degenerate: m.var_x == 0.0 && m.var_y == 0.0 }
}

/// Reusable multivariate normal sampler; the covariance factor is computed
/// once (see [`linalg::psd_factor`]).
#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl MvnSampler {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::ShapeMismatch { expected: (mean.len(), mean.len()), got: (cov.nrows(), cov.ncols()) });
        }
        let factor = linalg::psd_factor(cov)?;
        Ok(Self { mean, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn draw_into(&self, rng: &mut Rng, z: &mut DVector<f64>, out: &mut DVector<f64>) {
        for v in z.iter_mut() {
            *v = rng.normal();
        }
        self.factor.mul_to(z, out);
        *out += &self.mean;
    }

    pub fn draw(&self, rng: &mut Rng) -> DVector<f64> {
        let d = self.dim();
        let mut z = DVector::zeros(d);
        let mut out = DVector::zeros(d);
        self.draw_into(rng, &mut z, &mut out);
        out
    }
}

/// `n` independent draws (rows) from `N(mean, cov)`.
pub fn sample_mvn(mean: &DVector<f64>, cov: &DMatrix<f64>, n: usize, rng: &mut Rng) -> Result<DMatrix<f64>> {
    let sampler = MvnSampler::new(mean.clone(), cov)?;
    let d = sampler.dim();
    let mut out = DMatrix::zeros(n, d);
    let mut z = DVector::zeros(d);
    let mut row = DVector::zeros(d);
    for i in 0..n {
        sampler.draw_into(rng, &mut z, &mut row);
        out.row_mut(i).copy_from(&row.transpose());
    }
    Ok(out)
}

/// `n` pairs from a bivariate normal.
pub fn sample_bivariate(params: &BivariateNormalParams, n: usize, rng: &mut Rng) -> Result<PairedSample> {
    let draws = sample_mvn(&params.mean_vector(), &params.covariance(), n, rng)?;
    PairedSample::new(draws.column(0).iter().copied().collect(), draws.column(1).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;
    use alloc::vec;
    use proptest::prelude::*;

    fn ps(x: &[f64], y: &[f64]) -> PairedSample {
        PairedSample::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn moments_identical_sequences() {
        let m = summarize(&ps(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Divisor::Unbiased);
        assert_eq!((m.mean_x, m.mean_y, m.var_x, m.var_y, m.cov_xy), (2.0, 2.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn moments_constant_vectors() {
        let m = summarize(&ps(&[0.0; 3], &[5.0; 3]), Divisor::Unbiased);
        assert_eq!((m.mean_x, m.mean_y, m.var_x, m.var_y, m.cov_xy), (0.0, 5.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn moments_reversed() {
        let m = summarize(&ps(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]), Divisor::Unbiased);
        assert!((m.cov_xy + 5.0 / 3.0).abs() < 1e-15);
        assert!((m.var_x - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.var_y - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(PairedSample::new(vec![1.0], vec![1.0]), Err(Error::InsufficientData { needed: 2, got: 1 }));
        assert!(matches!(PairedSample::new(vec![1.0, f64::NAN], vec![1.0, 2.0]), Err(Error::InvalidData(_))));
        assert!(matches!(PairedSample::new(vec![1.0, 2.0], vec![1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn ml_fit_small() {
        let f = fit_bivariate_normal(&ps(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]));
        let p = f.params;
        assert_eq!((p.mu_x, p.mu_y), (2.0, 2.0));
        assert!((p.var_x - 2.0 / 3.0).abs() < 1e-15 && (p.cov_xy - 2.0 / 3.0).abs() < 1e-15);
        assert!(!f.degenerate);
        let c = fit_bivariate_normal(&ps(&[4.0; 4], &[1.0; 4]));
        assert!(c.degenerate);
        assert_eq!((c.params.var_x, c.params.cov_xy), (0.0, 0.0));
    }

    #[test]
    fn ml_fit_recovers_parameters() {
        // μ = (0, 1), σ² = (1, 4), σ_XY = 1; asymptotic SEs of the ML estimates
        // are sqrt(σ²/n) for means and sqrt((σ_i²σ_j² + σ_ij²)/n) for (co)variances.
        let truth = BivariateNormalParams::new(0.0, 1.0, 1.0, 4.0, 1.0).unwrap();
        let n = 100_000;
        let s = sample_bivariate(&truth, n, &mut Rng::new(11)).unwrap();
        let p = fit_bivariate_normal(&s).params;
        let nf = n as f64;
        let se = |v: f64| v.sqrt() / nf.sqrt();
        assert!((p.mu_x - 0.0).abs() < 3.0 * se(1.0));
        assert!((p.mu_y - 1.0).abs() < 3.0 * se(4.0));
        assert!((p.var_x - 1.0).abs() < 3.0 * se(2.0 * 1.0));
        assert!((p.var_y - 4.0).abs() < 3.0 * se(2.0 * 16.0));
        assert!((p.cov_xy - 1.0).abs() < 3.0 * se(1.0 * 4.0 + 1.0));
    }

    #[test]
    fn mvn_zero_covariance_is_constant() {
        let mean = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let d = sample_mvn(&mean, &DMatrix::zeros(3, 3), 10, &mut Rng::new(1)).unwrap();
        for i in 0..10 {
            assert_eq!(d.row(i).transpose(), mean);
        }
    }

    #[test]
    fn mvn_identity_and_correlated() {
        let n = 1_000_000;
        let mean = DVector::zeros(2);
        let d = sample_mvn(&mean, &DMatrix::identity(2, 2), n, &mut Rng::new(5)).unwrap();
        let s = PairedSample::new(d.column(0).iter().copied().collect(), d.column(1).iter().copied().collect()).unwrap();
        let m = summarize(&s, Divisor::Unbiased);
        assert!((m.var_x - 1.0).abs() < 0.01 && (m.var_y - 1.0).abs() < 0.01 && m.cov_xy.abs() < 0.01);

        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        let d = sample_mvn(&mean, &cov, n, &mut Rng::new(6)).unwrap();
        let s = PairedSample::new(d.column(0).iter().copied().collect(), d.column(1).iter().copied().collect()).unwrap();
        let m = summarize(&s, Divisor::Unbiased);
        let r = m.cov_xy / (m.var_x * m.var_y).sqrt();
        assert!((r - 0.8).abs() < 0.01);
    }

    #[test]
    fn mvn_rejects_non_psd() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0]);
        assert!(matches!(sample_mvn(&DVector::zeros(2), &cov, 3, &mut Rng::new(1)), Err(Error::InvalidCovariance(_))));
    }

    #[test]
    fn mvn_bit_reproducible() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let a = sample_mvn(&DVector::zeros(2), &cov, 100, &mut Rng::new(9)).unwrap();
        let b = sample_mvn(&DVector::zeros(2), &cov, 100, &mut Rng::new(9)).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    proptest! {
        #[test]
        fn moments_invariant_under_reordering(
            pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40),
            rot in 0usize..40,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let (xs, ys): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            let a = summarize(&PairedSample::new(x, y).unwrap(), Divisor::Unbiased);
            let b = summarize(&PairedSample::new(xs, ys).unwrap(), Divisor::Unbiased);
            let tol = 1e-9 * (1.0 + a.var_x.abs() + a.var_y.abs());
            prop_assert!((a.mean_x - b.mean_x).abs() < 1e-9);
            prop_assert!((a.var_x - b.var_x).abs() < tol);
            prop_assert!((a.cov_xy - b.cov_xy).abs() < tol);
        }

        #[test]
        fn ml_is_scaled_unbiased(pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let s = PairedSample::new(x, y).unwrap();
            let n = s.len() as f64;
            let u = summarize(&s, Divisor::Unbiased);
            let m = summarize(&s, Divisor::Ml);
            prop_assert_eq!(m.var_x, summarize(&s, Divisor::Ml).var_x);
            prop_assert!((m.var_x - u.var_x * (n - 1.0) / n).abs() <= 1e-12 * (1.0 + u.var_x));
            prop_assert!((m.cov_xy - u.cov_xy * (n - 1.0) / n).abs() <= 1e-12 * (1.0 + u.cov_xy.abs()));
            prop_assert!(fit_bivariate_normal(&s).params.validate().is_ok());
        }
    }
}
