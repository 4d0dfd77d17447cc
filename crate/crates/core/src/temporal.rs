//! Agreement over time: the functional CCC with kernel-estimated weights and
//! the comovement coefficient with a circular block bootstrap.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::math::{percentile_interval, quantile_sorted, sd};
use crate::{AgreementEstimate, Error, EstimateMethod, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Kernel {
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            Self::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Kernel density estimate of the observation-time density, evaluated on the grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WeightFunction {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub kernel: Kernel,
}

impl WeightFunction {
    /// Constant weights (no kernel smoothing).
    pub fn constant(times: &[f64], level: f64) -> Result<Self> {
        if !(level >= 0.0) || !level.is_finite() {
            return Err(Error::InvalidArgument(format!("weight level {level} must be nonnegative")));
        }
        Ok(Self { times: times.to_vec(), values: alloc::vec![level; times.len()], bandwidth: f64::INFINITY, kernel: Kernel::Gaussian })
    }
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·N^{-1/5}`. Falls back to the sd
/// (or to 1 when the times have no spread at all) if the IQR vanishes.
pub fn silverman_bandwidth(times: &[f64]) -> Result<f64> {
    let n = times.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if n == 1 {
        return Ok(1.0);
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let s = sd(times);
    let spread = if iqr > 0.0 { s.min(iqr / 1.34) } else { s };
    let spread = if spread > 0.0 { spread } else { 1.0 };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// `ŵ(t_j) = (1/(N h)) Σ_k K((t_k − t_j)/h)`.
pub fn kernel_weights(times: &[f64], kernel: Kernel, bandwidth: f64) -> Result<WeightFunction> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidBandwidth(bandwidth));
    }
    let n = times.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let scale = 1.0 / (n as f64 * bandwidth);
    let values = times.iter().map(|&t| scale * times.iter().map(|&tk| kernel.eval((tk - t) / bandwidth)).sum::<f64>()).collect();
    Ok(WeightFunction { times: times.to_vec(), values, bandwidth, kernel })
}

/// `n` subjects observed at `N` common, strictly ascending times.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalSample {
    times: Vec<f64>,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl LongitudinalSample {
    /// `x` and `y` are `n × N`: row i is subject i, column j is time `t_j`.
    pub fn new(times: Vec<f64>, x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let nt = times.len();
        if nt == 0 || x.nrows() == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("times must be finite and strictly ascending".into()));
        }
        if x.ncols() != nt {
            return Err(Error::ShapeMismatch { expected: (x.nrows(), nt), got: x.shape() });
        }
        if y.shape() != x.shape() {
            return Err(Error::ShapeMismatch { expected: x.shape(), got: y.shape() });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite measurement".into()));
        }
        Ok(Self { times, x, y })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn subjects(&self) -> usize {
        self.x.nrows()
    }

    /// `Δ_j = t_{j+1} − t_j`, with `Δ_N = Δ_{N−1}` and `Δ = 1` when N = 1.
    pub fn gaps(&self) -> Vec<f64> {
        let n = self.times.len();
        if n == 1 {
            return alloc::vec![1.0];
        }
        let mut g: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        g.push(g[n - 2]);
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FunctionalCcc {
    /// Reported value, clamped to [−1, 1].
    pub value: f64,
    /// Unclamped ratio.
    pub raw: f64,
}

/// Sample functional CCC:
///
/// ```text
///        2 Σ_j w_j Δ_j (1/n) Σ_i (X_ij − X̄_j)(Y_ij − Ȳ_j)
/// ρ̂_c = ──────────────────────────────────────────────────────────────────
///        Σ_j w_j Δ_j [(X̄_j − Ȳ_j)² + (1/n) Σ_i ((X_ij − X̄_j)² + (Y_ij − Ȳ_j)²)]
/// ```
///
/// The cross term carries the same 1/n as the variance terms, so the ratio
/// is the weighted analogue of Lin's coefficient and identical curves give 1.
pub fn functional_ccc(data: &LongitudinalSample, w: &WeightFunction) -> Result<FunctionalCcc> {
    let nt = data.times.len();
    if w.values.len() != nt {
        return Err(Error::LengthMismatch { left: nt, right: w.values.len() });
    }
    if w.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be nonnegative".into()));
    }
    let n = data.subjects();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let gaps = data.gaps();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..nt {
        let xc = data.x.column(j);
        let yc = data.y.column(j);
        let mx = xc.sum() / nf;
        let my = yc.sum() / nf;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (dx, dy) = (xc[i] - mx, yc[i] - my);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        let wd = w.values[j] * gaps[j];
        num += wd * 2.0 * sxy / nf;
        den += wd * ((mx - my) * (mx - my) + (sxx + syy) / nf);
    }
    if den <= 0.0 {
        return Err(Error::Degenerate("functional CCC denominator is zero".into()));
    }
    let raw = num / den;
    Ok(FunctionalCcc { value: raw.clamp(-1.0, 1.0), raw })
}

/// Two series observed at matched times.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SeriesPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: x.len() });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value in series".into()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Raw first differences (not divided by the time spacing).
    pub fn differences(&self) -> (Vec<f64>, Vec<f64>) {
        (self.x.windows(2).map(|w| w[1] - w[0]).collect(), self.y.windows(2).map(|w| w[1] - w[0]).collect())
    }
}

fn cosine(dx: &[f64], dy: &[f64]) -> Result<f64> {
    let sxy: f64 = dx.iter().zip(dy).map(|(a, b)| a * b).sum();
    let sxx: f64 = dx.iter().map(|a| a * a).sum();
    let syy: f64 = dy.iter().map(|a| a * a).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedComovement("x"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedComovement("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine of the angle between the first-difference vectors.
pub fn comovement(pair: &SeriesPair) -> Result<f64> {
    let (dx, dy) = pair.differences();
    cosine(&dx, &dy)
}

/// `⌈m^{1/3}⌉` for a series of length m.
pub fn default_block_len(len: usize) -> usize {
    ((len as f64).cbrt().ceil() as usize).clamp(1, len.saturating_sub(1).max(1))
}

pub const MIN_RESAMPLES: usize = 100;

/// Percentile interval for the comovement from `b` circular block resamples
/// of the paired first-difference sequence. Resample k uses stream k of a key
/// drawn from `rng`. A resample whose differences all vanish is redrawn.
pub fn comovement_block_bootstrap(pair: &SeriesPair, block_len: usize, b: usize, alpha: f64, rng: &mut Rng) -> Result<AgreementEstimate> {
    if block_len < 1 || block_len > pair.len() - 1 {
        return Err(Error::InvalidArgument(format!("block length {block_len} must lie in [1, {}]", pair.len() - 1)));
    }
    if b < MIN_RESAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_RESAMPLES} resamples, got {b}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let (dx, dy) = pair.differences();
    let estimate = cosine(&dx, &dy)?;
    let m = dx.len();
    let key = rng.fork_seed();
    let mut rx = alloc::vec![0.0; m];
    let mut ry = alloc::vec![0.0; m];
    let mut stats = Vec::with_capacity(b);
    for k in 0..b {
        let mut r = Rng::with_stream(key, k as u64);
        let mut tries = 0;
        let stat = loop {
            let mut filled = 0;
            while filled < m {
                let start = r.below(m);
                for off in 0..block_len.min(m - filled) {
                    let idx = (start + off) % m;
                    rx[filled] = dx[idx];
                    ry[filled] = dy[idx];
                    filled += 1;
                }
            }
            match cosine(&rx, &ry) {
                Ok(v) => break v,
                Err(e) if tries >= 100 => return Err(e),
                Err(_) => tries += 1,
            }
        };
        stats.push(stat);
    }
    let se = sd(&stats);
    let ci = percentile_interval(&mut stats, alpha);
    Ok(AgreementEstimate { estimate, std_error: Some(se), ci: Some(ci), alpha: Some(alpha), method: EstimateMethod::BlockBootstrap })
}
