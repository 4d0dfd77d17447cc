//! Image agreement: global SSIM, salt-and-pepper contamination, and the
//! combined Pearson / CCC / SSIM / PA / Bland–Altman report.

use alloc::{format, vec::Vec};
use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::classic::{bland_altman, lin_ccc, pearson, BlandAltman};
use crate::pa::{pa_curve, PaCurve};
use crate::sample::{fit_bivariate_normal, summarize, Divisor};
use crate::{Error, PairedSample, Result, Rng};

/// Gray-level image with its nominal value range (e.g. `(0, maxval)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pixels: DMatrix<f64>,
    range: (f64, f64),
}

impl Image {
    /// `pixels` is `rows × cols`; `range` is the nominal intensity range.
    pub fn new(pixels: DMatrix<f64>, range: (f64, f64)) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::InvalidData("image has no pixels".into()));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite pixel value".into()));
        }
        if !(range.1 > range.0) || !range.0.is_finite() || !range.1.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid intensity range {range:?}")));
        }
        Ok(Self { pixels, range })
    }

    /// Image whose range is the observed min and max (or `[v, v + 1]` when flat).
    pub fn from_pixels(pixels: DMatrix<f64>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::InvalidData("image has no pixels".into()));
        }
        let lo = pixels.min();
        let hi = pixels.max();
        Self::new(pixels, (lo, if hi > lo { hi } else { lo + 1.0 }))
    }

    pub fn pixels(&self) -> &DMatrix<f64> {
        &self.pixels
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.shape()
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Rescaled so that the nominal range maps to `[0, 1]`.
    pub fn normalized(&self) -> Self {
        let (lo, hi) = self.range;
        let s = 1.0 / (hi - lo);
        Self { pixels: self.pixels.map(|v| (v - lo) * s), range: (0.0, 1.0) }
    }

    /// Column-stacked pixel vector `vec(X)`.
    pub fn vectorized(&self) -> Vec<f64> {
        self.pixels.as_slice().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SsimConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SsimConstants {
    /// `c₁ = (0.01L)²`, `c₂ = (0.03L)²`, `c₃ = c₂/2`, unit exponents.
    pub fn for_range(l: f64) -> Self {
        let c2 = (0.03 * l).powi(2);
        Self { c1: (0.01 * l).powi(2), c2, c3: c2 / 2.0, alpha: 1.0, beta: 1.0, gamma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c3 > 0.0) {
            return Err(Error::InvalidArgument("SSIM constants must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::InvalidArgument("SSIM exponents must be nonnegative".into()));
        }
        Ok(())
    }
}

impl Default for SsimConstants {
    fn default() -> Self {
        Self::for_range(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Ssim {
    pub value: f64,
    pub luminance: f64,
    pub contrast: f64,
    pub structure: f64,
}

fn pow(v: f64, e: f64) -> f64 {
    if e == 1.0 {
        v
    } else {
        v.powf(e)
    }
}

/// Global SSIM `l^α c^β s^γ` from whole-image means, sample standard
/// deviations and covariance (divisor n − 1).
pub fn ssim(a: &Image, b: &Image, k: &SsimConstants) -> Result<Ssim> {
    k.validate()?;
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch { expected: a.dims(), got: b.dims() });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: a.len() });
    }
    let s = PairedSample::new(a.vectorized(), b.vectorized())?;
    let m = summarize(&s, Divisor::Unbiased);
    let (sx, sy) = (m.var_x.sqrt(), m.var_y.sqrt());
    let luminance = (2.0 * m.mean_x * m.mean_y + k.c1) / (m.mean_x.powi(2) + m.mean_y.powi(2) + k.c1);
    let contrast = (2.0 * sx * sy + k.c2) / (m.var_x + m.var_y + k.c2);
    let structure = (m.cov_xy + k.c3) / (sx * sy + k.c3);
    let value = pow(luminance, k.alpha) * pow(contrast, k.beta) * pow(structure, k.gamma);
    Ok(Ssim { value, luminance, contrast, structure })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum ContaminationMode {
    /// Selected pixels get zero-mean noise added to their value.
    Additive,
    /// Selected pixels are replaced by the image mean plus noise (the
    /// literal two-component mixture).
    Replace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum NoiseScale {
    /// σ² stands for the image variance: noise variance is `(τ²/σ²)·Var(image)`.
    RelativeToImage,
    /// Noise variance is τ² in image units.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Contamination {
    pub delta: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub mode: ContaminationMode,
    pub scale: NoiseScale,
}

impl Contamination {
    /// σ² = 1, τ² = 10, additive noise scaled to the image.
    pub fn new(delta: f64) -> Self {
        Self { delta, sigma2: 1.0, tau2: 10.0, mode: ContaminationMode::Additive, scale: NoiseScale::RelativeToImage }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidContamination(format!("δ = {} must lie in [0, 1]", self.delta)));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidContamination(format!("σ² = {} must be positive", self.sigma2)));
        }
        if !(self.tau2 > self.sigma2) || !self.tau2.is_finite() {
            return Err(Error::InvalidContamination(format!("τ² = {} must exceed σ² = {}", self.tau2, self.sigma2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contaminated {
    pub image: Image,
    /// Column-major corruption mask, aligned with [`Image::vectorized`].
    pub mask: Vec<bool>,
}

impl Contaminated {
    pub fn corrupted_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }
}

/// Salt-and-pepper contamination: each pixel is selected independently with
/// probability δ and receives zero-mean normal noise (see [`ContaminationMode`]
/// and [`NoiseScale`]). Pixels are visited in column-major order, one
/// Bernoulli draw each, followed by one normal draw if selected.
pub fn contaminate(img: &Image, cfg: &Contamination, rng: &mut Rng) -> Result<Contaminated> {
    cfg.validate()?;
    let v = img.vectorized();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let noise_var = match cfg.scale {
        NoiseScale::Absolute => cfg.tau2,
        NoiseScale::RelativeToImage => {
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
            cfg.tau2 / cfg.sigma2 * var
        }
    };
    let sd = noise_var.sqrt();
    let mut mask = Vec::with_capacity(v.len());
    let mut out = img.pixels.clone();
    for (p, slot) in out.iter_mut().enumerate() {
        let hit = rng.bernoulli(cfg.delta);
        mask.push(hit);
        if hit {
            let z = sd * rng.normal();
            *slot = match cfg.mode {
                ContaminationMode::Additive => v[p] + z,
                ContaminationMode::Replace => mean + z,
            };
        }
    }
    Ok(Contaminated { image: Image { pixels: out, range: img.range }, mask })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AgreementReport {
    pub pearson: f64,
    pub lin_ccc: f64,
    pub ssim: Ssim,
    pub pa_curve: PaCurve,
    pub bland_altman: BlandAltman,
}

/// All metrics on the vectorized pixels of two equally sized images. SSIM
/// constants follow the nominal range of `a`; the PA curve uses the ML fit.
pub fn agreement_report(a: &Image, b: &Image, c_grid: &[f64]) -> Result<AgreementReport> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch { expected: a.dims(), got: b.dims() });
    }
    let s = PairedSample::new(a.vectorized(), b.vectorized())?;
    let m = summarize(&s, Divisor::Unbiased);
    let ssim = ssim(a, b, &SsimConstants::for_range(a.range.1 - a.range.0))?;
    Ok(AgreementReport {
        pearson: pearson(&m)?,
        lin_ccc: lin_ccc(&m),
        ssim,
        pa_curve: pa_curve(&fit_bivariate_normal(&s).params, c_grid)?,
        bland_altman: bland_altman(&s, 1.96)?,
    })
}
