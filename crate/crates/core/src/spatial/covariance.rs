//! Isotropic correlation functions and bivariate stationary covariance models.

use alloc::{format, vec::Vec};
use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::linalg::psd_factor;
use crate::{Error, Result};

/// Matérn smoothness presets with closed-form correlation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Smoothness {
    /// ν = 1/2: `e^{−t}`
    Half,
    /// ν = 3/2: `(1 + t) e^{−t}`
    ThreeHalves,
    /// ν = 5/2: `(1 + t + t²/3) e^{−t}`
    FiveHalves,
}

impl Smoothness {
    pub fn nu(&self) -> f64 {
        match self {
            Self::Half => 0.5,
            Self::ThreeHalves => 1.5,
            Self::FiveHalves => 2.5,
        }
    }

    pub fn from_nu(nu: f64) -> Result<Self> {
        match nu {
            0.5 => Ok(Self::Half),
            1.5 => Ok(Self::ThreeHalves),
            2.5 => Ok(Self::FiveHalves),
            _ => Err(Error::InvalidArgument(format!("smoothness {nu} not in {{0.5, 1.5, 2.5}}"))),
        }
    }

    /// Correlation at distance `r` with range `a`, with `t = r / a`.
    #[inline]
    pub fn correlation(&self, r: f64, a: f64) -> f64 {
        let t = r / a;
        let e = (-t).exp();
        match self {
            Self::Half => e,
            Self::ThreeHalves => (1.0 + t) * e,
            Self::FiveHalves => (1.0 + t + t * t / 3.0) * e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Family {
    /// Exponential correlation in all three components.
    Exponential,
    /// Matérn with a fixed smoothness per component.
    Matern { x: Smoothness, y: Smoothness, xy: Smoothness },
}

impl Family {
    pub fn matern_common(s: Smoothness) -> Self {
        Self::Matern { x: s, y: s, xy: s }
    }

    /// Smoothness of (C_X, C_Y, C_XY).
    pub fn smoothness(&self) -> (Smoothness, Smoothness, Smoothness) {
        match *self {
            Self::Exponential => (Smoothness::Half, Smoothness::Half, Smoothness::Half),
            Self::Matern { x, y, xy } => (x, y, xy),
        }
    }

    pub fn has_common_smoothness(&self) -> bool {
        let (a, b, c) = self.smoothness();
        a == b && b == c
    }
}

/// Bivariate stationary isotropic covariance model
/// `C_X(h) = σ_X² r_X(‖h‖)`, `C_Y(h) = σ_Y² r_Y(‖h‖)`,
/// `C_XY(h) = ρ σ_X σ_Y r_XY(‖h‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpatialModel {
    pub family: Family,
    pub mu_x: f64,
    pub mu_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub range_x: f64,
    pub range_y: f64,
    pub range_xy: f64,
    /// Co-located cross-correlation `C_XY(0) / (σ_X σ_Y)`.
    pub rho_co: f64,
}

impl SpatialModel {
    /// Common range and smoothness: `C(h) = B r(‖h‖)`, always valid for |ρ| ≤ 1.
    pub fn separable(family: Family, mu: (f64, f64), var: (f64, f64), range: f64, rho_co: f64) -> Result<Self> {
        let m =
            Self { family, mu_x: mu.0, mu_y: mu.1, var_x: var.0, var_y: var.1, range_x: range, range_y: range, range_xy: range, rho_co };
        m.validate()?;
        Ok(m)
    }

    /// Parameter bounds; joint validity is checked with [`Self::check_on_grid`].
    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu_x, self.mu_y, self.var_x, self.var_y, self.rho_co];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelInvalid("non-finite parameter".into()));
        }
        if self.var_x < 0.0 || self.var_y < 0.0 {
            return Err(Error::ModelInvalid("variances must be nonnegative".into()));
        }
        for (name, r) in [("range_x", self.range_x), ("range_y", self.range_y), ("range_xy", self.range_xy)] {
            if !(r > 0.0) || r.is_nan() {
                return Err(Error::ModelInvalid(format!("{name} = {r} must be positive")));
            }
        }
        if self.rho_co.abs() > 1.0 {
            return Err(Error::ModelInvalid(format!("|rho_co| = {} exceeds 1", self.rho_co.abs())));
        }
        Ok(())
    }

    pub fn is_separable(&self) -> bool {
        self.family.has_common_smoothness() && self.range_x == self.range_y && self.range_y == self.range_xy
    }

    pub fn cov_x(&self, r: f64) -> f64 {
        self.var_x * self.family.smoothness().0.correlation(r, self.range_x)
    }

    pub fn cov_y(&self, r: f64) -> f64 {
        self.var_y * self.family.smoothness().1.correlation(r, self.range_y)
    }

    pub fn cov_xy(&self, r: f64) -> f64 {
        self.rho_co * (self.var_x * self.var_y).sqrt() * self.family.smoothness().2.correlation(r, self.range_xy)
    }

    /// Stacked `2N × 2N` covariance of `(X(s₁..s_N), Y(s₁..s_N))`.
    pub fn stacked_covariance(&self, coords: &[(f64, f64)]) -> DMatrix<f64> {
        let n = coords.len();
        let mut c = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..=i {
                let r = dist(coords[i], coords[j]);
                let (cx, cy, cxy) = (self.cov_x(r), self.cov_y(r), self.cov_xy(r));
                c[(i, j)] = cx;
                c[(j, i)] = cx;
                c[(n + i, n + j)] = cy;
                c[(n + j, n + i)] = cy;
                c[(i, n + j)] = cxy;
                c[(n + j, i)] = cxy;
                c[(j, n + i)] = cxy;
                c[(n + i, j)] = cxy;
            }
        }
        c
    }

    /// Validity on a concrete grid: the assembled covariance must factor as PSD.
    pub fn check_on_grid(&self, nx: usize, ny: usize, spacing: f64) -> Result<()> {
        self.validate()?;
        if self.is_separable() {
            return Ok(());
        }
        let coords = grid_coordinates(nx, ny, spacing);
        psd_factor(&self.stacked_covariance(&coords))
            .map(|_| ())
            .map_err(|e| Error::ModelInvalid(format!("assembled covariance is not PSD: {e}")))
    }
}

#[inline]
pub(crate) fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Site coordinates in row-major order: site `iy·nx + ix` sits at
/// `(ix·spacing, iy·spacing)`.
pub fn grid_coordinates(nx: usize, ny: usize, spacing: f64) -> Vec<(f64, f64)> {
    let mut v = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            v.push((ix as f64 * spacing, iy as f64 * spacing));
        }
    }
    v
}

/// `N × N` correlation matrix `r(‖sᵢ − sⱼ‖)`.
pub fn correlation_matrix(coords: &[(f64, f64)], s: Smoothness, range: f64) -> DMatrix<f64> {
    let n = coords.len();
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = 1.0;
        for j in 0..i {
            let v = s.correlation(dist(coords[i], coords[j]), range);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}
