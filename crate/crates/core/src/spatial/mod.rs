//! Geostatistical and lattice agreement: spatial CCC ρ_c(h), spatial
//! probability of agreement ψ_c(h), exact Gaussian field simulation,
//! maximum-likelihood fitting, plug-in estimation, and the GMCAR lattice
//! coefficient.

mod covariance;
mod fit;
mod lattice;
mod plugin;
mod simulate;

pub use covariance::{correlation_matrix, grid_coordinates, Family, Smoothness, SpatialModel};
pub use fit::{fit_bivariate_ml, log_likelihood, SpatialFit, ML_SITE_BUDGET};
pub use lattice::{gmcar_covariance, lattice_ccc, GmcarBlocks, GmcarSampler, LatticeSpec};
pub use plugin::{empirical_cross_covariogram, empirical_variogram, spatial_ccc_from_fit, spatial_ccc_plugin, PluginEstimate};
pub use simulate::{simulate_field, FieldSimulator, SIMULATION_SITE_BUDGET};

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::pa::{pa_normal, PaSpec};
use crate::{Error, Result};

/// Bivariate raster: two co-registered `ny × nx` matrices on a square lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spacing: f64,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl GridField {
    /// `x` and `y` are `ny × nx` (row = grid row iy, column = ix).
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>, spacing: f64) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::ShapeMismatch { expected: x.shape(), got: y.shape() });
        }
        if x.is_empty() {
            return Err(Error::InvalidGrid("grid has no sites".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(alloc::format!("spacing {spacing} must be positive")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite grid value".into()));
        }
        Ok(Self { spacing, x, y })
    }

    pub fn nx(&self) -> usize {
        self.x.ncols()
    }

    pub fn ny(&self) -> usize {
        self.x.nrows()
    }

    pub fn sites(&self) -> usize {
        self.x.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn coordinates(&self) -> Vec<(f64, f64)> {
        grid_coordinates(self.nx(), self.ny(), self.spacing)
    }

    /// Channel values in site order (row-major).
    pub fn x_sites(&self) -> DVector<f64> {
        row_major(&self.x)
    }

    pub fn y_sites(&self) -> DVector<f64> {
        row_major(&self.y)
    }
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])))
}

fn norm(h: [f64; 2]) -> f64 {
    (h[0] * h[0] + h[1] * h[1]).sqrt()
}

/// `ρ_c(h) = 2C_XY(h) / (C_X(0) + C_Y(0) + (μ_X − μ_Y)²)`.
pub fn spatial_ccc(model: &SpatialModel, h: [f64; 2]) -> Result<f64> {
    model.validate()?;
    let den = model.var_x + model.var_y + (model.mu_x - model.mu_y).powi(2);
    if den <= 0.0 {
        return Err(Error::Degenerate("spatial CCC denominator is zero".into()));
    }
    Ok(2.0 * model.cov_xy(norm(h)) / den)
}

/// `σ_D²(h) = C_X(0) + C_Y(0) − 2C_XY(h)` for `D = X(s) − Y(s + h)`.
pub fn spatial_difference_variance(model: &SpatialModel, h: [f64; 2]) -> f64 {
    (model.var_x + model.var_y - 2.0 * model.cov_xy(norm(h))).max(0.0)
}

/// `ψ_c(h) = P(|X(s) − Y(s + h)| ≤ c)` under the Gaussian model.
pub fn spatial_pa(model: &SpatialModel, h: [f64; 2], c: f64) -> Result<f64> {
    model.validate()?;
    let spec = PaSpec::new(model.mu_x - model.mu_y, spatial_difference_variance(model, h).sqrt(), c)?;
    pa_normal(&spec)
}

#[cfg(test)]
mod tests;
