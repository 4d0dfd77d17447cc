use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use super::covariance::{correlation_matrix, grid_coordinates, SpatialModel};
use super::GridField;
use crate::linalg::psd_factor;
use crate::{Error, Result, Rng};

/// Largest number of sites per channel for exact simulation.
pub const SIMULATION_SITE_BUDGET: usize = 4096;

#[derive(Debug, Clone)]
enum Factor {
    /// `Σ = B ⊗ R`: one N × N factor of R and the 2 × 2 factor of B.
    Kronecker { l_r: DMatrix<f64>, l_b: [[f64; 2]; 2] },
    /// Factor of the full stacked covariance.
    Full(DMatrix<f64>),
}

/// Exact Gaussian field sampler for one model and grid. The covariance
/// factor is computed once; every [`FieldSimulator::draw`] costs one
/// matrix–vector product.
#[derive(Debug, Clone)]
pub struct FieldSimulator {
    model: SpatialModel,
    nx: usize,
    ny: usize,
    spacing: f64,
    factor: Factor,
}

impl FieldSimulator {
    pub fn new(model: &SpatialModel, nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        model.validate()?;
        let n = nx * ny;
        if n == 0 || !(spacing > 0.0) {
            return Err(Error::InvalidGrid(alloc::format!("{nx} × {ny} grid with spacing {spacing}")));
        }
        if n > SIMULATION_SITE_BUDGET {
            return Err(Error::BudgetExceeded { sites: n, budget: SIMULATION_SITE_BUDGET });
        }
        let coords = grid_coordinates(nx, ny, spacing);
        let factor = if model.is_separable() {
            let r = correlation_matrix(&coords, model.family.smoothness().0, model.range_x);
            let l_r = match r.clone().cholesky() {
                Some(c) => c.unpack(),
                None => psd_factor(&r).map_err(|e| Error::ModelInvalid(alloc::format!("{e}")))?,
            };
            let (sx, sy) = (model.var_x.sqrt(), model.var_y.sqrt());
            let l21 = model.rho_co * sy;
            let l22 = sy * (1.0 - model.rho_co * model.rho_co).max(0.0).sqrt();
            Factor::Kronecker { l_r, l_b: [[sx, 0.0], [l21, l22]] }
        } else {
            let c = model.stacked_covariance(&coords);
            Factor::Full(psd_factor(&c).map_err(|e| Error::ModelInvalid(alloc::format!("{e}")))?)
        };
        Ok(Self { model: *model, nx, ny, spacing, factor })
    }

    pub fn model(&self) -> &SpatialModel {
        &self.model
    }

    pub fn draw(&self, rng: &mut Rng) -> GridField {
        let n = self.nx * self.ny;
        let (xs, ys) = match &self.factor {
            Factor::Kronecker { l_r, l_b } => {
                let z1 = DVector::from_fn(n, |_, _| rng.normal());
                let z2 = DVector::from_fn(n, |_, _| rng.normal());
                let u1 = l_r * z1;
                let u2 = l_r * z2;
                (&u1 * l_b[0][0], &u1 * l_b[1][0] + &u2 * l_b[1][1])
            }
            Factor::Full(f) => {
                let z = DVector::from_fn(2 * n, |_, _| rng.normal());
                let v = f * z;
                (v.rows(0, n).into_owned(), v.rows(n, n).into_owned())
            }
        };
        let (mx, my) = (self.model.mu_x, self.model.mu_y);
        let x = DMatrix::from_fn(self.ny, self.nx, |i, j| mx + xs[i * self.nx + j]);
        let y = DMatrix::from_fn(self.ny, self.nx, |i, j| my + ys[i * self.nx + j]);
        GridField::new(x, y, self.spacing).expect("simulated values are finite")
    }
}

/// One exact draw of the bivariate field on an `nx × ny` grid.
pub fn simulate_field(model: &SpatialModel, nx: usize, ny: usize, spacing: f64, rng: &mut Rng) -> Result<GridField> {
    Ok(FieldSimulator::new(model, nx, ny, spacing)?.draw(rng))
}
