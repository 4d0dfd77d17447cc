//! Agreement between random vectors: the repeated-measures CCC with a weight
//! matrix and the matrix-based CCC built on a Frobenius-type norm.

use alloc::format;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{is_psd, is_symmetric, sym_inv_sqrt};
use crate::{Error, Result};

/// Relative eigenvalue floor for `V_I^{-1/2}`.
pub const INV_SQRT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MvParams {
    pub mu_x: DVector<f64>,
    pub mu_y: DVector<f64>,
    pub sigma_x: DMatrix<f64>,
    pub sigma_y: DMatrix<f64>,
    /// `Cov(X, Y)`; need not be symmetric.
    pub sigma_xy: DMatrix<f64>,
}

impl MvParams {
    pub fn new(
        mu_x: DVector<f64>,
        mu_y: DVector<f64>,
        sigma_x: DMatrix<f64>,
        sigma_y: DMatrix<f64>,
        sigma_xy: DMatrix<f64>,
    ) -> Result<Self> {
        let p = mu_x.len();
        if mu_y.len() != p {
            return Err(Error::LengthMismatch { left: p, right: mu_y.len() });
        }
        for m in [&sigma_x, &sigma_y, &sigma_xy] {
            if m.shape() != (p, p) {
                return Err(Error::ShapeMismatch { expected: (p, p), got: m.shape() });
            }
        }
        let out = Self { mu_x, mu_y, sigma_x, sigma_y, sigma_xy };
        if !is_psd(&out.stacked_covariance(), 1e-10) {
            return Err(Error::InvalidCovariance("stacked 2p × 2p covariance is not PSD".into()));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.mu_x.len()
    }

    /// `[[Σ_X, Σ_XY], [Σ_XYᵀ, Σ_Y]]`
    pub fn stacked_covariance(&self) -> DMatrix<f64> {
        let p = self.dim();
        let mut s = DMatrix::zeros(2 * p, 2 * p);
        s.view_mut((0, 0), (p, p)).copy_from(&self.sigma_x);
        s.view_mut((p, p), (p, p)).copy_from(&self.sigma_y);
        s.view_mut((0, p), (p, p)).copy_from(&self.sigma_xy);
        s.view_mut((p, 0), (p, p)).copy_from(&self.sigma_xy.transpose());
        s
    }

    pub fn stacked_mean(&self) -> DVector<f64> {
        let p = self.dim();
        DVector::from_iterator(2 * p, self.mu_x.iter().chain(self.mu_y.iter()).copied())
    }

    /// `V_D = E[(X − Y)(X − Y)ᵀ] = Σ_X + Σ_Y − Σ_XY − Σ_XYᵀ + γγᵀ`.
    pub fn v_d(&self) -> DMatrix<f64> {
        let g = &self.mu_x - &self.mu_y;
        &self.sigma_x + &self.sigma_y - &self.sigma_xy - self.sigma_xy.transpose() + &g * g.transpose()
    }

    /// `V_I = Σ_X + Σ_Y + γγᵀ`, the same moment with X and Y independent.
    pub fn v_i(&self) -> DMatrix<f64> {
        let g = &self.mu_x - &self.mu_y;
        &self.sigma_x + &self.sigma_y + &g * g.transpose()
    }
}

/// Symmetric nonnegative-definite weight matrix `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn new(d: DMatrix<f64>) -> Result<Self> {
        if !is_symmetric(&d, 1e-12) {
            return Err(Error::InvalidArgument("weight matrix must be symmetric".into()));
        }
        if !is_psd(&d, 1e-10) {
            return Err(Error::InvalidArgument("weight matrix must be nonnegative definite".into()));
        }
        Ok(Self(d))
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr(AB) without forming AB
    a.component_mul(&b.transpose()).sum()
}

/// `Tr[DΣ_XY + DΣ_XYᵀ] / (Tr[DΣ_X + DΣ_Y] + γᵀDγ)`.
pub fn rm_ccc(p: &MvParams, d: &WeightMatrix) -> Result<f64> {
    let w = d.matrix();
    if w.nrows() != p.dim() {
        return Err(Error::ShapeMismatch { expected: (p.dim(), p.dim()), got: w.shape() });
    }
    let g = &p.mu_x - &p.mu_y;
    let num = trace_product(w, &p.sigma_xy) + trace_product(w, &p.sigma_xy.transpose());
    let den = trace_product(w, &p.sigma_x) + trace_product(w, &p.sigma_y) + (g.transpose() * w * &g)[(0, 0)];
    if den <= 0.0 {
        return Err(Error::Degenerate("repeated-measures CCC denominator is zero".into()));
    }
    Ok(num / den)
}

/// `g(A) = tr(AᵀA)`. This is the squared Frobenius norm, so `g(I_p) = p`.
pub fn frobenius_g(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatrixCcc {
    pub value: f64,
    /// The raw value fell below −1; no lower bound applies to the coefficient.
    pub below_minus_one: bool,
}

/// `1 − g(V_I^{-1/2} V_D V_I^{-1/2}) / g(I)`.
pub fn matrix_ccc_population(v_d: &DMatrix<f64>, v_i: &DMatrix<f64>) -> Result<MatrixCcc> {
    let p = v_i.nrows();
    if !v_i.is_square() || v_d.shape() != (p, p) {
        return Err(Error::ShapeMismatch { expected: (p, p), got: v_d.shape() });
    }
    if !is_symmetric(v_d, 1e-10) || !is_psd(v_d, 1e-10) {
        return Err(Error::InvalidCovariance("V_D must be symmetric PSD".into()));
    }
    if !is_symmetric(v_i, 1e-10) {
        return Err(Error::InvalidCovariance("V_I must be symmetric".into()));
    }
    let root = sym_inv_sqrt(v_i, INV_SQRT_FLOOR).map_err(|dimension| Error::SingularIndependence { dimension })?;
    let m = &root * v_d * &root;
    let value = 1.0 - frobenius_g(&m) / p as f64;
    Ok(MatrixCcc { value, below_minus_one: value < -1.0 })
}

/// `n` paired observations of length-p vectors, stored as `n × p` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPairSample {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl VectorPairSample {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::ShapeMismatch { expected: x.shape(), got: y.shape() });
        }
        if x.nrows() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: x.nrows() });
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidData("vectors must have at least one component".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value".into()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Sample means and ML (divisor n) covariance blocks.
    pub fn moments(&self) -> MvParams {
        let n = self.len() as f64;
        let mu_x = self.x.row_mean().transpose();
        let mu_y = self.y.row_mean().transpose();
        let cx = DMatrix::from_fn(self.x.nrows(), self.dim(), |i, j| self.x[(i, j)] - mu_x[j]);
        let cy = DMatrix::from_fn(self.y.nrows(), self.dim(), |i, j| self.y[(i, j)] - mu_y[j]);
        MvParams { sigma_x: cx.transpose() * &cx / n, sigma_y: cy.transpose() * &cy / n, sigma_xy: cx.transpose() * &cy / n, mu_x, mu_y }
    }

    /// `V̂_D = (1/n) Σ (Xᵢ − Yᵢ)(Xᵢ − Yᵢ)ᵀ`.
    pub fn v_d(&self) -> DMatrix<f64> {
        let d = &self.x - &self.y;
        d.transpose() * &d / self.len() as f64
    }

    /// `V̂_I = (1/(n(n−1))) Σ_{i≠j} (Xᵢ − Yⱼ)(Xᵢ − Yⱼ)ᵀ`, in O(np²) from
    /// `Σ_{i,j} = n XᵀX + n YᵀY − s_x s_yᵀ − s_y s_xᵀ` minus the diagonal terms.
    pub fn v_i(&self) -> DMatrix<f64> {
        let n = self.len() as f64;
        let sx = self.x.row_sum().transpose();
        let sy = self.y.row_sum().transpose();
        let all = (self.x.transpose() * &self.x + self.y.transpose() * &self.y) * n - &sx * sy.transpose() - &sy * sx.transpose();
        let d = &self.x - &self.y;
        let diag = d.transpose() * &d;
        let v = (all - diag) / (n * (n - 1.0));
        (&v + v.transpose()) * 0.5
    }
}

pub fn matrix_ccc_sample(sample: &VectorPairSample) -> Result<MatrixCcc> {
    let v_i = sample.v_i();
    if !is_psd(&v_i, 1e-10) {
        return Err(Error::NumericFailure("estimated V_I is not PSD".into()));
    }
    let v_d = sample.v_d();
    matrix_ccc_population(&v_d, &v_i).map_err(|e| match e {
        Error::SingularIndependence { dimension } => Error::SingularIndependence { dimension },
        other => Error::NumericFailure(format!("{other}")),
    })
}
