//! GMCAR(ρ₁, ρ₂, η₀, η₁, τ₁, τ₂) lattice model and its concordance coefficient.

use alloc::format;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    /// Symmetric 0/1 adjacency with zero diagonal.
    pub w1: DMatrix<f64>,
    pub rho1: f64,
    pub rho2: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub mu1: DVector<f64>,
    pub mu2: DVector<f64>,
}

impl LatticeSpec {
    pub fn new(w1: DMatrix<f64>, rho: (f64, f64), eta: (f64, f64), tau: (f64, f64), mu1: DVector<f64>, mu2: DVector<f64>) -> Result<Self> {
        let s = Self { w1, rho1: rho.0, rho2: rho.1, eta0: eta.0, eta1: eta.1, tau1: tau.0, tau2: tau.1, mu1, mu2 };
        s.validate()?;
        Ok(s)
    }

    pub fn nodes(&self) -> usize {
        self.w1.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.w1.nrows();
        if n == 0 || !self.w1.is_square() {
            return Err(Error::InvalidSpec("adjacency must be a nonempty square matrix".into()));
        }
        for i in 0..n {
            if self.w1[(i, i)] != 0.0 {
                return Err(Error::InvalidSpec(format!("adjacency has a self-loop at node {i}")));
            }
            for j in 0..n {
                let v = self.w1[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidSpec(format!("adjacency entry ({i}, {j}) = {v} is not 0/1")));
                }
                if v != self.w1[(j, i)] {
                    return Err(Error::InvalidSpec(format!("adjacency is not symmetric at ({i}, {j})")));
                }
            }
        }
        if self.mu1.len() != n || self.mu2.len() != n {
            return Err(Error::InvalidSpec(format!("mean vectors have lengths {} and {}, expected {n}", self.mu1.len(), self.mu2.len())));
        }
        if !(self.tau1 > 0.0 && self.tau2 > 0.0) {
            return Err(Error::InvalidSpec(format!("precisions τ₁ = {}, τ₂ = {} must be positive", self.tau1, self.tau2)));
        }
        let finite = [self.rho1, self.rho2, self.eta0, self.eta1];
        if finite.iter().chain(self.mu1.iter()).chain(self.mu2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("non-finite parameter".into()));
        }
        self.precision_factor(1)?;
        self.precision_factor(2)?;
        Ok(())
    }

    /// Diagonal matrix of neighbor counts.
    pub fn d_w(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.w1.column_sum())
    }

    /// `η₀ I + η₁ W₁`
    pub fn linking(&self) -> DMatrix<f64> {
        let n = self.nodes();
        DMatrix::identity(n, n) * self.eta0 + &self.w1 * self.eta1
    }

    /// Cholesky of the precision `τ_k (D_w − ρ_k W₁)`.
    fn precision_factor(&self, k: u8) -> Result<Cholesky<f64, Dyn>> {
        let (rho, tau) = if k == 1 { (self.rho1, self.tau1) } else { (self.rho2, self.tau2) };
        let q = (self.d_w() - &self.w1 * rho) * tau;
        Cholesky::new(q).ok_or_else(|| Error::InvalidSpec(format!("D_w − ρ{k}·W₁ is not positive definite (ρ{k} = {rho})")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmcarBlocks {
    pub s11: DMatrix<f64>,
    pub s12: DMatrix<f64>,
    pub s22: DMatrix<f64>,
}

impl GmcarBlocks {
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.s11.nrows();
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        s.view_mut((0, 0), (n, n)).copy_from(&self.s11);
        s.view_mut((0, n), (n, n)).copy_from(&self.s12);
        s.view_mut((n, 0), (n, n)).copy_from(&self.s12.transpose());
        s.view_mut((n, n), (n, n)).copy_from(&self.s22);
        s
    }
}

/// `Σ₂₂ = [τ₂(D_w − ρ₂W₁)]⁻¹`, `Σ₁₂ = AΣ₂₂`, `Σ₁₁ = [τ₁(D_w − ρ₁W₁)]⁻¹ + AΣ₂₂A`
/// with `A = η₀I + η₁W₁`.
pub fn gmcar_covariance(spec: &LatticeSpec) -> Result<GmcarBlocks> {
    spec.validate()?;
    let s22 = spec.precision_factor(2)?.inverse();
    let cond = spec.precision_factor(1)?.inverse();
    let a = spec.linking();
    let s12 = &a * &s22;
    let s11 = cond + &s12 * &a;
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    Ok(GmcarBlocks { s11: sym(s11), s12, s22: sym(s22) })
}

/// `ρ_{s,c} = Tr[J Σ₁₂ + J Σ₁₂ᵀ] / (Tr[J Σ₁₁ + J Σ₂₂] + (μ₁ − μ₂)ᵀ J (μ₁ − μ₂))`
/// with `J = 11ᵀ`, so every trace is a sum of entries.
pub fn lattice_ccc(spec: &LatticeSpec) -> Result<f64> {
    let b = gmcar_covariance(spec)?;
    let gap = (&spec.mu1 - &spec.mu2).sum();
    let den = b.s11.sum() + b.s22.sum() + gap * gap;
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::Degenerate("lattice coefficient denominator is zero".into()));
    }
    Ok(2.0 * b.s12.sum() / den)
}

/// Draws `(X₁, X₂)` by composition: `X₂ ~ N(μ₂, [τ₂(D_w − ρ₂W₁)]⁻¹)`, then
/// `X₁ | X₂ ~ N(μ₁ + A(X₂ − μ₂), [τ₁(D_w − ρ₁W₁)]⁻¹)`.
#[derive(Debug, Clone)]
pub struct GmcarSampler {
    spec: LatticeSpec,
    linking: DMatrix<f64>,
    l1: DMatrix<f64>,
    l2: DMatrix<f64>,
}

impl GmcarSampler {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            linking: spec.linking(),
            l1: spec.precision_factor(1)?.unpack(),
            l2: spec.precision_factor(2)?.unpack(),
            spec: spec.clone(),
        })
    }

    /// With precision `Q = LLᵀ`, `L⁻ᵀz` has covariance `Q⁻¹`.
    fn draw_from_precision(l: &DMatrix<f64>, rng: &mut Rng) -> DVector<f64> {
        let z = DVector::from_fn(l.nrows(), |_, _| rng.normal());
        l.transpose().solve_upper_triangular(&z).expect("precision factor has a positive diagonal")
    }

    pub fn draw(&self, rng: &mut Rng) -> (DVector<f64>, DVector<f64>) {
        let e2 = Self::draw_from_precision(&self.l2, rng);
        let e1 = Self::draw_from_precision(&self.l1, rng);
        let x2 = &self.spec.mu2 + &e2;
        let x1 = &self.spec.mu1 + &self.linking * &e2 + e1;
        (x1, x2)
    }
}
