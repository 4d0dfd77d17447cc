//! Exact Gaussian maximum likelihood for bivariate fields.
//!
//! The fit works in the separable submodel `Σ = B ⊗ R(a)` (common range and
//! smoothness, `B` the 2 × 2 co-located covariance). For fixed `a` the
//! means and `B` have closed-form maximizers,
//!
//! ```text
//! μ̂_k = 1ᵀR⁻¹z_k / 1ᵀR⁻¹1,    B̂ = ÊᵀR⁻¹Ê / N,
//! ℓ_p(a) = −½ (2N log 2π + N log|B̂| + 2 log|R| + 2N),
//! ```
//!
//! so only `log a` is searched: a log-spaced grid provides the starts and
//! Brent's method refines every local maximum on it.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use super::covariance::{correlation_matrix, Family, Smoothness, SpatialModel};
use super::GridField;
use crate::optimize::brent_minimize;
use crate::{Error, Result};

/// Largest number of sites per channel for exact likelihood evaluation.
pub const ML_SITE_BUDGET: usize = 2500;
const GRID_POINTS: usize = 10;
const LOG_RANGE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpatialFit {
    pub model: SpatialModel,
    /// Maximized log-likelihood; `None` when the likelihood is unbounded
    /// (constant or perfectly collinear channels).
    pub log_likelihood: Option<f64>,
    pub converged: bool,
    pub evaluations: usize,
    /// At least one channel is constant: its variance is 0.
    pub degenerate: bool,
    /// The channels are exactly affinely related; |ρ_co| = 1 and the range
    /// was estimated from the x channel alone.
    pub collinear: bool,
}

impl SpatialFit {
    pub fn model(&self) -> &SpatialModel {
        &self.model
    }
}

struct Profile {
    loglik: f64,
    mu: [f64; 2],
    b: [[f64; 2]; 2],
}

/// Profile over means and `B` at range `a`, for one or two channels.
fn profile(coords: &[(f64, f64)], s: Smoothness, a: f64, chans: &[&DVector<f64>]) -> Option<Profile> {
    let n = coords.len();
    let r = correlation_matrix(coords, s, a);
    let chol = r.cholesky()?;
    let log_det_r: f64 = 2.0 * chol.l_dirty().diagonal().iter().take(n).map(|v| v.ln()).sum::<f64>();
    let k = chans.len();
    let mut m = DMatrix::from_element(n, k + 1, 1.0);
    for (c, z) in chans.iter().enumerate() {
        m.set_column(c + 1, z);
    }
    let a_mat = chol.solve(&m);
    let q11 = a_mat.column(0).sum();
    let mut mu = [0.0; 2];
    let mut e: Vec<DVector<f64>> = Vec::with_capacity(k);
    for c in 0..k {
        mu[c] = a_mat.column(c + 1).sum() / q11;
        // R⁻¹(z − μ1)
        e.push(a_mat.column(c + 1) - a_mat.column(0) * mu[c]);
    }
    let mut b = [[0.0; 2]; 2];
    for i in 0..k {
        for j in 0..k {
            let zi = chans[i].map(|v| v - mu[i]);
            b[i][j] = zi.dot(&e[j]) / n as f64;
        }
    }
    let nf = n as f64;
    let kf = k as f64;
    let log_det_b = if k == 2 { (b[0][0] * b[1][1] - b[0][1] * b[1][0]).ln() } else { b[0][0].ln() };
    let loglik = -0.5 * (kf * nf * (2.0 * PI).ln() + nf * log_det_b + kf * log_det_r + kf * nf);
    loglik.is_finite().then_some(Profile { loglik, mu, b })
}

struct Search {
    log_a: f64,
    best: Profile,
    converged: bool,
    evaluations: usize,
}

fn search(coords: &[(f64, f64)], s: Smoothness, lo: f64, hi: f64, chans: &[&DVector<f64>]) -> Result<Search> {
    let mut evaluations = 0;
    let mut eval = |t: f64| {
        evaluations += 1;
        profile(coords, s, t.exp(), chans)
    };
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| lo + (hi - lo) * k as f64 / (GRID_POINTS - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&t| eval(t).map_or(f64::NEG_INFINITY, |p| p.loglik)).collect();
    if values.iter().all(|v| !v.is_finite()) {
        return Err(Error::FitFailure(format!(
            "likelihood not finite at any of {GRID_POINTS} starting ranges in [{:.3e}, {:.3e}]",
            lo.exp(),
            hi.exp()
        )));
    }
    let mut best: Option<(f64, f64, bool)> = None;
    for k in 0..GRID_POINTS {
        let left = if k > 0 { values[k - 1] } else { f64::NEG_INFINITY };
        let right = if k + 1 < GRID_POINTS { values[k + 1] } else { f64::NEG_INFINITY };
        if !(values[k].is_finite() && values[k] >= left && values[k] >= right) {
            continue;
        }
        let a = grid[k.saturating_sub(1)];
        let b = grid[(k + 1).min(GRID_POINTS - 1)];
        let m = brent_minimize(|t| eval(t).map_or(f64::INFINITY, |p| -p.loglik), a, b, LOG_RANGE_TOL, 100);
        let (t, v) = if -m.value >= values[k] { (m.x, -m.value) } else { (grid[k], values[k]) };
        if best.is_none_or(|(_, bv, _)| v > bv) {
            best = Some((t, v, m.converged));
        }
    }
    let (log_a, _, converged) = best.ok_or_else(|| Error::FitFailure("no local maximum on the start grid".into()))?;
    let best = profile(coords, s, log_a.exp(), chans)
        .ok_or_else(|| Error::FitFailure(format!("likelihood not finite at the optimum a = {}", log_a.exp())))?;
    Ok(Search { log_a, best, converged, evaluations: evaluations + 1 })
}

fn sample_var(v: &DVector<f64>) -> f64 {
    let m = v.mean();
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Maximum-likelihood fit of a separable bivariate model (see module docs).
/// The family must use a common smoothness for all three components.
pub fn fit_bivariate_ml(field: &GridField, family: Family) -> Result<SpatialFit> {
    let n = field.sites();
    if n > ML_SITE_BUDGET {
        return Err(Error::BudgetExceeded { sites: n, budget: ML_SITE_BUDGET });
    }
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if !family.has_common_smoothness() {
        return Err(Error::InvalidArgument("maximum-likelihood fitting needs a common smoothness for C_X, C_Y and C_XY".into()));
    }
    let s = family.smoothness().0;
    let coords = field.coordinates();
    let (x, y) = (field.x_sites(), field.y_sites());
    let spacing = field.spacing();
    let extent = spacing * field.nx().max(field.ny()) as f64;
    let (lo, hi) = ((0.1 * spacing).ln(), (2.0 * extent).ln());
    let (vx, vy) = (sample_var(&x), sample_var(&y));
    let scale = x.amax().max(y.amax()).max(1.0);
    let tiny = 1e-24 * scale * scale;

    let model = |mu: (f64, f64), var: (f64, f64), range: f64, rho: f64| SpatialModel {
        family,
        mu_x: mu.0,
        mu_y: mu.1,
        var_x: var.0,
        var_y: var.1,
        range_x: range,
        range_y: range,
        range_xy: range,
        rho_co: rho,
    };

    if vx <= tiny || vy <= tiny {
        // Constant channel(s): fit the other channel on its own, if any.
        let (fit_x, fit_y) = (vx > tiny, vy > tiny);
        let (mut mu, mut var, mut range, mut evaluations, mut converged) = ((x.mean(), y.mean()), (0.0, 0.0), spacing, 0, true);
        if fit_x || fit_y {
            let z = if fit_x { &x } else { &y };
            let r = search(&coords, s, lo, hi, &[z])?;
            range = r.log_a.exp();
            evaluations = r.evaluations;
            converged = r.converged;
            if fit_x {
                mu.0 = r.best.mu[0];
                var.0 = r.best.b[0][0];
            } else {
                mu.1 = r.best.mu[0];
                var.1 = r.best.b[0][0];
            }
        }
        return Ok(SpatialFit {
            model: model(mu, var, range, 0.0),
            log_likelihood: None,
            converged,
            evaluations,
            degenerate: true,
            collinear: false,
        });
    }

    let cxy = {
        let (mx, my) = (x.mean(), y.mean());
        x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n as f64
    };
    let r_sample = cxy / (vx * vy).sqrt();
    if r_sample.abs() > 1.0 - 1e-9 {
        // y = α + βx: the bivariate likelihood is unbounded. Estimate the
        // range from x; y inherits it with |ρ_co| = 1.
        let r = search(&coords, s, lo, hi, &[&x])?;
        let beta = r_sample.signum() * (vy / vx).sqrt();
        let alpha = y.mean() - beta * x.mean();
        let var_x = r.best.b[0][0];
        return Ok(SpatialFit {
            model: model((r.best.mu[0], alpha + beta * r.best.mu[0]), (var_x, beta * beta * var_x), r.log_a.exp(), r_sample.signum()),
            log_likelihood: None,
            converged: r.converged,
            evaluations: r.evaluations,
            degenerate: false,
            collinear: true,
        });
    }

    let r = search(&coords, s, lo, hi, &[&x, &y])?;
    let b = r.best.b;
    let rho = (b[0][1] / (b[0][0] * b[1][1]).sqrt()).clamp(-1.0, 1.0);
    Ok(SpatialFit {
        model: model((r.best.mu[0], r.best.mu[1]), (b[0][0], b[1][1]), r.log_a.exp(), rho),
        log_likelihood: Some(r.best.loglik),
        converged: r.converged,
        evaluations: r.evaluations,
        degenerate: false,
        collinear: false,
    })
}

/// Exact Gaussian log-likelihood of a field under any valid model.
pub fn log_likelihood(field: &GridField, model: &SpatialModel) -> Result<f64> {
    model.validate()?;
    let n = field.sites();
    if n > ML_SITE_BUDGET {
        return Err(Error::BudgetExceeded { sites: n, budget: ML_SITE_BUDGET });
    }
    let coords = field.coordinates();
    let cov = model.stacked_covariance(&coords);
    let chol = cov.cholesky().ok_or_else(|| Error::ModelInvalid("stacked covariance is not positive definite on this grid".into()))?;
    let mut resid = DVector::zeros(2 * n);
    let (x, y) = (field.x_sites(), field.y_sites());
    for i in 0..n {
        resid[i] = x[i] - model.mu_x;
        resid[n + i] = y[i] - model.mu_y;
    }
    let l = chol.l();
    let w = l.solve_lower_triangular(&resid).ok_or_else(|| Error::NumericFailure("triangular solve failed".into()))?;
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * (2.0 * n as f64 * (2.0 * PI).ln() + log_det + w.norm_squared()))
}
