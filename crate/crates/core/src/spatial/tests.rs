use super::*;
use crate::classic::lin_ccc;
use crate::pa::{pa_normal, PaSpec};
use crate::sample::{Divisor, SampleMoments};
use crate::Rng;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

fn exp_model(rho: f64, range: f64) -> SpatialModel {
    SpatialModel::separable(Family::Exponential, (0.0, 0.0), (1.0, 1.0), range, rho).unwrap()
}

#[test]
fn spatial_ccc_examples() {
    let m = exp_model(0.8, 2.0);
    assert!((spatial_ccc(&m, [0.0, 0.0]).unwrap() - 0.8).abs() < 1e-15);
    assert!(spatial_ccc(&m, [1e4, 0.0]).unwrap().abs() < 1e-12);
    let m = exp_model(0.7, 2.0);
    // Independent evaluator: C_XY(h) = 0.7·exp(−‖h‖/2).
    let oracle = 2.0 * 0.7 * (-0.5f64).exp() / 2.0;
    assert!((spatial_ccc(&m, [0.6, 0.8]).unwrap() - oracle).abs() < 1e-15);
}

#[test]
fn white_noise_limit_is_lin() {
    let m = SpatialModel::separable(Family::Exponential, (1.0, 1.5), (2.0, 0.5), 1e-9, 0.6).unwrap();
    let moments = SampleMoments { mean_x: 1.0, mean_y: 1.5, var_x: 2.0, var_y: 0.5, cov_xy: 0.6, n: 10, divisor: Divisor::Ml };
    assert!((spatial_ccc(&m, [0.0, 0.0]).unwrap() - lin_ccc(&moments)).abs() < 1e-15);
}

#[test]
fn spatial_pa_reductions() {
    let m = SpatialModel::separable(Family::matern_common(Smoothness::ThreeHalves), (0.3, 0.0), (1.0, 2.0), 1.5, 0.6).unwrap();
    let c = 1.2;
    let sd0 = (1.0 + 2.0 - 2.0 * 0.6 * 2.0f64.sqrt()).sqrt();
    let direct = pa_normal(&PaSpec::new(0.3, sd0, c).unwrap()).unwrap();
    assert_eq!(spatial_pa(&m, [0.0, 0.0], c).unwrap(), direct);
    let far = pa_normal(&PaSpec::new(0.3, 3.0f64.sqrt(), c).unwrap()).unwrap();
    assert!((spatial_pa(&m, [1e4, 0.0], c).unwrap() - far).abs() < 1e-12);
    assert!(matches!(spatial_pa(&m, [0.0, 0.0], 0.0), Err(crate::Error::InvalidThreshold(_))));
}

#[test]
fn spatial_pa_monotone_in_lag() {
    let families = [
        Family::Exponential,
        Family::matern_common(Smoothness::ThreeHalves),
        Family::Matern { x: Smoothness::FiveHalves, y: Smoothness::ThreeHalves, xy: Smoothness::ThreeHalves },
    ];
    for fam in families {
        for rho in [0.0, 0.3, 0.9] {
            let m = SpatialModel {
                family: fam,
                mu_x: 0.1,
                mu_y: 0.0,
                var_x: 1.0,
                var_y: 1.3,
                range_x: 2.0,
                range_y: 1.0,
                range_xy: 1.5,
                rho_co: rho,
            };
            let mut last = f64::INFINITY;
            for k in 0..1000 {
                let v = spatial_pa(&m, [k as f64 * 0.01, 0.0], 1.0).unwrap();
                assert!(v <= last + 1e-15);
                last = v;
            }
        }
    }
}

#[test]
fn perfectly_dependent_channels_match() {
    let m = SpatialModel::separable(Family::matern_common(Smoothness::FiveHalves), (2.0, 2.0), (1.5, 1.5), 3.0, 1.0).unwrap();
    let f = simulate_field(&m, 12, 9, 1.0, &mut Rng::new(4)).unwrap();
    assert!((f.x() - f.y()).amax() < 1e-8, "{}", (f.x() - f.y()).amax());
    // Same through the full stacked factor.
    let m2 = SpatialModel { range_xy: 3.0 + 1e-13, ..m };
    assert!(!m2.is_separable());
    let f2 = simulate_field(&m2, 6, 5, 1.0, &mut Rng::new(4)).unwrap();
    assert!((f2.x() - f2.y()).amax() < 1e-6);
}

#[test]
fn simulation_is_reproducible_and_budgeted() {
    let m = exp_model(0.5, 2.0);
    let a = simulate_field(&m, 10, 10, 1.0, &mut Rng::new(9)).unwrap();
    let b = simulate_field(&m, 10, 10, 1.0, &mut Rng::new(9)).unwrap();
    assert_eq!(a, b);
    assert!(matches!(simulate_field(&m, 65, 64, 1.0, &mut Rng::new(0)), Err(crate::Error::BudgetExceeded { .. })));
}

#[test]
fn variogram_oracle() {
    let m = SpatialModel::separable(Family::Exponential, (0.0, 0.0), (2.0, 1.0), 3.0, 0.4).unwrap();
    let sim = FieldSimulator::new(&m, 20, 20, 1.0).unwrap();
    let mut rng = Rng::new(10);
    let mut acc = [0.0; 3];
    for _ in 0..100 {
        let f = sim.draw(&mut rng);
        for (k, slot) in acc.iter_mut().enumerate() {
            let lag = k as isize + 1;
            *slot += 0.5 * (empirical_variogram(f.x(), (lag, 0)).unwrap() + empirical_variogram(f.x(), (0, lag)).unwrap());
        }
    }
    for (k, total) in acc.iter().enumerate() {
        let h = (k + 1) as f64;
        let model = m.var_x - m.cov_x(h);
        assert!((total / 100.0 / model - 1.0).abs() < 0.1, "lag {h}: {} vs {model}", total / 100.0);
    }
}

#[test]
fn spatial_pa_matches_field_monte_carlo() {
    let m = SpatialModel::separable(Family::matern_common(Smoothness::ThreeHalves), (0.0, 0.0), (1.0, 1.0), 1.5, 0.8).unwrap();
    let sim = FieldSimulator::new(&m, 6, 1, 1.0).unwrap();
    let reps = 40_000;
    let mut rng = Rng::new(3);
    let mut hits = [0usize; 5];
    for _ in 0..reps {
        let f = sim.draw(&mut rng);
        for (lag, hit) in hits.iter_mut().enumerate() {
            if (f.x()[(0, 0)] - f.y()[(0, lag)]).abs() <= 1.0 {
                *hit += 1;
            }
        }
    }
    for (lag, hit) in hits.iter().enumerate() {
        let psi = spatial_pa(&m, [lag as f64, 0.0], 1.0).unwrap();
        let p = *hit as f64 / reps as f64;
        let se = (psi * (1.0 - psi) / reps as f64).sqrt();
        assert!((p - psi).abs() < 3.0 * se, "lag {lag}: {p} vs {psi}");
    }
}

#[test]
fn non_psd_model_rejected() {
    // Very different ranges with perfect co-located correlation break validity.
    let m = SpatialModel {
        family: Family::Exponential,
        mu_x: 0.0,
        mu_y: 0.0,
        var_x: 1.0,
        var_y: 1.0,
        range_x: 0.2,
        range_y: 5.0,
        range_xy: 5.0,
        rho_co: 1.0,
    };
    assert!(matches!(m.check_on_grid(6, 6, 1.0), Err(crate::Error::ModelInvalid(_))));
    assert!(matches!(simulate_field(&m, 6, 6, 1.0, &mut Rng::new(1)), Err(crate::Error::ModelInvalid(_))));
}

#[test]
fn constant_field_is_degenerate() {
    let f = GridField::new(DMatrix::from_element(5, 5, 2.0), DMatrix::from_element(5, 5, 3.0), 1.0).unwrap();
    let fit = fit_bivariate_ml(&f, Family::Exponential).unwrap();
    assert!(fit.degenerate);
    assert_eq!((fit.model.var_x, fit.model.var_y), (0.0, 0.0));
    assert!(spatial_ccc_plugin(&f, Family::Exponential, [0.0, 0.0]).is_err());
}

#[test]
fn identical_channels_plugin_is_one() {
    let m = exp_model(0.5, 2.0);
    let f = simulate_field(&m, 10, 10, 1.0, &mut Rng::new(12)).unwrap();
    let same = GridField::new(f.x().clone(), f.x().clone(), 1.0).unwrap();
    let p = spatial_ccc_plugin(&same, Family::Exponential, [0.0, 0.0]).unwrap();
    assert!(p.fit.collinear);
    assert!((p.estimate.estimate - 1.0).abs() < 1e-12);
    assert!(p.u.abs() < 1e-12 && (p.v - 1.0).abs() < 1e-12 && (p.rho_xy - 1.0).abs() < 1e-12);
}

#[test]
fn mle_dominates_truth() {
    let truth = SpatialModel::separable(Family::Exponential, (1.0, 0.5), (1.0, 2.0), 2.0, 0.6).unwrap();
    for seed in 0..3 {
        let f = simulate_field(&truth, 15, 15, 1.0, &mut Rng::new(seed)).unwrap();
        let fit = fit_bivariate_ml(&f, Family::Exponential).unwrap();
        let at_fit = log_likelihood(&f, &fit.model).unwrap();
        let at_truth = log_likelihood(&f, &truth).unwrap();
        assert!((at_fit - fit.log_likelihood.unwrap()).abs() < 1e-6 * at_fit.abs());
        assert!(at_fit >= at_truth);
    }
}

#[test]
fn mixed_smoothness_fit_rejected() {
    let f = GridField::new(DMatrix::from_fn(4, 4, |i, j| (i * j) as f64), DMatrix::from_fn(4, 4, |i, j| (i + j) as f64), 1.0).unwrap();
    let fam = Family::Matern { x: Smoothness::Half, y: Smoothness::ThreeHalves, xy: Smoothness::Half };
    assert!(matches!(fit_bivariate_ml(&f, fam), Err(crate::Error::InvalidArgument(_))));
}

#[test]
fn cross_covariogram_of_identical_channels_is_variance() {
    let x = DMatrix::from_fn(4, 5, |i, j| (i as f64 - 1.5) * (j as f64 + 0.5));
    let f = GridField::new(x.clone(), x.clone(), 1.0).unwrap();
    let m = x.mean();
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64;
    assert!((empirical_cross_covariogram(&f, (0, 0)).unwrap() - var).abs() < 1e-12);
    assert!(empirical_cross_covariogram(&f, (5, 0)).is_none());
}

fn path2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

#[test]
fn gmcar_two_node_example() {
    let mu = DVector::from_vec(vec![1.0, 2.0]);
    let spec = LatticeSpec::new(path2(), (0.0, 0.0), (0.5, 0.0), (1.0, 1.0), mu.clone(), mu).unwrap();
    let b = gmcar_covariance(&spec).unwrap();
    assert!((b.s12 - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
    assert!((b.s11 - DMatrix::identity(2, 2) * 1.25).amax() < 1e-15);
    assert!((b.s22 - DMatrix::identity(2, 2)).amax() < 1e-15);
    assert!((lattice_ccc(&spec).unwrap() - 4.0 / 9.0).abs() < 1e-12);
}

#[test]
fn gmcar_decoupled_is_zero() {
    let w = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    let mu = DVector::from_vec(vec![0.0, 1.0, 2.0]);
    let spec = LatticeSpec::new(w.clone(), (0.5, 0.3), (0.0, 0.0), (2.0, 1.0), mu.clone(), mu).unwrap();
    let b = gmcar_covariance(&spec).unwrap();
    assert_eq!(b.s12.amax(), 0.0);
    let expected = ((spec.d_w() - &w * 0.5) * 2.0).try_inverse().unwrap();
    assert!((b.s11 - expected).amax() < 1e-12);
    assert_eq!(lattice_ccc(&spec).unwrap(), 0.0);
}

#[test]
fn gmcar_mean_shift_shrinks_coefficient() {
    let mu = DVector::from_vec(vec![1.0, 2.0]);
    let mut last = f64::INFINITY;
    for k in 0..20 {
        let shift = DVector::from_element(2, k as f64 * 0.5);
        let spec = LatticeSpec::new(path2(), (0.0, 0.0), (0.5, 0.2), (1.0, 1.0), mu.clone(), &mu + shift).unwrap();
        let v = lattice_ccc(&spec).unwrap();
        assert!(v < last || k == 0);
        last = v;
    }
    assert!(last < 0.05);
}

fn random_graph(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for i in 1..n {
        let j = rng.below(i);
        w[(i, j)] = 1.0;
        w[(j, i)] = 1.0;
    }
    for _ in 0..n {
        let (i, j) = (rng.below(n), rng.below(n));
        if i != j {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
    }
    w
}

#[test]
fn gmcar_random_spec_psd_and_relabeling() {
    let mut rng = Rng::new(77);
    let n = 10;
    let w = random_graph(n, &mut rng);
    let mu1 = DVector::from_fn(n, |_, _| rng.normal());
    let mu2 = DVector::from_fn(n, |_, _| rng.normal());
    let spec = LatticeSpec::new(w.clone(), (0.6, 0.9), (0.4, 0.1), (1.5, 0.7), mu1.clone(), mu2.clone()).unwrap();
    let stacked = gmcar_covariance(&spec).unwrap().stacked();
    assert!(crate::linalg::min_eigenvalue(&stacked) > 0.0);

    let perm: Vec<usize> = vec![3, 7, 0, 9, 1, 5, 2, 8, 6, 4];
    let wp = DMatrix::from_fn(n, n, |i, j| w[(perm[i], perm[j])]);
    let pm = |m: &DVector<f64>| DVector::from_fn(n, |i, _| m[perm[i]]);
    let relabeled = LatticeSpec::new(wp, (0.6, 0.9), (0.4, 0.1), (1.5, 0.7), pm(&mu1), pm(&mu2)).unwrap();
    assert!((lattice_ccc(&spec).unwrap() - lattice_ccc(&relabeled).unwrap()).abs() < 1e-12);
}

#[test]
fn gmcar_invalid_rho_named() {
    let mu = DVector::from_vec(vec![0.0, 0.0]);
    let err = LatticeSpec::new(path2(), (1.0, 0.0), (0.0, 0.0), (1.0, 1.0), mu.clone(), mu).unwrap_err();
    match err {
        crate::Error::InvalidSpec(msg) => assert!(msg.contains("ρ1")),
        other => panic!("unexpected {other:?}"),
    }
}
