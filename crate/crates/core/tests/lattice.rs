use concord_core::spatial::{gmcar_covariance, lattice_ccc, GmcarSampler, LatticeSpec};
use concord_core::Rng;
use nalgebra::{DMatrix, DVector};

fn five_node_spec() -> LatticeSpec {
    // Path 0-1-2-3-4 plus chord 1-3.
    let mut w = DMatrix::zeros(5, 5);
    for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)] {
        w[(i, j)] = 1.0;
        w[(j, i)] = 1.0;
    }
    let mu1 = DVector::from_vec(vec![0.5, 0.0, -0.2, 0.1, 0.3]);
    let mu2 = DVector::from_vec(vec![0.4, 0.1, -0.1, 0.0, 0.2]);
    LatticeSpec::new(w, (0.6, 0.3), (0.5, 0.2), (1.5, 2.0), mu1, mu2).unwrap()
}

#[test]
fn conditional_factorization_reproduces_joint_covariance() {
    let spec = five_node_spec();
    let sigma = gmcar_covariance(&spec).unwrap().stacked();
    let mu: DVector<f64> = DVector::from_iterator(10, spec.mu1.iter().chain(spec.mu2.iter()).copied());
    let sampler = GmcarSampler::new(&spec).unwrap();
    let mut rng = Rng::new(0x6AC4);
    let draws = 100_000;
    let mut sum = DVector::<f64>::zeros(10);
    let mut cross = DMatrix::<f64>::zeros(10, 10);
    for _ in 0..draws {
        let (x1, x2) = sampler.draw(&mut rng);
        let z = DVector::from_iterator(10, x1.iter().chain(x2.iter()).copied()) - &mu;
        sum += &z;
        cross += &z * z.transpose();
    }
    let nf = draws as f64;
    let mean = sum / nf;
    let emp = cross / nf - &mean * mean.transpose();
    for i in 0..10 {
        let se = (sigma[(i, i)] / nf).sqrt();
        assert!(mean[i].abs() <= 3.0 * se, "mean {i}: {}", mean[i]);
        for j in 0..10 {
            // Var of a normal product moment: (Σ_ii Σ_jj + Σ_ij²)/N.
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / nf).sqrt();
            assert!((emp[(i, j)] - sigma[(i, j)]).abs() <= 3.0 * se, "({i}, {j}): {} vs {}", emp[(i, j)], sigma[(i, j)]);
        }
    }
}

#[test]
fn empirical_coefficient_matches_lattice_ccc() {
    // ρ_{s,c} with D = J_n is the CCC of the node totals S₁ = 1ᵀX₁, S₂ = 1ᵀX₂.
    let spec = five_node_spec();
    let want = lattice_ccc(&spec).unwrap();
    let sampler = GmcarSampler::new(&spec).unwrap();
    let mut rng = Rng::new(11);
    let draws = 100_000;
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..draws {
        let (x1, x2) = sampler.draw(&mut rng);
        let (s1, s2) = (x1.sum(), x2.sum());
        num += 2.0 * s1 * s2;
        den += s1 * s1 + s2 * s2;
    }
    let m1: f64 = spec.mu1.sum();
    let m2: f64 = spec.mu2.sum();
    // E[2S₁S₂] − 2m₁m₂ over E[S₁² + S₂²] − m₁² − m₂² + (m₁ − m₂)² reduces to the definition.
    let got = (num / draws as f64 - 2.0 * m1 * m2) / (den / draws as f64 - m1 * m1 - m2 * m2 + (m1 - m2).powi(2));
    assert!((got - want).abs() < 0.02, "{got} vs {want}");
}
