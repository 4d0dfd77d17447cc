use concord_core::temporal::{functional_ccc, kernel_weights, silverman_bandwidth, Kernel, LongitudinalSample, WeightFunction};
use concord_core::Rng;
use nalgebra::DMatrix;

/// Random designs, including anti-concordant and heavily shifted pairs; the
/// raw ratio must stay in [−1, 1] without relying on the clamp.
#[test]
fn functional_ccc_range_over_simulations() {
    let mut rng = Rng::new(0xF0CC);
    for sim in 0..1000 {
        let n = 2 + rng.below(30);
        let nt = 1 + rng.below(12);
        let mut times: Vec<f64> = (0..nt).map(|_| rng.uniform() * 10.0).collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let nt = times.len();
        let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
        let shift = rng.normal() * 3.0;
        let x = DMatrix::from_fn(n, nt, |_, _| rng.normal());
        let noise = rng.uniform();
        let y = DMatrix::from_fn(n, nt, |i, j| sign * x[(i, j)] + shift + noise * rng.normal());
        let data = LongitudinalSample::new(times.clone(), x, y).unwrap();
        let w = if nt >= 2 && rng.bernoulli(0.5) {
            let kernel = if rng.bernoulli(0.5) { Kernel::Gaussian } else { Kernel::Epanechnikov };
            kernel_weights(&times, kernel, silverman_bandwidth(&times).unwrap()).unwrap()
        } else {
            WeightFunction::constant(&times, 0.5 + rng.uniform()).unwrap()
        };
        let r = functional_ccc(&data, &w).unwrap();
        assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r.raw), "simulation {sim}: {}", r.raw);
        assert!((-1.0..=1.0).contains(&r.value));
    }
}
