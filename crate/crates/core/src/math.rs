//! Scalar special functions.

use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Inverse of [`norm_cdf`]: Acklam's rational approximation followed by one
/// Halley step, which brings the result to full double precision.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] =
        [-5.447_609_879_822_406e1, 1.615_858_368_580_409e2, -1.556_989_798_598_866e2, 6.680_131_188_771_972e1, -1.328_068_155_288_572e1];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Upper `alpha/2` quantile of the standard normal, e.g. 1.959964 for 0.05.
pub fn z_two_sided(alpha: f64) -> f64 {
    norm_quantile(1.0 - 0.5 * alpha)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with divisor `n - 1`.
pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Linear-interpolation quantile of an ascending slice (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval `[q(alpha/2), q(1 - alpha/2)]`; sorts `values` in place.
pub fn percentile_interval(values: &mut [f64], alpha: f64) -> (f64, f64) {
    values.sort_by(|a, b| a.total_cmp(b));
    (quantile_sorted(values, 0.5 * alpha), quantile_sorted(values, 1.0 - 0.5 * alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn cdf_matches_reference() {
        // High-precision reference values of Φ.
        let table = [
            (-8.0, 6.220_960_574_271_784e-16),
            (-3.3, 4.834_241_423_837_772e-4),
            (-1.0, 0.158_655_253_931_457_07),
            (-0.2, 0.420_740_290_560_896_96),
            (0.0, 0.5),
            (0.7, 0.758_036_347_776_927),
            (1.96, 0.975_002_104_851_779_5),
            (4.5, 0.999_996_602_326_875_3),
        ];
        for (x, want) in table {
            assert!((norm_cdf(x) - want).abs() <= 1e-13 * want, "x = {x}: {}", norm_cdf(x));
        }
        // statrs agrees to its own (coarser) accuracy.
        let n = Normal::new(0.0, 1.0).unwrap();
        assert!((norm_cdf(0.3) - n.cdf(0.3)).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.01, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999_999] {
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() < 1e-14 * p.max(1e-3) * 1e3, "p = {p}");
        }
        assert!((z_two_sided(0.05) - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }
}
