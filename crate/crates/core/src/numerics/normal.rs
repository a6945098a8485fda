//! Standard normal PDF, CDF and quantile.
//!
//! The CDF is evaluated through `erfc` on `|x|`, so `normal_cdf(x) +
//! normal_cdf(-x) == 1` holds as computed. The rounding error of `x / sqrt(2)`
//! is compensated with a first-order correction, which keeps the lower tail
//! accurate to a few ulps.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
// 1/sqrt(2) - FRAC_1_SQRT_2
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_456_5e-17;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Lower tail `P(Z <= -a)` for `a >= 0`.
fn lower_tail(a: f64) -> f64 {
    if a > 40.0 {
        return 0.0;
    }
    let z = a * FRAC_1_SQRT_2;
    // Exact rounding error of the product plus the error of the constant.
    let dz = a.mul_add(FRAC_1_SQRT_2, -z) + a * FRAC_1_SQRT_2_LO;
    let base = libm::erfc(z);
    0.5 * (base - FRAC_2_SQRT_PI * (-z * z).exp() * dz)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        lower_tail(-x)
    } else {
        1.0 - lower_tail(x)
    }
}

/// Upper tail `1 - normal_cdf(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

// Acklam's rational approximation, relative error about 1.15e-9.
fn quantile_initial(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Quantile for `p <= 0.5`, polished with Halley steps against `normal_cdf`.
fn lower_quantile(p: f64) -> f64 {
    let mut x = quantile_initial(p);
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e / normal_pdf(x);
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Standard normal quantile, the inverse of [`normal_cdf`] on `(0, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile requires p in (0,1), got {p}")));
    }
    Ok(quantile_unchecked(p))
}

/// [`normal_quantile`] without the domain check; returns `-inf`/`inf` at 0/1.
pub fn quantile_unchecked(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        lower_quantile(p)
    } else {
        // 1 - p is exact for p >= 0.5.
        -lower_quantile(1.0 - p)
    }
}

/// Quantile of the upper tail: the `x` with `normal_sf(x) = q`.
pub fn normal_isf(q: f64) -> f64 {
    -quantile_unchecked(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from 40-digit arithmetic.
    const REFERENCE: [(f64, f64); 10] = [
        (-8.0, 6.220_960_574_271_784e-16),
        (-5.0, 2.866_515_718_791_939e-7),
        (-3.0, 1.349_898_031_630_094_5e-3),
        (-1.5, 6.680_720_126_885_806e-2),
        (-0.5, 0.308_537_538_725_986_9),
        (-0.3, 0.382_088_577_811_047_36),
        (0.7, 0.758_036_347_776_926_9),
        (1.0, 0.841_344_746_068_543),
        (2.5, 0.993_790_334_674_223_9),
        (6.0, 0.999_999_999_013_412_4),
    ];

    #[test]
    fn cdf_matches_reference() {
        for (x, expected) in REFERENCE {
            let got = normal_cdf(x);
            let rel = ((got - expected) / expected).abs();
            let tol = if x.abs() <= 3.0 { 1e-15 } else { 1e-14 };
            assert!(rel <= tol, "x = {x}: got {got:e}, expected {expected:e}, rel {rel:e}");
        }
    }

    #[test]
    fn cdf_special_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(-1.959_964) - 0.025).abs() < 1e-7);
        assert_eq!(normal_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(normal_cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        assert!((normal_quantile(normal_cdf(1.7)).unwrap() - 1.7).abs() < 1e-12);
        // Upper-tail arguments are limited by the resolution of p near 1.
        for &x in &[-37.0, -20.0, -8.0, -3.3, -1e-3, 0.0, 0.4, 2.2] {
            let p = normal_cdf(x);
            let back = normal_quantile(p).unwrap();
            assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0), "{x} -> {p} -> {back}");
        }
    }

    #[test]
    fn quantile_domain() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn isf_is_reflected_quantile() {
        let q = 1e-12;
        let x = normal_isf(q);
        assert!(((normal_sf(x) - q) / q).abs() < 1e-13);
    }
}
