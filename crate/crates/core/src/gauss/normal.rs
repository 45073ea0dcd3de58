use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{check_positive, check_probability, Error, Result};

/// 1 / sqrt(2 pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub(crate) fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Lower tail P(Z <= x).
#[inline]
pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail P(Z > x), accurate far into the right tail.
#[inline]
pub(crate) fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// P(a <= Z <= b) for standardized bounds a <= b.
///
/// The branch is chosen from the signs of the bounds and each branch is the
/// mirror image of another, so `std_interval_mass(a, b)` and
/// `std_interval_mass(-b, -a)` evaluate the same floating point expression.
#[inline]
pub(crate) fn std_interval_mass(a: f64, b: f64) -> f64 {
    let mass = if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        sf(-b) - sf(-a)
    } else {
        1.0 - (sf(-a) + sf(b))
    };
    mass.clamp(0.0, 1.0)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(
            "x",
            format!("density needs a finite argument, got {x}"),
        ));
    }
    Ok(pdf(x))
}

/// Standard normal distribution function. Infinite arguments are accepted.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::invalid("x", "distribution function of NaN"));
    }
    Ok(cdf(x))
}

/// The quantile `z_a` with `P(Z <= z_a) = a`.
///
/// Starts from Acklam's rational approximation and polishes with Halley steps
/// on the tail that contains the answer; for `a > 0.5` the complement `1 - a`
/// is exact, so the upper half is solved as the mirror of the lower.
pub fn z_quantile(a: f64) -> Result<f64> {
    let a = check_probability("a", a)?;
    if a > 0.5 {
        Ok(-lower_quantile(1.0 - a))
    } else {
        Ok(lower_quantile(a))
    }
}

/// P(l <= X <= u) for X ~ N(mu, v).
///
/// Satisfies `interval_probability(l, u, mu, v) == interval_probability(-u, -l, -mu, v)`
/// bit for bit.
pub fn interval_probability(l: f64, u: f64, mu: f64, v: f64) -> Result<f64> {
    if l.is_nan() || u.is_nan() || !mu.is_finite() {
        return Err(Error::invalid(
            "l, u, mu",
            "bounds and mean must not be NaN",
        ));
    }
    if l > u {
        return Err(Error::invalid(
            "l",
            format!("lower bound {l} exceeds upper bound {u}"),
        ));
    }
    let v = check_positive("v", v)?;
    let s = v.sqrt();
    Ok(std_interval_mass((l - mu) / s, (u - mu) / s))
}

fn lower_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    let mut x = acklam(p);
    for _ in 0..4 {
        let e = cdf(x) - p;
        let dens = pdf(x);
        if dens == 0.0 {
            break;
        }
        let u = e / dens;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

fn acklam(p: f64) -> f64 {
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
