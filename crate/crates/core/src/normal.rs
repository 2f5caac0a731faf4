//! Standard normal distribution function.
//!
//! `Phi(z) = erfc(-z / sqrt 2) / 2`, with `erfc` from the FreeBSD msun port in
//! `libm`. Its relative error is below one ulp on the whole line, so the
//! absolute error of `Phi` stays below 1e-15 (verified against 30-digit
//! reference values in the tests).

use std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}
