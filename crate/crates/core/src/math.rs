//! Scalar helpers on top of `libm`.
//!
//! Every transcendental call in the crate goes through here so results are
//! identical on every target regardless of the platform `libm`.

use alloc::vec::Vec;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const SQRT_PI: f64 = 1.772_453_850_905_516;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(k!)` for a non-negative count stored as a float.
#[inline]
pub fn ln_factorial(k: f64) -> f64 {
    libm::lgamma(k + 1.0)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard normal log-density.
pub fn norm_log_pdf(x: f64) -> f64 {
    -0.5 * (LN_2PI + x * x)
}

/// `ln Σ exp(v_i)` with the usual max shift; empty input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| exp(v - max)).sum();
    max + ln(sum)
}

/// Normalized weights `exp(v_i) / Σ exp(v_j)`.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(values);
    values.iter().map(|v| exp(v - lse)).collect()
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| f64::max(m, abs(*v)))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}
