//! Float helpers routed through `libm` so results do not depend on `std`.

pub(crate) use libm::{cos, exp, log, sin, sqrt, tanh};

pub(crate) const TAU: f64 = core::f64::consts::TAU;

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}

/// Integer power by repeated squaring.
pub(crate) fn powi(mut base: f64, mut exp: u32) -> f64 {
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// Shortest signed representative of `x` modulo `period`.
#[inline]
pub(crate) fn wrap_delta(x: f64, period: f64) -> f64 {
    x - period * round(x / period)
}

/// `x` reduced into `[0, period)`.
#[inline]
pub(crate) fn rem_euclid(x: f64, period: f64) -> f64 {
    let r = libm::fmod(x, period);
    if r < 0.0 {
        r + period
    } else {
        r
    }
}

/// Decimal text of `x` rounded to `digits` significant digits, without
/// exponent notation or trailing zeros.
pub fn significant(x: f64, digits: usize) -> alloc::string::String {
    use alloc::format;
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { format!("{x}") };
    }
    let digits = digits.max(1) as i32;
    let magnitude = floor(libm::log10(abs(x))) as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    let scale = libm::pow(10.0, (digits - 1 - magnitude) as f64);
    let rounded = if decimals == 0 { round(x * scale) / scale } else { x };
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}
