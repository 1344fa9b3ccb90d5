//! Log-domain helpers shared by the demapper, the likelihood and the decoder.

use std::f64::consts::LN_2;

/// Saturation level for every LLR that enters a prior or a likelihood.
pub const LLR_MAX: f64 = 50.0;

/// Clamps an LLR to `[-LLR_MAX, LLR_MAX]`; NaN carries no information and maps to zero.
#[inline]
pub fn clamp_llr(l: f64) -> f64 {
    if l.is_nan() {
        0.0
    } else {
        l.clamp(-LLR_MAX, LLR_MAX)
    }
}

/// `ln(1 / (1 + e^{-x}))`, accurate in both tails.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `ln(2 cosh x)`.
#[inline]
pub fn ln_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `ln(cosh x)`, finite for every finite `x`.
#[inline]
pub fn log_cosh(x: f64) -> f64 {
    ln_two_cosh(x) - LN_2
}

/// Jacobian logarithm `ln(e^a + e^b)`.
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}`; returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Wraps a delay (in units of `period`) onto `[0, period)`.
#[inline]
pub fn wrap_delay(tau: f64, period: f64) -> f64 {
    let w = tau.rem_euclid(period);
    if w >= period {
        0.0
    } else {
        w
    }
}

/// Minimal-magnitude representative of `a - b` modulo `period`.
#[inline]
pub fn wrapped_error(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    if d > period / 2.0 {
        d - period
    } else {
        d
    }
}

/// Deterministic sub-seed for a position in a seed tree (SplitMix64 finalizer
/// folded over the path).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}
