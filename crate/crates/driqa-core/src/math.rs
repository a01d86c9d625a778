//! Float helpers for the `no_std` build and small shared numeric routines.
//!
//! Reproducibility policy: every implementation-defined transcendental
//! (exp, log, pow, trig, gamma, hypot) is called through the libm free
//! functions re-exported here, never through std's inherent methods. libm is
//! pure Rust, so results are bit-identical across builds and cannot drift
//! between a constant-folded call site and a runtime call the way
//! platform-libm-backed std methods can. The `F64Ext` trait fills in only
//! the IEEE-exact operations that `core` lacks (sqrt and the integer
//! roundings); whenever any crate in the build graph links std (tests, the
//! tools crate), std's inherent f64 methods shadow these, which is harmless
//! because exact operations have only one correct answer per input.

#![allow(dead_code)]

use alloc::vec::Vec;

/// Deterministic transcendentals. `ln` is the natural log.
pub use libm::{cos, exp, hypot, log10, log2, pow, sin, tgamma};
pub use libm::log as ln;

/// IEEE-exact float methods absent from `core`, backed by libm.
pub trait F64Ext: Sized {
    fn sqrt(self) -> f64;
    /// Rounds half away from zero, like `f64::round` in std.
    fn round(self) -> f64;
    fn floor(self) -> f64;
    fn ceil(self) -> f64;
}

impl F64Ext for f64 {
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn round(self) -> f64 {
        libm::round(self)
    }
    #[inline]
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    #[inline]
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
}

/// Integer power by exact repeated squaring; deterministic in every build,
/// unlike `f64::powi`, whose lowering is unspecified.
pub fn powi(x: f64, e: i32) -> f64 {
    let mut base = if e < 0 { 1.0 / x } else { x };
    let mut n = e.unsigned_abs();
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

/// Mixes words into a well-distributed 64-bit value (splitmix64 finalizer
/// applied to a running combination). Used to derive per-stage RNG seeds so
/// sub-streams of one dataset seed are decorrelated.
pub fn mix64(words: &[u64]) -> u64 {
    let mut acc: u64 = 0x9e37_79b9_7f4a_7c15;
    for &w in words {
        acc = splitmix64(acc ^ w.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    }
    splitmix64(acc)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; cheap stable identifier hashing (not cryptographic).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Pearson linear correlation. Returns `None` when either side is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 || n < 2.0 {
        return None;
    }
    Some(sxy / (F64Ext::sqrt(sxx) * F64Ext::sqrt(syy)))
}

/// Ordinary least squares line `y = slope·x + intercept`.
/// Returns `None` when x is constant.
pub fn ols_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    debug_assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Median; sorts a copy. Even lengths average the middle pair.
pub fn median(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median: NaN"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
