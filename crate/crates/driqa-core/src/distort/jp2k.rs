//! Wavelet deadzone quantization, the lossy core of JPEG 2000 without any
//! coding pass: a 3-level CDF 9/7 transform (lifting implementation,
//! whole-sample symmetric extension), uniform deadzone quantization per
//! subband, dequantization, inverse transform.
//!
//! Quantizer steps are `BASE_STEP × scale / gain`, where `gain` is the L2
//! norm of the subband's synthesis basis function. Dividing by the synthesis
//! norm makes every subband contribute roughly equally to pixel-domain error
//! for a given `scale`, mirroring how JPEG 2000's implicit quantization
//! weights its subbands.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::image::ImagePlane;
// Needed when no crate in the graph links std; when one does (tests, the
// tools crate), std's inherent f64 methods shadow these exact-op methods,
// which is harmless, but the import then looks unused.
#[allow(unused_imports)]
use crate::math::F64Ext;
use crate::{Error, Result};

/// Decomposition depth.
pub const LEVELS: usize = 3;

/// Base quantizer step before scaling; calibrated so ladder scale 0.1 is
/// visually lossless and scale 4.0 is severe on [0, 255] imagery.
pub const BASE_STEP: f64 = 24.0;

// CDF 9/7 lifting coefficients (irreversible JPEG 2000 filter).
const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
// DC gain of the raw lifted lowpass branch; dividing by it gives the
// classic analysis filters (lowpass DC gain 1, highpass Nyquist gain 2).
const K: f64 = 1.230_174_104_914_001;

/// Synthesis-basis L2 norms in band order LL3, then (HL, LH, HH) for levels
/// 3, 2, 1. Frozen from `compute_synthesis_gains`, which the tests replay.
const SUBBAND_GAINS: [f64; 10] = [
    8.416_744_177_952_864,
    4.183_367_334_450_824_9,
    4.183_367_334_450_825_8,
    2.079_255_574_951_635_9,
    1.996_812_457_154_977,
    1.996_812_457_154_977_2,
    0.967_215_806_032_981_41,
    1.011_286_475_626_872_5,
    1.011_286_475_626_872_2,
    0.520_217_981_897_461_05,
];

/// One subband's rectangle in the Mallat layout.
#[derive(Debug, Clone, Copy)]
struct BandRect {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
}

/// Bands in gain-table order for a padded (w, h).
fn band_rects(w: usize, h: usize) -> [BandRect; 10] {
    let (lw, lh) = (w >> LEVELS, h >> LEVELS);
    let mut rects = [BandRect {
        x0: 0,
        y0: 0,
        w: lw,
        h: lh,
    }; 10];
    let mut idx = 1;
    for level in (1..=LEVELS).rev() {
        let bw = w >> level;
        let bh = h >> level;
        // HL: horizontal highpass (right), vertical lowpass (top).
        rects[idx] = BandRect {
            x0: bw,
            y0: 0,
            w: bw,
            h: bh,
        };
        rects[idx + 1] = BandRect {
            x0: 0,
            y0: bh,
            w: bw,
            h: bh,
        };
        rects[idx + 2] = BandRect {
            x0: bw,
            y0: bh,
            w: bw,
            h: bh,
        };
        idx += 3;
    }
    rects
}

/// Whole-sample symmetric reflection into [0, n).
#[inline]
fn reflect(mut i: isize, n: usize) -> usize {
    let period = 2 * (n as isize - 1);
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n as isize {
            i = period - i;
        } else {
            return i as usize;
        }
    }
}

/// One lifting pass: `x[i] += coef·(x[i−1] + x[i+1])` over positions of the
/// given parity, with symmetric extension at the ends.
fn lift(x: &mut [f64], coef: f64, parity: usize) {
    let n = x.len();
    let mut i = parity;
    while i < n {
        let left = x[reflect(i as isize - 1, n)];
        let right = x[reflect(i as isize + 1, n)];
        x[i] += coef * (left + right);
        i += 2;
    }
}

/// Forward 9/7 on an even-length line; output is low | high halves.
fn forward_1d(line: &mut [f64], scratch: &mut Vec<f64>) {
    let n = line.len();
    debug_assert!(n >= 2 && n % 2 == 0);
    lift(line, ALPHA, 1);
    lift(line, BETA, 0);
    lift(line, GAMMA, 1);
    lift(line, DELTA, 0);
    scratch.clear();
    scratch.extend_from_slice(line);
    let half = n / 2;
    for i in 0..half {
        line[i] = scratch[2 * i] / K;
        line[half + i] = scratch[2 * i + 1] * K;
    }
}

/// Inverse of `forward_1d`.
fn inverse_1d(line: &mut [f64], scratch: &mut Vec<f64>) {
    let n = line.len();
    let half = n / 2;
    scratch.clear();
    scratch.resize(n, 0.0);
    for i in 0..half {
        scratch[2 * i] = line[i] * K;
        scratch[2 * i + 1] = line[half + i] / K;
    }
    line.copy_from_slice(scratch);
    lift(line, -DELTA, 0);
    lift(line, -GAMMA, 1);
    lift(line, -BETA, 0);
    lift(line, -ALPHA, 1);
}

fn transform_2d(data: &mut [f64], w: usize, h: usize, inverse: bool) {
    let mut scratch = Vec::new();
    let mut col = Vec::new();
    if !inverse {
        let (mut cw, mut ch) = (w, h);
        for _ in 0..LEVELS {
            for y in 0..ch {
                forward_1d(&mut data[y * w..y * w + cw], &mut scratch);
            }
            for x in 0..cw {
                col.clear();
                col.extend((0..ch).map(|y| data[y * w + x]));
                forward_1d(&mut col, &mut scratch);
                for (y, &v) in col.iter().enumerate() {
                    data[y * w + x] = v;
                }
            }
            cw /= 2;
            ch /= 2;
        }
    } else {
        let (mut cw, mut ch) = (w >> (LEVELS - 1), h >> (LEVELS - 1));
        for _ in 0..LEVELS {
            for x in 0..cw {
                col.clear();
                col.extend((0..ch).map(|y| data[y * w + x]));
                inverse_1d(&mut col, &mut scratch);
                for (y, &v) in col.iter().enumerate() {
                    data[y * w + x] = v;
                }
            }
            for y in 0..ch {
                inverse_1d(&mut data[y * w..y * w + cw], &mut scratch);
            }
            cw *= 2;
            ch *= 2;
        }
    }
}

/// Deadzone quantize-dequantize: values below one step collapse to zero,
/// survivors reconstruct at bin centers (offset 1/2).
#[inline]
fn deadzone(c: f64, step: f64) -> f64 {
    let q = (c.abs() / step).floor();
    if q == 0.0 {
        0.0
    } else {
        let mag = (q + 0.5) * step;
        if c < 0.0 {
            -mag
        } else {
            mag
        }
    }
}

/// Compresses and immediately decompresses with per-subband steps
/// `BASE_STEP × scale / gain`. Dimensions that are not multiples of 2^LEVELS
/// are symmetrically extended and cropped back. Output is not clamped.
pub fn simulate(img: &ImagePlane, scale: f64) -> Result<ImagePlane> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::Domain(format!(
            "jp2k quantizer scale must be positive, got {scale}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let mult = 1 << LEVELS;
    let pw = w.div_ceil(mult) * mult;
    let ph = h.div_ceil(mult) * mult;
    let mut buf = vec![0.0f64; pw * ph];
    for y in 0..ph {
        let sy = reflect(y as isize, h);
        for x in 0..pw {
            let sx = reflect(x as isize, w);
            buf[y * pw + x] = img.get(sx, sy) - 128.0;
        }
    }

    transform_2d(&mut buf, pw, ph, false);
    for (rect, gain) in band_rects(pw, ph).iter().zip(SUBBAND_GAINS) {
        let step = BASE_STEP * scale / gain;
        for y in rect.y0..rect.y0 + rect.h {
            for x in rect.x0..rect.x0 + rect.w {
                buf[y * pw + x] = deadzone(buf[y * pw + x], step);
            }
        }
    }
    transform_2d(&mut buf, pw, ph, true);

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(buf[y * pw + x] + 128.0);
        }
    }
    ImagePlane::from_vec(w, h, out)
}

/// Recomputes the synthesis-basis norms that `SUBBAND_GAINS` freezes: place
/// a unit coefficient at a band's center, synthesize, take the L2 norm.
#[cfg(test)]
pub(crate) fn compute_synthesis_gains() -> [f64; 10] {
    let (w, h) = (128, 128);
    let mut gains = [0.0f64; 10];
    for (b, rect) in band_rects(w, h).iter().enumerate() {
        let mut buf = vec![0.0f64; w * h];
        let cx = rect.x0 + rect.w / 2;
        let cy = rect.y0 + rect.h / 2;
        buf[cy * w + cx] = 1.0;
        transform_2d(&mut buf, w, h, true);
        gains[b] = buf.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    gains
}
