//! Blockwise-DCT quantization, the lossy heart of JPEG without any entropy
//! coding: 8×8 type-II DCT, quantization by the standard luminance table
//! scaled by a quality parameter, dequantization, inverse DCT.
//!
//! Because entropy coding is lossless it contributes nothing to distortion;
//! omitting it makes the operator a pure projection: applying the same
//! quantization twice reproduces the first output exactly (up to f64
//! round-off), which the tests pin.

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

/// Standard JPEG luminance quantization table (Annex K of the JPEG
/// standard), row-major.
#[rustfmt::skip]
pub const LUMA_QUANT_TABLE: [f64; 64] = [
    16.0, 11.0, 10.0, 16.0,  24.0,  40.0,  51.0,  61.0,
    12.0, 12.0, 14.0, 19.0,  26.0,  58.0,  60.0,  55.0,
    14.0, 13.0, 16.0, 24.0,  40.0,  57.0,  69.0,  56.0,
    14.0, 17.0, 22.0, 29.0,  51.0,  87.0,  80.0,  62.0,
    18.0, 22.0, 37.0, 56.0,  68.0, 109.0, 103.0,  77.0,
    24.0, 35.0, 55.0, 64.0,  81.0, 104.0, 113.0,  92.0,
    49.0, 64.0, 78.0, 87.0, 103.0, 121.0, 120.0, 101.0,
    72.0, 92.0, 95.0, 98.0, 112.0, 100.0, 103.0,  99.0,
];

/// Orthonormal 8-point DCT-II basis: `basis[k][n] = a_k·cos((2n+1)kπ/16)`.
fn dct_basis() -> [[f64; 8]; 8] {
    let mut basis = [[0.0; 8]; 8];
    let a0 = (1.0f64 / 8.0).sqrt();
    let ak = (2.0f64 / 8.0).sqrt();
    for (k, row) in basis.iter_mut().enumerate() {
        let amp = if k == 0 { a0 } else { ak };
        for (n, v) in row.iter_mut().enumerate() {
            *v = amp * crate::math::cos((2 * n + 1) as f64 * k as f64 * core::f64::consts::PI / 16.0);
        }
    }
    basis
}

/// Compresses and immediately decompresses with quantizer steps
/// `LUMA_QUANT_TABLE × quality_scale`. Dimensions that are not multiples of 8
/// are edge-replicated out and cropped back. Output is not clamped.
pub fn simulate(img: &ImagePlane, quality_scale: f64) -> Result<ImagePlane> {
    if !quality_scale.is_finite() || quality_scale <= 0.0 {
        return Err(Error::Domain(format!(
            "jpeg quantizer scale must be positive, got {quality_scale}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let pw = w.div_ceil(8) * 8;
    let ph = h.div_ceil(8) * 8;
    let mut buf = vec![0.0f64; pw * ph];
    for y in 0..ph {
        let sy = y.min(h - 1);
        for x in 0..pw {
            let sx = x.min(w - 1);
            buf[y * pw + x] = img.get(sx, sy);
        }
    }

    let basis = dct_basis();
    let mut block = [[0.0f64; 8]; 8];
    let mut coef = [[0.0f64; 8]; 8];
    for by in (0..ph).step_by(8) {
        for bx in (0..pw).step_by(8) {
            for (r, row) in block.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    // Level shift as in JPEG: center samples on zero.
                    *v = buf[(by + r) * pw + bx + c] - 128.0;
                }
            }
            // coef = C · block · Cᵀ
            let mut tmp = [[0.0f64; 8]; 8];
            for k in 0..8 {
                for c in 0..8 {
                    let mut acc = 0.0;
                    for n in 0..8 {
                        acc += basis[k][n] * block[n][c];
                    }
                    tmp[k][c] = acc;
                }
            }
            for (k, tmp_row) in tmp.iter().enumerate() {
                for l in 0..8 {
                    let mut acc = 0.0;
                    for n in 0..8 {
                        acc += tmp_row[n] * basis[l][n];
                    }
                    let step = LUMA_QUANT_TABLE[k * 8 + l] * quality_scale;
                    // Quantize (round half away from zero) and dequantize.
                    coef[k][l] = (acc / step).round() * step;
                }
            }
            // block = Cᵀ · coef · C
            for n in 0..8 {
                for l in 0..8 {
                    let mut acc = 0.0;
                    for k in 0..8 {
                        acc += basis[k][n] * coef[k][l];
                    }
                    tmp[n][l] = acc;
                }
            }
            for (r, tmp_row) in tmp.iter().enumerate() {
                for c in 0..8 {
                    let mut acc = 0.0;
                    for l in 0..8 {
                        acc += tmp_row[l] * basis[l][c];
                    }
                    buf[(by + r) * pw + bx + c] = acc + 128.0;
                }
            }
        }
    }

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        out.extend_from_slice(&buf[y * pw..y * pw + w]);
    }
    ImagePlane::from_vec(w, h, out)
}
