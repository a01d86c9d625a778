//! Deterministic procedural image synthesis.
//!
//! The toolkit needs pristine imagery in several places: the training corpus
//! for the no-reference model, held-out evaluation images, and the pristine
//! inputs of generated datasets. Shipping photographs is not an option for a
//! self-contained library, so images are synthesized from a seed with the
//! statistics that matter here: a smooth illumination field, multi-octave
//! texture with a roughly 1/f spectrum, and soft-edged geometric structures
//! that create genuine flat regions and sharp transitions. Every image is a
//! pure function of its seed, so the corpus is reproducible bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::{gaussian_blur, ImagePlane};
use crate::math::mix64;
// Needed when no crate in the graph links std; when one does (tests, the
// tools crate), std's inherent f64 methods shadow these exact-op methods,
// which is harmless, but the import then looks unused.
#[allow(unused_imports)]
use crate::math::F64Ext;

/// Seed namespace of the pinned training corpus.
pub const CORPUS_SEED: u64 = 0x0a51_71fe_c0de_0001;
/// Number of images in the pinned training corpus.
pub const CORPUS_SIZE: usize = 24;
/// Side length of the pinned training corpus images.
pub const CORPUS_DIM: usize = 384;

/// Seed namespace for held-out images (never overlaps the training corpus).
pub const HELD_OUT_SEED: u64 = 0x0a51_71fe_c0de_0002;

/// The pinned pristine corpus: `CORPUS_SIZE` images of `CORPUS_DIM`².
pub fn pristine_corpus() -> Vec<ImagePlane> {
    (0..CORPUS_SIZE)
        .map(|i| synth_image(mix64(&[CORPUS_SEED, i as u64]), CORPUS_DIM, CORPUS_DIM))
        .collect()
}

/// Held-out image `index` (disjoint seed namespace from the corpus).
pub fn held_out_image(index: usize, width: usize, height: usize) -> ImagePlane {
    synth_image(mix64(&[HELD_OUT_SEED, index as u64]), width, height)
}

/// Synthesizes one image from a seed. Output samples lie in [2, 253] with a
/// mean pinned near mid-gray, so downstream 8-bit quantization never clips
/// structure away.
pub fn synth_image(seed: u64, width: usize, height: usize) -> ImagePlane {
    debug_assert!(width >= 16 && height >= 16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let mut acc = vec![0.0f64; n];

    // Smooth illumination: one coarse value-noise layer.
    add_value_noise(&mut rng, &mut acc, width, height, 3, 60.0);
    // Texture octaves, amplitude halving as frequency doubles (≈ 1/f).
    let mut cells = 6;
    let mut amp = 26.0;
    while cells < width.min(height) / 3 {
        add_value_noise(&mut rng, &mut acc, width, height, cells, amp);
        cells *= 2;
        amp *= 0.5;
    }
    // Geometric structures: soft-edged ellipses and rectangles supply flat
    // regions, occlusion-like edges, and the sharpness spread the
    // no-reference patch selection relies on.
    let shapes = rng.random_range(6..=10);
    for _ in 0..shapes {
        if rng.random_range(0..2) == 0 {
            add_ellipse(&mut rng, &mut acc, width, height);
        } else {
            add_rectangle(&mut rng, &mut acc, width, height);
        }
    }

    // Normalize to mean 128 with a fixed contrast, then clamp into a range
    // that survives 8-bit quantization.
    let mean = acc.iter().sum::<f64>() / n as f64;
    let var = acc.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let scale = if var > 0.0 { 42.0 / var.sqrt() } else { 1.0 };
    for v in &mut acc {
        *v = (128.0 + (*v - mean) * scale).clamp(2.0, 253.0);
    }

    let plane = ImagePlane::from_vec(width, height, acc).expect("synth buffer is well-formed");
    // Light band-limiting: anti-aliases shape boundaries the way optics do.
    gaussian_blur(&plane, 0.6).expect("fixed sigma is valid")
}

/// Quintic smoothstep; C2-continuous interpolation avoids grid creases.
#[inline]
fn smootherstep(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn add_value_noise(
    rng: &mut ChaCha8Rng,
    acc: &mut [f64],
    width: usize,
    height: usize,
    cells: usize,
    amp: f64,
) {
    let gw = cells + 1;
    let gh = cells + 1;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
    for y in 0..height {
        let fy = y as f64 / height as f64 * cells as f64;
        let cy = (fy as usize).min(cells - 1);
        let ty = smootherstep(fy - cy as f64);
        for x in 0..width {
            let fx = x as f64 / width as f64 * cells as f64;
            let cx = (fx as usize).min(cells - 1);
            let tx = smootherstep(fx - cx as f64);
            let v00 = grid[cy * gw + cx];
            let v10 = grid[cy * gw + cx + 1];
            let v01 = grid[(cy + 1) * gw + cx];
            let v11 = grid[(cy + 1) * gw + cx + 1];
            let top = v00 + (v10 - v00) * tx;
            let bot = v01 + (v11 - v01) * tx;
            acc[y * width + x] += amp * (top + (bot - top) * ty);
        }
    }
}

fn add_ellipse(rng: &mut ChaCha8Rng, acc: &mut [f64], width: usize, height: usize) {
    let w = width as f64;
    let h = height as f64;
    let cx = rng.random_range(0.1 * w..0.9 * w);
    let cy = rng.random_range(0.1 * h..0.9 * h);
    let rx = rng.random_range(0.06 * w..0.28 * w);
    let ry = rng.random_range(0.06 * h..0.28 * h);
    let theta = rng.random_range(0.0..core::f64::consts::PI);
    let offset = signed_offset(rng);
    let (s, c) = (crate::math::sin(theta), crate::math::cos(theta));
    // Soft boundary: ~2 px transition measured in normalized radius.
    let edge = 2.0 / rx.min(ry);
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let u = (dx * c + dy * s) / rx;
            let v = (-dx * s + dy * c) / ry;
            let d = 1.0 - (u * u + v * v);
            if d > 0.0 {
                let a = (d / edge).clamp(0.0, 1.0);
                acc[y * width + x] += offset * smootherstep(a);
            }
        }
    }
}

fn add_rectangle(rng: &mut ChaCha8Rng, acc: &mut [f64], width: usize, height: usize) {
    let w = width as f64;
    let h = height as f64;
    let cx = rng.random_range(0.1 * w..0.9 * w);
    let cy = rng.random_range(0.1 * h..0.9 * h);
    let hw = rng.random_range(0.05 * w..0.25 * w);
    let hh = rng.random_range(0.05 * h..0.25 * h);
    let offset = signed_offset(rng);
    let edge = 1.5;
    for y in 0..height {
        for x in 0..width {
            let ax = (hw - (x as f64 - cx).abs()) / edge;
            let ay = (hh - (y as f64 - cy).abs()) / edge;
            if ax > 0.0 && ay > 0.0 {
                let a = smootherstep(ax.clamp(0.0, 1.0)) * smootherstep(ay.clamp(0.0, 1.0));
                acc[y * width + x] += offset * a;
            }
        }
    }
}

/// Shape contrast: magnitude in [25, 70], either polarity.
fn signed_offset(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.random_range(25.0..70.0);
    if rng.random_range(0..2) == 0 {
        mag
    } else {
        -mag
    }
}
