//! Full-reference metrics.
//!
//! SSIM compares local luminance, contrast, and structure statistics under
//! an 11×11 Gaussian window (σ = 1.5) and pools the per-window map by its
//! mean. Windows are evaluated on the valid region only — no padding — so a
//! w×h pair yields a (w−10)×(h−10) map. MS-SSIM repeats the
//! contrast-structure comparison over a 5-scale dyadic pyramid and attaches
//! the luminance term at the coariest scale, combining per-scale means with
//! the standard exponents.
//!
//! Inputs are compared in the [0, 255] sample convention; the stabilizing
//! constants assume that dynamic range.

use alloc::format;
use alloc::vec::Vec;

use crate::image::{downsample2, gaussian_kernel, ImagePlane};
use crate::{Error, Result};

/// SSIM window radius; 11 taps at σ = 1.5.
const WINDOW_RADIUS: usize = 5;
const WINDOW_SIGMA: f64 = 1.5;
/// Dynamic range of the sample convention.
const L: f64 = 255.0;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// MS-SSIM per-scale exponents (scales fine → coarse).
pub const MSSSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
/// Minimum image side for MS-SSIM: after 4 halvings a window must still fit.
pub const MSSSIM_MIN_DIM: usize = 176;

/// Per-window quality values over the valid region.
pub type QualityMap = ImagePlane;

/// Full-reference backends bundled with the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrBackend {
    Ssim,
    Msssim,
}

impl FrBackend {
    pub fn name(self) -> &'static str {
        match self {
            FrBackend::Ssim => "ssim",
            FrBackend::Msssim => "msssim",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ssim" => Ok(FrBackend::Ssim),
            "msssim" => Ok(FrBackend::Msssim),
            other => Err(Error::Domain(format!("unknown FR backend '{other}'"))),
        }
    }

    /// Scores `b` against reference `a`.
    pub fn compare(self, a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
        match self {
            FrBackend::Ssim => ssim(a, b),
            FrBackend::Msssim => msssim(a, b),
        }
    }
}

fn check_same_dims(a: &ImagePlane, b: &ImagePlane) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Domain(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Valid-region separable weighted mean: covolution without any padding.
/// Output dims shrink by 2·radius.
fn window_mean(plane: &ImagePlane, taps: &[f64]) -> ImagePlane {
    let (w, h) = (plane.width(), plane.height());
    let k = taps.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    // Horizontal pass over full rows.
    let mut tmp = Vec::with_capacity(ow * h);
    for y in 0..h {
        let row = plane.row(y);
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, &t) in taps.iter().enumerate() {
                acc += t * row[x + i];
            }
            tmp.push(acc);
        }
    }
    // Vertical pass.
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, &t) in taps.iter().enumerate() {
                acc += t * tmp[(y + i) * ow + x];
            }
            out.push(acc);
        }
    }
    ImagePlane::from_vec(ow, oh, out).expect("window output dims are positive")
}

/// Per-window SSIM statistics for one image pair.
struct WindowStats {
    mu_a: ImagePlane,
    mu_b: ImagePlane,
    /// E[a²] − μa² clamped at 0.
    var_a: Vec<f64>,
    var_b: Vec<f64>,
    /// E[ab] − μa·μb.
    cov: Vec<f64>,
}

fn window_stats(a: &ImagePlane, b: &ImagePlane, taps: &[f64]) -> WindowStats {
    let mu_a = window_mean(a, taps);
    let mu_b = window_mean(b, taps);
    let ea2 = window_mean(&a.map(|v| v * v), taps);
    let eb2 = window_mean(&b.map(|v| v * v), taps);
    let ab = ImagePlane::from_vec(
        a.width(),
        a.height(),
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(&x, &y)| x * y)
            .collect(),
    )
    .expect("product plane shares dims");
    let eab = window_mean(&ab, taps);

    let n = mu_a.as_slice().len();
    let mut var_a = Vec::with_capacity(n);
    let mut var_b = Vec::with_capacity(n);
    let mut cov = Vec::with_capacity(n);
    for i in 0..n {
        let ma = mu_a.as_slice()[i];
        let mb = mu_b.as_slice()[i];
        // Negative variances are f64 cancellation artifacts on near-constant
        // windows; clamp so the stability constants keep denominators positive.
        var_a.push((ea2.as_slice()[i] - ma * ma).max(0.0));
        var_b.push((eb2.as_slice()[i] - mb * mb).max(0.0));
        cov.push(eab.as_slice()[i] - ma * mb);
    }
    WindowStats {
        mu_a,
        mu_b,
        var_a,
        var_b,
        cov,
    }
}

fn check_window_fits(a: &ImagePlane) -> Result<()> {
    let k = 2 * WINDOW_RADIUS + 1;
    if a.width() < k || a.height() < k {
        return Err(Error::Domain(format!(
            "image {}x{} smaller than the {k}x{k} analysis window",
            a.width(),
            a.height()
        )));
    }
    Ok(())
}

/// Per-window SSIM map over the valid region.
pub fn ssim_map(a: &ImagePlane, b: &ImagePlane) -> Result<QualityMap> {
    check_same_dims(a, b)?;
    check_window_fits(a)?;
    let c1 = (K1 * L) * (K1 * L);
    let c2 = (K2 * L) * (K2 * L);
    let taps = gaussian_kernel(WINDOW_SIGMA, WINDOW_RADIUS);
    let stats = window_stats(a, b, &taps);
    let (ow, oh) = (stats.mu_a.width(), stats.mu_a.height());
    let mut out = Vec::with_capacity(ow * oh);
    for i in 0..ow * oh {
        let ma = stats.mu_a.as_slice()[i];
        let mb = stats.mu_b.as_slice()[i];
        let luminance = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        let cs = (2.0 * stats.cov[i] + c2) / (stats.var_a[i] + stats.var_b[i] + c2);
        out.push(luminance * cs);
    }
    ImagePlane::from_vec(ow, oh, out)
}

/// Mean SSIM over the valid-region map. Symmetric in its arguments and
/// bounded by [−1, 1].
pub fn ssim(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    Ok(ssim_map(a, b)?.mean())
}

/// Multi-scale SSIM: contrast-structure at five dyadic scales, luminance at
/// the coarsest, pooled means combined with `MSSSIM_WEIGHTS` exponents.
/// Negative pooled terms clamp to 0 before the fractional powers.
pub fn msssim(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    check_same_dims(a, b)?;
    if a.width() < MSSSIM_MIN_DIM || a.height() < MSSSIM_MIN_DIM {
        return Err(Error::Domain(format!(
            "ms-ssim needs at least {MSSSIM_MIN_DIM}px on each side, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    let c1 = (K1 * L) * (K1 * L);
    let c2 = (K2 * L) * (K2 * L);
    let taps = gaussian_kernel(WINDOW_SIGMA, WINDOW_RADIUS);
    let scales = MSSSIM_WEIGHTS.len();
    let mut cur_a = a.clone();
    let mut cur_b = b.clone();
    let mut result = 1.0;
    for scale in 0..scales {
        let stats = window_stats(&cur_a, &cur_b, &taps);
        let n = stats.cov.len();
        let mut cs_sum = 0.0;
        for i in 0..n {
            cs_sum += (2.0 * stats.cov[i] + c2) / (stats.var_a[i] + stats.var_b[i] + c2);
        }
        let mcs = (cs_sum / n as f64).max(0.0);
        result *= crate::math::pow(mcs, MSSSIM_WEIGHTS[scale]);
        if scale + 1 == scales {
            let mut l_sum = 0.0;
            for i in 0..n {
                let ma = stats.mu_a.as_slice()[i];
                let mb = stats.mu_b.as_slice()[i];
                l_sum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
            }
            let ml = (l_sum / n as f64).max(0.0);
            result *= crate::math::pow(ml, MSSSIM_WEIGHTS[scale]);
        } else {
            cur_a = downsample2(&cur_a)?;
            cur_b = downsample2(&cur_b)?;
        }
    }
    Ok(result)
}

/// Peak signal-to-noise ratio in dB over the [0, 255] convention; identical
/// images yield +inf.
pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    check_same_dims(a, b)?;
    let n = a.as_slice().len() as f64;
    let mse: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * crate::math::log10(L * L / mse))
}

/// The three scores that drive degraded-reference prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple {
    /// FR(pristine, degraded reference): quality of the midpoint.
    pub as_dr: f64,
    /// FR(pristine, final image): the prediction target.
    pub as_fd: f64,
    /// FR(degraded reference, final image): what stage 2 did, as seen from
    /// the midpoint.
    pub rs_fd: f64,
}

/// Scores a PR/DR/FD triple with one backend.
pub fn score_triple(
    pr: &ImagePlane,
    dr: &ImagePlane,
    fd: &ImagePlane,
    backend: FrBackend,
) -> Result<ScoreTriple> {
    Ok(ScoreTriple {
        as_dr: backend.compare(pr, dr)?,
        as_fd: backend.compare(pr, fd)?,
        rs_fd: backend.compare(dr, fd)?,
    })
}
