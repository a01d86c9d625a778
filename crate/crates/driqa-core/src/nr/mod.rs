//! No-reference quality estimation from natural-scene statistics.
//!
//! Natural photographs have strongly regular local statistics: after local
//! mean subtraction and contrast normalization, coefficient histograms are
//! well modeled by generalized Gaussian densities, and essentially every
//! distortion pushes the fitted density parameters out of their natural
//! range. The estimator here — a from-scratch NIQE — measures that
//! departure without ever seeing the reference image:
//!
//! 1. normalize the image by its local mean and deviation ([`mscn`]);
//! 2. per 96×96 patch, fit a symmetric generalized Gaussian to the
//!    normalized coefficients and an asymmetric one to each of the four
//!    neighboring-coefficient product fields, at two scales, giving an
//!    18 + 18 = 36-dimensional feature vector ([`NssFeatures`]);
//! 3. summarize a pristine corpus by the mean and covariance of its sharp
//!    patches ([`train_niqe`]);
//! 4. score a test image by the Mahalanobis-style distance between its own
//!    patch statistics and the pristine model ([`niqe_score`]). Lower is
//!    better; zero means statistically indistinguishable from pristine.
//!
//! The internals (patch size 96, sharpness fraction 0.75, the shape grid
//! 0.2..=10 in steps of 0.001) follow the standard published recipe and are
//! pinned in one constants block. Training and scoring are pure functions:
//! the same corpus yields a bit-identical model, the same (image, model)
//! pair a bit-identical score.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::image::{convolve_mirror, downsample2, gaussian_kernel, ImagePlane};
use crate::linalg::{pinv_symmetric, Matrix};
use crate::math;
// Needed when no crate in the graph links std; when one does (tests, the
// tools crate), std's inherent f64 methods shadow these exact-op methods,
// which is harmless, but the import then looks unused.
#[allow(unused_imports)]
use crate::math::F64Ext;
use crate::{Error, Result};

/// Side length of the square analysis patches (at the finest scale).
pub const PATCH_SIZE: usize = 96;
/// A training patch is kept when its sharpness exceeds this fraction of the
/// sharpest patch seen anywhere in the corpus.
pub const SHARPNESS_FRACTION: f64 = 0.75;
/// Length of the per-patch feature vector: 18 density parameters per scale,
/// two dyadic scales.
pub const FEATURE_DIM: usize = 36;
/// Minimum number of coefficients a density fit accepts.
pub const MIN_FIT_SAMPLES: usize = 100;
/// Minimum corpus size for model training.
pub const MIN_TRAIN_IMAGES: usize = 10;
/// Minimum side length of a training image: a 2×2 patch grid must fit, and
/// the halved scale must still hold whole (half-size) patches.
pub const MIN_TRAIN_DIM: usize = 2 * PATCH_SIZE;

/// Local-moment window: 7×7 Gaussian taps at σ = 7/6.
const MOMENT_RADIUS: usize = 3;
const MOMENT_SIGMA: f64 = 7.0 / 6.0;

/// Shape-parameter search grid: α = k/1000 for k in 200..=10000, i.e.
/// 0.2..=10 in steps of 0.001. Grid points are computed as integer
/// quotients so the endpoints are exact.
const ALPHA_MILLI_LO: usize = 200;
const ALPHA_MILLI_HI: usize = 10_000;

/// No-reference backend selector.
///
/// Only the natural-scene-statistics estimator in this module is
/// self-contained; the other two published methods sometimes used in the
/// same role need externally trained models and therefore report
/// [`Error::Unsupported`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NrBackend {
    /// Natural-scene-statistics distance to a pristine model (this module).
    Niqe,
    /// Codebook-based learned estimator; requires an external model.
    Cornia,
    /// Ranking-learned estimator; requires an external model.
    DipIq,
}

impl NrBackend {
    pub fn name(self) -> &'static str {
        match self {
            NrBackend::Niqe => "niqe",
            NrBackend::Cornia => "cornia",
            NrBackend::DipIq => "dipiq",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "niqe" => Ok(NrBackend::Niqe),
            "cornia" => Ok(NrBackend::Cornia),
            "dipiq" => Ok(NrBackend::DipIq),
            other => Err(Error::Domain(format!(
                "unknown no-reference backend '{other}' (expected niqe, cornia, or dipiq)"
            ))),
        }
    }

    /// Scores `img` with this backend (lower is better).
    pub fn score(self, img: &ImagePlane, model: &NiqeModel) -> Result<f64> {
        match self {
            NrBackend::Niqe => niqe_score(img, model),
            NrBackend::Cornia | NrBackend::DipIq => Err(Error::Unsupported(format!(
                "the {} backend requires an externally trained model that this \
                 crate does not ship; use the niqe backend",
                self.name()
            ))),
        }
    }
}

/// Per-patch natural-scene-statistics feature vector.
///
/// Layout per scale (finest first), 18 numbers:
/// `[ggd_shape, ggd_variance]` for the normalized coefficients themselves,
/// then for each product orientation in the order horizontal, vertical,
/// main diagonal, secondary diagonal:
/// `[shape, mean_offset, left_variance, right_variance]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NssFeatures(pub [f64; FEATURE_DIM]);

/// Trained pristine model: feature mean and covariance over the sharp
/// patches of a pristine corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct NiqeModel {
    /// Mean feature vector, length [`FEATURE_DIM`].
    pub mean: Vec<f64>,
    /// Population covariance of the features, [`FEATURE_DIM`]² symmetric
    /// positive semi-definite.
    pub covariance: Matrix,
}

impl NiqeModel {
    /// Structural validity: dimensions, finiteness, symmetry. Used when a
    /// model arrives from outside this module (e.g. loaded from a file).
    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != FEATURE_DIM {
            return Err(Error::Domain(format!(
                "model mean has length {}, expected {FEATURE_DIM}",
                self.mean.len()
            )));
        }
        if self.covariance.rows() != FEATURE_DIM || self.covariance.cols() != FEATURE_DIM {
            return Err(Error::Domain(format!(
                "model covariance is {}x{}, expected {FEATURE_DIM}x{FEATURE_DIM}",
                self.covariance.rows(),
                self.covariance.cols()
            )));
        }
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(String::from("model mean has non-finite entries")));
        }
        for i in 0..FEATURE_DIM {
            for j in 0..FEATURE_DIM {
                let v = self.covariance[(i, j)];
                if !v.is_finite() {
                    return Err(Error::Domain(String::from(
                        "model covariance has non-finite entries",
                    )));
                }
                if (v - self.covariance[(j, i)]).abs() > 1e-10 {
                    return Err(Error::Domain(String::from(
                        "model covariance is not symmetric",
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Local mean subtraction and contrast normalization.
///
/// Returns `(I − μ)/(σ + 1)` where μ and σ are Gaussian-weighted local
/// moments over a 7×7 window (σ = 7/6) with mirrored boundaries; the +1 in
/// the divisor (natural for the [0, 255] sample convention) keeps flat
/// regions stable.
pub fn mscn(img: &ImagePlane) -> Result<ImagePlane> {
    check_min_dims(img, PATCH_SIZE, "local normalization")?;
    Ok(local_normalize(img).0)
}

/// Fits a zero-mean symmetric generalized Gaussian by moment matching.
///
/// Returns `(shape, variance)`: shape is the fitted exponent α (2 recovers
/// the normal density, 1 the Laplacian), variance the raw second moment.
pub fn fit_ggd(samples: &[f64]) -> Result<(f64, f64)> {
    let grid = AlphaGrid::new();
    ggd_with(&grid, samples)
}

/// Fits a zero-mode asymmetric generalized Gaussian by moment matching.
///
/// Returns `(shape, left_scale, right_scale)` where the scales are the
/// root-mean-square of the negative and positive samples respectively.
pub fn fit_aggd(samples: &[f64]) -> Result<(f64, f64, f64)> {
    let grid = AlphaGrid::new();
    aggd_with(&grid, samples)
}

/// Feature vectors of every whole 96×96 patch of `img` (row-major patch
/// order). Partial patches at the right/bottom edges are discarded.
pub fn patch_features(img: &ImagePlane) -> Result<Vec<NssFeatures>> {
    check_min_dims(img, PATCH_SIZE, "feature extraction")?;
    let grid = AlphaGrid::new();
    Ok(analyze_patches(&grid, img)?
        .into_iter()
        .map(|(_, f)| f)
        .collect())
}

/// Trains the pristine model on a corpus of pristine images.
///
/// Every whole patch of every image is measured; within each image, the
/// patches whose local sharpness (mean of the σ field) exceeds
/// [`SHARPNESS_FRACTION`] of that image's sharpest patch contribute to the
/// feature mean and covariance, so every corpus image donates its sharpest
/// content regardless of how the images compare to one another. (A single
/// corpus-wide threshold would let one unusually sharp image crowd out the
/// rest and leave the covariance rank-deficient.) Deterministic: the same
/// corpus produces a bit-identical model.
pub fn train_niqe(corpus: &[ImagePlane]) -> Result<NiqeModel> {
    if corpus.len() < MIN_TRAIN_IMAGES {
        return Err(Error::Domain(format!(
            "training corpus has {} images, need at least {MIN_TRAIN_IMAGES}",
            corpus.len()
        )));
    }
    for (i, img) in corpus.iter().enumerate() {
        if img.width() < MIN_TRAIN_DIM || img.height() < MIN_TRAIN_DIM {
            return Err(Error::Domain(format!(
                "training image {i} is {}x{}, need at least {MIN_TRAIN_DIM}x{MIN_TRAIN_DIM}",
                img.width(),
                img.height()
            )));
        }
    }
    let grid = AlphaGrid::new();
    let mut selected: Vec<NssFeatures> = Vec::new();
    for img in corpus {
        let patches = analyze_patches(&grid, img)?;
        let peak = patches.iter().fold(0.0f64, |acc, (s, _)| acc.max(*s));
        let threshold = SHARPNESS_FRACTION * peak;
        selected.extend(
            patches
                .iter()
                .filter(|(s, _)| *s > threshold)
                .map(|(_, f)| *f),
        );
    }
    if selected.is_empty() {
        return Err(Error::Degenerate(String::from(
            "no patch passes the sharpness gate (flat corpus)",
        )));
    }
    let (mean, covariance) = feature_stats(&selected);
    Ok(NiqeModel { mean, covariance })
}

/// Scores an image against a pristine model (lower is better).
///
/// The image's own patch statistics (mean and covariance over all whole
/// patches — no sharpness gate at test time) are compared to the model by
/// `sqrt((μ₁−μ₂)ᵀ((Σ₁+Σ₂)/2)⁻¹(μ₁−μ₂))`, with a pseudo-inverse standing in
/// for the inverse so rank-deficient covariances (few patches) still score.
pub fn niqe_score(img: &ImagePlane, model: &NiqeModel) -> Result<f64> {
    model.validate()?;
    check_min_dims(img, PATCH_SIZE, "scoring")?;
    let grid = AlphaGrid::new();
    let feats: Vec<NssFeatures> = analyze_patches(&grid, img)?
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    let (mean, covariance) = feature_stats(&feats);
    Ok(gaussian_distance(
        &model.mean,
        &model.covariance,
        &mean,
        &covariance,
    ))
}

fn check_min_dims(img: &ImagePlane, min: usize, what: &str) -> Result<()> {
    if img.width() < min || img.height() < min {
        return Err(Error::Domain(format!(
            "{what} needs at least {min}x{min} input, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Precomputed moment-ratio lookup over the shape grid.
///
/// For a symmetric generalized Gaussian with exponent α the ratio
/// `(E|x|)² / E[x²]` equals `Γ(2/α)² / (Γ(1/α)·Γ(3/α))`; the same function
/// matches the asymmetry-corrected ratio of the asymmetric variant. One
/// table therefore serves both fits.
struct AlphaGrid {
    rho: Vec<f64>,
}

impl AlphaGrid {
    fn new() -> Self {
        let mut rho = Vec::with_capacity(ALPHA_MILLI_HI - ALPHA_MILLI_LO + 1);
        for k in ALPHA_MILLI_LO..=ALPHA_MILLI_HI {
            let alpha = k as f64 / 1000.0;
            let g1 = math::tgamma(1.0 / alpha);
            let g2 = math::tgamma(2.0 / alpha);
            let g3 = math::tgamma(3.0 / alpha);
            rho.push(g2 * g2 / (g1 * g3));
        }
        AlphaGrid { rho }
    }

    /// Shape value whose ratio is closest to `target` (first grid point on
    /// exact ties, so the scan is deterministic).
    fn best_alpha(&self, target: f64) -> f64 {
        let mut best_k = 0usize;
        let mut best = f64::INFINITY;
        for (k, &r) in self.rho.iter().enumerate() {
            let d = (r - target) * (r - target);
            if d < best {
                best = d;
                best_k = k;
            }
        }
        (ALPHA_MILLI_LO + best_k) as f64 / 1000.0
    }
}

fn check_fit_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::Domain(format!(
            "density fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    Ok(())
}

fn ggd_with(grid: &AlphaGrid, samples: &[f64]) -> Result<(f64, f64)> {
    check_fit_samples(samples)?;
    let n = samples.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    for &x in samples {
        abs_sum += x.abs();
        sq_sum += x * x;
    }
    if !sq_sum.is_finite() {
        return Err(Error::Domain(String::from("non-finite samples in density fit")));
    }
    if sq_sum == 0.0 {
        return Err(Error::Degenerate(String::from("all-zero samples in density fit")));
    }
    let m2 = sq_sum / n;
    let mean_abs = abs_sum / n;
    let ratio = mean_abs * mean_abs / m2;
    Ok((grid.best_alpha(ratio), m2))
}

fn aggd_with(grid: &AlphaGrid, samples: &[f64]) -> Result<(f64, f64, f64)> {
    check_fit_samples(samples)?;
    let n = samples.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let (mut neg_sq, mut neg_count) = (0.0f64, 0usize);
    let (mut pos_sq, mut pos_count) = (0.0f64, 0usize);
    for &x in samples {
        abs_sum += x.abs();
        sq_sum += x * x;
        if x < 0.0 {
            neg_sq += x * x;
            neg_count += 1;
        } else if x > 0.0 {
            pos_sq += x * x;
            pos_count += 1;
        }
    }
    if !sq_sum.is_finite() {
        return Err(Error::Domain(String::from("non-finite samples in density fit")));
    }
    if sq_sum == 0.0 {
        return Err(Error::Degenerate(String::from("all-zero samples in density fit")));
    }
    if neg_count == 0 || pos_count == 0 {
        return Err(Error::Degenerate(String::from(
            "one-sided samples cannot determine an asymmetric density",
        )));
    }
    let sigma_l = (neg_sq / neg_count as f64).sqrt();
    let sigma_r = (pos_sq / pos_count as f64).sqrt();
    let gamma_hat = sigma_l / sigma_r;
    let r_hat = (abs_sum / n) * (abs_sum / n) / (sq_sum / n);
    let g2 = gamma_hat * gamma_hat;
    let r_norm = r_hat * (gamma_hat * g2 + 1.0) * (gamma_hat + 1.0) / ((g2 + 1.0) * (g2 + 1.0));
    Ok((grid.best_alpha(r_norm), sigma_l, sigma_r))
}

/// First moment of the fitted asymmetric density (the `mean_offset`
/// feature): `(σr − σl)·Γ(2/α)/√(Γ(1/α)·Γ(3/α))`.
fn aggd_mean_offset(alpha: f64, sigma_l: f64, sigma_r: f64) -> f64 {
    let g1 = math::tgamma(1.0 / alpha);
    let g2 = math::tgamma(2.0 / alpha);
    let g3 = math::tgamma(3.0 / alpha);
    (sigma_r - sigma_l) * g2 / (g1 * g3).sqrt()
}

/// Gaussian-weighted local moments: returns (normalized plane, σ field).
fn local_normalize(img: &ImagePlane) -> (ImagePlane, ImagePlane) {
    let taps = gaussian_kernel(MOMENT_SIGMA, MOMENT_RADIUS);
    let mu = convolve_mirror(img, &taps);
    let sq = img.map(|v| v * v);
    let m2 = convolve_mirror(&sq, &taps);
    let n = img.width() * img.height();
    let mut sigma = Vec::with_capacity(n);
    let mut norm = Vec::with_capacity(n);
    for i in 0..n {
        let m = mu.as_slice()[i];
        let s = (m2.as_slice()[i] - m * m).max(0.0).sqrt();
        sigma.push(s);
        norm.push((img.as_slice()[i] - m) / (s + 1.0));
    }
    let w = img.width();
    let h = img.height();
    (
        ImagePlane::from_vec(w, h, norm).expect("dims preserved"),
        ImagePlane::from_vec(w, h, sigma).expect("dims preserved"),
    )
}

/// Products of each coefficient with its neighbor along the four
/// orientations: horizontal, vertical, main diagonal, secondary diagonal.
fn paired_products(m: &ImagePlane) -> [Vec<f64>; 4] {
    let (w, h) = (m.width(), m.height());
    let mut hor = Vec::with_capacity((w - 1) * h);
    for y in 0..h {
        let r = m.row(y);
        for x in 0..w - 1 {
            hor.push(r[x] * r[x + 1]);
        }
    }
    let mut ver = Vec::with_capacity(w * (h - 1));
    let mut d1 = Vec::with_capacity((w - 1) * (h - 1));
    let mut d2 = Vec::with_capacity((w - 1) * (h - 1));
    for y in 0..h - 1 {
        let r = m.row(y);
        let rn = m.row(y + 1);
        for x in 0..w {
            ver.push(r[x] * rn[x]);
        }
        for x in 0..w - 1 {
            d1.push(r[x] * rn[x + 1]);
        }
        for x in 1..w {
            d2.push(r[x] * rn[x - 1]);
        }
    }
    [hor, ver, d1, d2]
}

/// The 18 density parameters of one normalized plane: symmetric fit of the
/// coefficients, asymmetric fit of each product orientation.
fn plane_features(grid: &AlphaGrid, m: &ImagePlane) -> Result<[f64; 18]> {
    let mut out = [0.0f64; 18];
    let (shape, variance) = ggd_with(grid, m.as_slice())?;
    out[0] = shape;
    out[1] = variance;
    for (k, prod) in paired_products(m).iter().enumerate() {
        let (alpha, sigma_l, sigma_r) = aggd_with(grid, prod)?;
        let base = 2 + 4 * k;
        out[base] = alpha;
        out[base + 1] = aggd_mean_offset(alpha, sigma_l, sigma_r);
        out[base + 2] = sigma_l * sigma_l;
        out[base + 3] = sigma_r * sigma_r;
    }
    Ok(out)
}

fn crop(plane: &ImagePlane, x0: usize, y0: usize, size: usize) -> ImagePlane {
    let mut data = Vec::with_capacity(size * size);
    for y in y0..y0 + size {
        data.extend_from_slice(&plane.row(y)[x0..x0 + size]);
    }
    ImagePlane::from_vec(size, size, data).expect("crop bounds validated by caller")
}

/// Sharpness and features of every whole patch, row-major patch order.
/// Sharpness is the mean of the finest-scale σ field over the patch; the
/// feature vector concatenates the finest scale and the halved scale.
fn analyze_patches(grid: &AlphaGrid, img: &ImagePlane) -> Result<Vec<(f64, NssFeatures)>> {
    let (m1, s1) = local_normalize(img);
    let half = downsample2(img)?;
    let (m2, _) = local_normalize(&half);
    let nx = img.width() / PATCH_SIZE;
    let ny = img.height() / PATCH_SIZE;
    let mut out = Vec::with_capacity(nx * ny);
    for py in 0..ny {
        for px in 0..nx {
            let x0 = px * PATCH_SIZE;
            let y0 = py * PATCH_SIZE;
            let mut acc = 0.0;
            for y in y0..y0 + PATCH_SIZE {
                for &v in &s1.row(y)[x0..x0 + PATCH_SIZE] {
                    acc += v;
                }
            }
            let sharpness = acc / (PATCH_SIZE * PATCH_SIZE) as f64;
            let f1 = plane_features(grid, &crop(&m1, x0, y0, PATCH_SIZE))?;
            let f2 = plane_features(grid, &crop(&m2, x0 / 2, y0 / 2, PATCH_SIZE / 2))?;
            let mut f = [0.0f64; FEATURE_DIM];
            f[..18].copy_from_slice(&f1);
            f[18..].copy_from_slice(&f2);
            out.push((sharpness, NssFeatures(f)));
        }
    }
    Ok(out)
}

/// Mean and population covariance (divisor n, so a single patch yields a
/// zero matrix rather than an undefined one) of a feature set.
fn feature_stats(rows: &[NssFeatures]) -> (Vec<f64>, Matrix) {
    debug_assert!(!rows.is_empty());
    let n = rows.len() as f64;
    let mut mean = vec![0.0f64; FEATURE_DIM];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.0.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = Matrix::zeros(FEATURE_DIM, FEATURE_DIM);
    let mut centered = [0.0f64; FEATURE_DIM];
    for r in rows {
        for (c, (v, m)) in centered.iter_mut().zip(r.0.iter().zip(mean.iter())) {
            *c = v - m;
        }
        for i in 0..FEATURE_DIM {
            for j in i..FEATURE_DIM {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..FEATURE_DIM {
        for j in i..FEATURE_DIM {
            cov[(i, j)] /= n;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    (mean, cov)
}

/// Distance between two Gaussian feature summaries:
/// `sqrt(dᵀ·pinv((Σ₁+Σ₂)/2)·d)` with `d = μ₁ − μ₂`. Nonnegative by
/// construction (the quadratic form is clamped at 0 against rounding).
fn gaussian_distance(mean_a: &[f64], cov_a: &Matrix, mean_b: &[f64], cov_b: &Matrix) -> f64 {
    let n = mean_a.len();
    debug_assert_eq!(n, mean_b.len());
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (cov_a[(i, j)] + cov_b[(i, j)]);
        }
    }
    let pinv = pinv_symmetric(&m);
    let d: Vec<f64> = mean_a.iter().zip(mean_b.iter()).map(|(a, b)| a - b).collect();
    let md = pinv.mul_vec(&d);
    let q: f64 = d.iter().zip(md.iter()).map(|(a, b)| a * b).sum();
    q.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{held_out_image, pristine_corpus};
    use crate::distort::add_gaussian_noise;
    use crate::eval::srcc;
    use crate::linalg::jacobi_eigh;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn constant_image(v: f64, w: usize, h: usize) -> ImagePlane {
        ImagePlane::from_vec(w, h, vec![v; w * h]).unwrap()
    }

    #[test]
    fn mscn_of_constant_image_is_zero() {
        let img = constant_image(128.0, 96, 96);
        let m = mscn(&img).unwrap();
        for &v in m.as_slice() {
            assert!(v.abs() <= 1e-10, "constant image should normalize to ~0, got {v}");
        }
    }

    #[test]
    fn mscn_rejects_small_input() {
        let img = constant_image(128.0, 95, 96);
        assert!(matches!(mscn(&img), Err(Error::Domain(_))));
    }

    #[test]
    fn mscn_mean_near_zero_on_natural_images() {
        for img in pristine_corpus().iter().take(3) {
            let m = mscn(img).unwrap();
            let mean = m.as_slice().iter().sum::<f64>() / m.as_slice().len() as f64;
            assert!(mean.abs() <= 0.05, "normalized mean {mean} too far from 0");
        }
    }

    #[test]
    fn mscn_variance_near_unity_on_iid_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(128.0, 30.0).unwrap();
        let data: Vec<f64> = (0..256 * 256).map(|_| normal.sample(&mut rng)).collect();
        let img = ImagePlane::from_vec(256, 256, data).unwrap();
        let m = mscn(&img).unwrap();
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(
            (0.5..=1.2).contains(&var),
            "normalized variance {var} outside [0.5, 1.2]"
        );
    }

    #[test]
    fn ggd_recovers_gaussian_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let (alpha, variance) = fit_ggd(&samples).unwrap();
        assert!((alpha - 2.0).abs() <= 0.1, "Gaussian shape estimate {alpha}");
        assert!((variance - 1.0).abs() <= 0.05, "variance estimate {variance}");
    }

    #[test]
    fn aggd_on_symmetric_gaussian_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let (alpha, sigma_l, sigma_r) = fit_aggd(&samples).unwrap();
        assert!((alpha - 2.0).abs() <= 0.1, "shape estimate {alpha}");
        assert!(
            (sigma_l / sigma_r - 1.0).abs() <= 0.05,
            "side scales should agree: {sigma_l} vs {sigma_r}"
        );
    }

    #[test]
    fn aggd_recovers_laplacian_shape() {
        // Inverse-CDF sampling of the unit Laplacian.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| {
                let u: f64 = rng.random_range(-0.5..0.5);
                let mag = math::ln(1.0 - 2.0 * u.abs());
                if u < 0.0 {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let (alpha, _, _) = fit_aggd(&samples).unwrap();
        assert!((alpha - 1.0).abs() <= 0.1, "Laplacian shape estimate {alpha}");
    }

    #[test]
    fn aggd_detects_asymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..100_000)
            .map(|_| {
                let x: f64 = normal.sample(&mut rng);
                if x < 0.0 {
                    0.5 * x
                } else {
                    2.0 * x
                }
            })
            .collect();
        let (alpha, sigma_l, sigma_r) = fit_aggd(&samples).unwrap();
        assert!(sigma_l < sigma_r, "negative side should be narrower");
        let offset = aggd_mean_offset(alpha, sigma_l, sigma_r);
        assert!(offset > 0.0, "right-heavy samples should give a positive offset");
    }

    #[test]
    fn density_fits_reject_bad_input() {
        assert!(matches!(fit_ggd(&[0.5; 99]), Err(Error::Domain(_))));
        assert!(matches!(fit_aggd(&[0.5; 99]), Err(Error::Domain(_))));
        assert!(matches!(fit_ggd(&[0.0; 200]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_aggd(&[0.0; 200]), Err(Error::Degenerate(_))));
        // One-sided data cannot pin both side scales.
        assert!(matches!(fit_aggd(&[1.0; 200]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn feature_vector_parameters_stay_in_range() {
        let img = held_out_image(7, 256, 256);
        let feats = patch_features(&img).unwrap();
        assert_eq!(feats.len(), 4, "256x256 holds a 2x2 grid of whole patches");
        for f in &feats {
            for scale in 0..2 {
                let b = 18 * scale;
                assert!((0.2..=10.0).contains(&f.0[b]), "coefficient shape {}", f.0[b]);
                assert!(f.0[b + 1] > 0.0, "coefficient variance must be positive");
                for k in 0..4 {
                    let p = b + 2 + 4 * k;
                    assert!((0.2..=10.0).contains(&f.0[p]), "product shape {}", f.0[p]);
                    assert!(f.0[p + 2] > 0.0, "left variance must be positive");
                    assert!(f.0[p + 3] > 0.0, "right variance must be positive");
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_covariance_is_psd() {
        let corpus = pristine_corpus();
        let a = train_niqe(&corpus).unwrap();
        let b = train_niqe(&corpus).unwrap();
        assert_eq!(a, b, "same corpus must give a bit-identical model");
        a.validate().unwrap();
        // Symmetry is exact by construction; eigenvalues must be
        // nonnegative up to rounding.
        for i in 0..FEATURE_DIM {
            for j in 0..FEATURE_DIM {
                assert_eq!(a.covariance[(i, j)], a.covariance[(j, i)]);
            }
        }
        let (vals, _) = jacobi_eigh(&a.covariance);
        for v in vals {
            assert!(v >= -1e-8, "covariance eigenvalue {v} is negative");
        }
    }

    #[test]
    fn training_rejects_bad_corpora() {
        let corpus = pristine_corpus();
        assert!(matches!(train_niqe(&corpus[..9]), Err(Error::Domain(_))));
        let mut small = corpus[..10].to_vec();
        small[3] = held_out_image(0, 191, 192);
        assert!(matches!(train_niqe(&small), Err(Error::Domain(_))));
    }

    #[test]
    fn flat_corpus_fails_the_sharpness_gate() {
        let corpus: Vec<ImagePlane> =
            (0..MIN_TRAIN_IMAGES).map(|_| constant_image(100.0, 192, 192)).collect();
        assert!(matches!(train_niqe(&corpus), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pristine_scores_better_than_noisy() {
        let model = train_niqe(&pristine_corpus()).unwrap();
        let img = held_out_image(0, 256, 256);
        let noisy = add_gaussian_noise(&img, 20.0, 99);
        let clean_score = niqe_score(&img, &model).unwrap();
        let noisy_score = niqe_score(&noisy, &model).unwrap();
        assert!(clean_score >= 0.0 && clean_score.is_finite());
        assert!(
            clean_score < noisy_score,
            "pristine {clean_score} should beat noisy {noisy_score}"
        );
    }

    #[test]
    fn score_tracks_noise_level_monotonically() {
        let model = train_niqe(&pristine_corpus()).unwrap();
        let levels = 8usize;
        let (lo, hi) = (2.0f64, 40.0f64);
        for idx in 0..5 {
            let img = held_out_image(idx, 384, 384);
            let clean = niqe_score(&img, &model).unwrap();
            let mut scores = Vec::with_capacity(levels);
            for level in 1..=levels {
                let t = (level - 1) as f64 / (levels - 1) as f64;
                let sigma = lo * math::pow(hi / lo, t);
                let noisy = add_gaussian_noise(&img, sigma, 1000 + level as u64);
                let s = niqe_score(&noisy, &model).unwrap();
                assert!(s.is_finite() && s >= 0.0);
                scores.push(s);
            }
            let ranks: Vec<f64> = (1..=levels).map(|l| l as f64).collect();
            let rho = srcc(&scores, &ranks).unwrap();
            assert!(rho >= 0.9, "image {idx}: score-vs-noise SRCC {rho} below 0.9");
            assert!(
                clean < scores[4],
                "image {idx}: pristine {clean} should beat level-5 noise {}",
                scores[4]
            );
        }
    }

    #[test]
    fn same_mean_summaries_have_zero_distance() {
        let mu: Vec<f64> = (0..FEATURE_DIM).map(|i| i as f64 * 0.1).collect();
        let mut cov_a = Matrix::zeros(FEATURE_DIM, FEATURE_DIM);
        let mut cov_b = Matrix::zeros(FEATURE_DIM, FEATURE_DIM);
        for i in 0..FEATURE_DIM {
            cov_a[(i, i)] = 1.0 + i as f64;
            cov_b[(i, i)] = 2.0;
        }
        assert_eq!(gaussian_distance(&mu, &cov_a, &mu, &cov_b), 0.0);
        let mut shifted = mu.clone();
        shifted[0] += 1.0;
        assert!(gaussian_distance(&mu, &cov_a, &shifted, &cov_b) > 0.0);
    }

    #[test]
    fn backend_names_round_trip_and_stubs_report_unsupported() {
        for b in [NrBackend::Niqe, NrBackend::Cornia, NrBackend::DipIq] {
            assert_eq!(NrBackend::parse(b.name()).unwrap(), b);
        }
        assert!(matches!(NrBackend::parse("vgg"), Err(Error::Domain(_))));
        let model = NiqeModel {
            mean: vec![0.0; FEATURE_DIM],
            covariance: Matrix::identity(FEATURE_DIM),
        };
        let img = constant_image(128.0, 96, 96);
        assert!(matches!(
            NrBackend::Cornia.score(&img, &model),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            NrBackend::DipIq.score(&img, &model),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn score_validates_the_model() {
        let img = held_out_image(1, 96, 96);
        let bad = NiqeModel {
            mean: vec![0.0; FEATURE_DIM - 1],
            covariance: Matrix::identity(FEATURE_DIM),
        };
        assert!(matches!(niqe_score(&img, &bad), Err(Error::Domain(_))));
        let mut asym = NiqeModel {
            mean: vec![0.0; FEATURE_DIM],
            covariance: Matrix::identity(FEATURE_DIM),
        };
        asym.covariance[(0, 1)] = 0.5;
        assert!(matches!(niqe_score(&img, &asym), Err(Error::Domain(_))));
    }
}
