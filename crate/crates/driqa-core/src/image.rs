//! Grayscale image buffers and the convolution primitives shared across the
//! crate.
//!
//! Images are single-channel, row-major `f64` planes. Pixel values nominally
//! live in [0, 255] but are not clamped here: pipeline stages keep full
//! precision and quantization to 8 bits happens only when a file is written.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Needed when no crate in the graph links std; when one does (tests, the
// tools crate), std's inherent f64 methods shadow these exact-op methods,
// which is harmless, but the import then looks unused.
#[allow(unused_imports)]
use crate::math::F64Ext;
use crate::{Error, Result};

/// Single-channel image with row-major `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    /// Zero-filled plane. Dimensions must be nonzero.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            data: vec![0.0; width * height],
        })
    }

    /// Wraps an existing row-major buffer. The length must match the
    /// dimensions and every sample must be finite.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Domain(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("image contains non-finite samples".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Applies `f` to every sample, returning a new plane.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        crate::math::mean(&self.data)
    }
}

/// Three same-sized planes in R, G, B order.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub r: ImagePlane,
    pub g: ImagePlane,
    pub b: ImagePlane,
}

impl RgbImage {
    pub fn new(r: ImagePlane, g: ImagePlane, b: ImagePlane) -> Result<Self> {
        if r.width() != g.width()
            || r.width() != b.width()
            || r.height() != g.height()
            || r.height() != b.height()
        {
            return Err(Error::Domain("RGB planes must share dimensions".into()));
        }
        Ok(Self { r, g, b })
    }

    pub fn width(&self) -> usize {
        self.r.width()
    }

    pub fn height(&self) -> usize {
        self.r.height()
    }
}

/// Rec.601 luminance, unrounded: Y = 0.299·R + 0.587·G + 0.114·B.
pub fn to_luminance(rgb: &RgbImage) -> ImagePlane {
    let n = rgb.r.data.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(0.299 * rgb.r.data[i] + 0.587 * rgb.g.data[i] + 0.114 * rgb.b.data[i]);
    }
    ImagePlane {
        width: rgb.width(),
        height: rgb.height(),
        data: out,
    }
}

/// Normalized 1-D Gaussian taps for the given radius. The center tap is the
/// maximum and the taps sum to 1.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    debug_assert!(sigma > 0.0);
    let mut taps = Vec::with_capacity(2 * radius + 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in 0..=(2 * radius) {
        let d = i as f64 - radius as f64;
        taps.push(crate::math::exp(-d * d * inv));
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Kernel radius used by the blur operator: ceil(3σ) covers 99.7% of the
/// Gaussian mass.
pub fn blur_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// Reflects an index into [0, n) with half-sample symmetry
/// (…, 1, 0 | 0, 1, …, n−1 | n−1, n−2, …). Folds repeatedly so kernels wider
/// than the image stay defined.
#[inline]
fn mirror(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable convolution with mirrored boundaries.
fn convolve_separable(plane: &ImagePlane, taps: &[f64]) -> ImagePlane {
    let (w, h) = (plane.width, plane.height);
    let radius = taps.len() / 2;
    // Horizontal pass.
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = plane.row(y);
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sx = mirror(x as isize + k as isize - radius as isize, w);
                acc += t * row[sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    // Vertical pass.
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sy = mirror(y as isize + k as isize - radius as isize, h);
                acc += t * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    ImagePlane {
        width: w,
        height: h,
        data: out,
    }
}

/// Gaussian blur with mirrored boundaries. `sigma == 0` is the identity.
///
/// The same operator serves the distortion pipeline and the local-statistics
/// windows of the metrics; boundary handling therefore has to preserve the
/// plane mean, which mirrored extension does exactly.
pub fn gaussian_blur(plane: &ImagePlane, sigma: f64) -> Result<ImagePlane> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(plane.clone());
    }
    let taps = gaussian_kernel(sigma, blur_radius(sigma));
    Ok(convolve_separable(plane, &taps))
}

/// Convolution with an arbitrary symmetric-odd-length tap set, exposed for
/// the local-moment computations of the metrics modules.
pub(crate) fn convolve_mirror(plane: &ImagePlane, taps: &[f64]) -> ImagePlane {
    debug_assert!(taps.len() % 2 == 1);
    convolve_separable(plane, taps)
}

/// Halves resolution by averaging disjoint 2×2 blocks; trailing odd rows and
/// columns are dropped (output dims are floor(w/2) × floor(h/2)).
pub fn downsample2(plane: &ImagePlane) -> Result<ImagePlane> {
    let (w, h) = (plane.width, plane.height);
    if w < 2 || h < 2 {
        return Err(Error::Domain(format!(
            "downsample2 needs at least 2x2 input, got {w}x{h}"
        )));
    }
    let (ow, oh) = (w / 2, h / 2);
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        let top = plane.row(2 * y);
        let bot = plane.row(2 * y + 1);
        for x in 0..ow {
            out.push(0.25 * (top[2 * x] + top[2 * x + 1] + bot[2 * x] + bot[2 * x + 1]));
        }
    }
    ImagePlane::from_vec(ow, oh, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_plane(seed: u64, w: usize, h: usize) -> ImagePlane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect();
        ImagePlane::from_vec(w, h, data).unwrap()
    }

    /// Direct 2-D convolution with the same mirrored boundary; quadratic in
    /// the kernel size, used only as an oracle.
    fn convolve_naive(plane: &ImagePlane, taps: &[f64]) -> ImagePlane {
        let (w, h) = (plane.width(), plane.height());
        let radius = taps.len() / 2;
        let mut out = ImagePlane::new(w, h).unwrap();
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (ky, &ty) in taps.iter().enumerate() {
                    let sy = mirror(y as isize + ky as isize - radius as isize, h);
                    for (kx, &tx) in taps.iter().enumerate() {
                        let sx = mirror(x as isize + kx as isize - radius as isize, w);
                        acc += ty * tx * plane.get(sx, sy);
                    }
                }
                out.set(x, y, acc);
            }
        }
        out
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(ImagePlane::new(0, 4).is_err());
        assert!(ImagePlane::from_vec(3, 3, vec![0.0; 8]).is_err());
        assert!(ImagePlane::from_vec(2, 2, vec![0.0, 1.0, f64::NAN, 3.0]).is_err());
    }

    #[test]
    fn luminance_weights_are_rec601() {
        let full = ImagePlane::from_vec(1, 1, vec![255.0]).unwrap();
        let zero = ImagePlane::from_vec(1, 1, vec![0.0]).unwrap();
        let red = RgbImage::new(full.clone(), zero.clone(), zero.clone()).unwrap();
        let y = to_luminance(&red);
        // 0.299 * 255 = 76.245, kept unrounded (bit-exact product, not the
        // nearest double to the decimal literal).
        assert_eq!(y.get(0, 0), 0.299 * 255.0);
        assert!((y.get(0, 0) - 76.245).abs() < 1e-12);
        let white = RgbImage::new(full.clone(), full.clone(), full.clone()).unwrap();
        assert!((to_luminance(&white).get(0, 0) - 255.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_normalized_with_center_peak() {
        for &(sigma, radius) in &[(0.5, 2usize), (1.5, 5), (4.0, 12)] {
            let taps = gaussian_kernel(sigma, radius);
            assert_eq!(taps.len(), 2 * radius + 1);
            let sum: f64 = taps.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let peak = taps.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(taps[radius], peak);
        }
    }

    #[test]
    fn blur_radius_covers_three_sigma() {
        assert_eq!(blur_radius(1.5), 5);
        assert_eq!(blur_radius(0.25), 1);
        assert_eq!(blur_radius(4.0), 12);
    }

    #[test]
    fn blur_zero_sigma_is_identity_and_negative_rejected() {
        let img = random_plane(1, 9, 7);
        assert_eq!(gaussian_blur(&img, 0.0).unwrap(), img);
        assert!(gaussian_blur(&img, -0.1).is_err());
        assert!(gaussian_blur(&img, f64::NAN).is_err());
    }

    #[test]
    fn separable_blur_matches_naive_2d_oracle() {
        for &(seed, w, h, sigma) in &[(2u64, 16usize, 12usize, 0.8f64), (3, 9, 9, 1.5), (4, 7, 5, 2.0)]
        {
            let img = random_plane(seed, w, h);
            let taps = gaussian_kernel(sigma, blur_radius(sigma));
            let fast = gaussian_blur(&img, sigma).unwrap();
            let slow = convolve_naive(&img, &taps);
            for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
                assert!((a - b).abs() < 1e-9, "separable vs naive: {a} vs {b}");
            }
        }
    }

    #[test]
    fn blur_is_linear() {
        let a = random_plane(5, 12, 10);
        let b = random_plane(6, 12, 10);
        let (ca, cb) = (0.7, -0.3);
        let combo = ImagePlane::from_vec(
            12,
            10,
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(&x, &y)| ca * x + cb * y)
                .collect(),
        )
        .unwrap();
        let lhs = gaussian_blur(&combo, 1.2).unwrap();
        let ba = gaussian_blur(&a, 1.2).unwrap();
        let bb = gaussian_blur(&b, 1.2).unwrap();
        for i in 0..lhs.as_slice().len() {
            let rhs = ca * ba.as_slice()[i] + cb * bb.as_slice()[i];
            assert!((lhs.as_slice()[i] - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn blur_preserves_mean() {
        for &sigma in &[0.25, 1.0, 4.0] {
            let img = random_plane(7, 21, 13);
            let blurred = gaussian_blur(&img, sigma).unwrap();
            assert!(
                (blurred.mean() - img.mean()).abs() < 1e-6,
                "mean drift at sigma {sigma}"
            );
        }
    }

    #[test]
    fn blur_wider_than_image_stays_defined() {
        let img = random_plane(8, 4, 3);
        let blurred = gaussian_blur(&img, 16.0).unwrap();
        assert!(blurred.as_slice().iter().all(|v| v.is_finite()));
        assert!((blurred.mean() - img.mean()).abs() < 1e-6);
    }

    #[test]
    fn downsample_matches_block_means() {
        let img = random_plane(9, 17, 17);
        let out = downsample2(&img).unwrap();
        assert_eq!((out.width(), out.height()), (8, 8));
        for y in 0..8 {
            for x in 0..8 {
                let m = 0.25
                    * (img.get(2 * x, 2 * y)
                        + img.get(2 * x + 1, 2 * y)
                        + img.get(2 * x, 2 * y + 1)
                        + img.get(2 * x + 1, 2 * y + 1));
                assert!((out.get(x, y) - m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn downsample_rejects_tiny_images() {
        let img = random_plane(10, 1, 5);
        assert!(downsample2(&img).is_err());
    }

    #[test]
    fn downsample_of_constant_is_constant() {
        let img = ImagePlane::from_vec(6, 6, vec![42.0; 36]).unwrap();
        let out = downsample2(&img).unwrap();
        assert!(out.as_slice().iter().all(|&v| (v - 42.0).abs() < 1e-12));
    }
}
