//! Image file decode and encode.
//!
//! Readable formats: PNG and binary PPM/PGM, 8 bits per sample. Grayscale
//! sources are replicated across the three channels. Writable formats: PNG
//! (by far the default), plus binary PGM/PPM for interoperability. Samples
//! are clamped to [0, 255] and rounded half away from zero on save, so
//! saving and reloading written 8-bit data reproduces it exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use driqa_core::image::to_luminance;
use driqa_core::{ImagePlane, RgbImage};

use crate::error::{Result, ToolError};

/// Quantizes one sample for an 8-bit file: clamp to [0, 255], then round
/// half away from zero (which, after the clamp, is plain half-up).
pub fn quantize(v: f64) -> u8 {
    let c = v.clamp(0.0, 255.0);
    (c + 0.5).floor() as u8
}

fn decode_error(path: &Path, err: image::ImageError) -> ToolError {
    match err {
        // Content that ends mid-stream is a malformed file, not a failed
        // read of an intact one.
        image::ImageError::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            ToolError::Format(format!("{}: unexpected end of file", path.display()))
        }
        image::ImageError::IoError(e) => ToolError::io(path, e),
        other => ToolError::Format(format!("{}: {other}", path.display())),
    }
}

/// Loads a PNG or binary PPM/PGM file into floating-point channel planes.
///
/// Grayscale files come back with the single channel replicated into R, G,
/// and B. Sixteen-bit inputs are rejected rather than silently truncated.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let reader = image::ImageReader::open(path).map_err(|e| ToolError::io(path, e))?;
    let decoded = reader.decode().map_err(|e| decode_error(path, e))?;
    let eight_bit = matches!(
        decoded,
        image::DynamicImage::ImageLuma8(_)
            | image::DynamicImage::ImageLumaA8(_)
            | image::DynamicImage::ImageRgb8(_)
            | image::DynamicImage::ImageRgba8(_)
    );
    if !eight_bit {
        return Err(ToolError::Format(format!(
            "{}: only 8-bit samples are supported",
            path.display()
        )));
    }
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut r = Vec::with_capacity(w * h);
    let mut g = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for px in rgb.pixels() {
        r.push(px.0[0] as f64);
        g.push(px.0[1] as f64);
        b.push(px.0[2] as f64);
    }
    let r = ImagePlane::from_vec(w, h, r)?;
    let g = ImagePlane::from_vec(w, h, g)?;
    let b = ImagePlane::from_vec(w, h, b)?;
    Ok(RgbImage::new(r, g, b)?)
}

/// Loads an image file and reduces it to its luminance plane.
///
/// A grayscale file already is its luminance plane and is returned
/// sample-for-sample, so written 8-bit gray data reloads exactly; color
/// files go through the weighted sum.
pub fn load_luminance(path: &Path) -> Result<ImagePlane> {
    let img = load_image(path)?;
    if img.r == img.g && img.g == img.b {
        return Ok(img.r);
    }
    Ok(to_luminance(&img))
}

fn plane_bytes(plane: &ImagePlane) -> Vec<u8> {
    plane.as_slice().iter().map(|&v| quantize(v)).collect()
}

/// Writes a single plane as an 8-bit grayscale file; `.png` and `.pgm`
/// extensions select the format.
pub fn save_plane(path: &Path, plane: &ImagePlane) -> Result<()> {
    match extension(path)? {
        "png" => {
            let buf: image::GrayImage = image::ImageBuffer::from_raw(
                plane.width() as u32,
                plane.height() as u32,
                plane_bytes(plane),
            )
            .expect("plane byte count matches dimensions");
            buf.save(path)
                .map_err(|e| ToolError::Io(format!("{}: {e}", path.display())))
        }
        "pgm" => {
            let mut out = Vec::new();
            write!(out, "P5\n{} {}\n255\n", plane.width(), plane.height())
                .expect("in-memory write");
            out.extend_from_slice(&plane_bytes(plane));
            fs::write(path, out).map_err(|e| ToolError::io(path, e))
        }
        other => Err(ToolError::Validation(format!(
            "cannot write grayscale '.{other}' files (use .png or .pgm)"
        ))),
    }
}

/// Writes three channel planes as an 8-bit color file; `.png` and `.ppm`
/// extensions select the format.
pub fn save_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let mut interleaved = Vec::with_capacity(w * h * 3);
    let (r, g, b) = (img.r.as_slice(), img.g.as_slice(), img.b.as_slice());
    for i in 0..w * h {
        interleaved.push(quantize(r[i]));
        interleaved.push(quantize(g[i]));
        interleaved.push(quantize(b[i]));
    }
    match extension(path)? {
        "png" => {
            let buf: image::RgbImage =
                image::ImageBuffer::from_raw(w as u32, h as u32, interleaved)
                    .expect("byte count matches dimensions");
            buf.save(path)
                .map_err(|e| ToolError::Io(format!("{}: {e}", path.display())))
        }
        "ppm" => {
            let mut out = Vec::new();
            write!(out, "P6\n{w} {h}\n255\n").expect("in-memory write");
            out.extend_from_slice(&interleaved);
            fs::write(path, out).map_err(|e| ToolError::io(path, e))
        }
        other => Err(ToolError::Validation(format!(
            "cannot write color '.{other}' files (use .png or .ppm)"
        ))),
    }
}

/// Exports a similarity map with values in [-1, 1] as an 8-bit grayscale
/// file, mapping the range affinely onto [0, 255].
pub fn save_quality_map(path: &Path, map: &ImagePlane) -> Result<()> {
    let scaled = map.map(|v| (v + 1.0) * 127.5);
    save_plane(path, &scaled)
}

fn extension(path: &Path) -> Result<&str> {
    path.extension().and_then(|e| e.to_str()).ok_or_else(|| {
        ToolError::Validation(format!(
            "{}: output path needs a file extension",
            path.display()
        ))
    })
}
