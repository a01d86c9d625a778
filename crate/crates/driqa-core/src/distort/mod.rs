//! Two-stage synthetic distortion pipelines.
//!
//! A pristine image (PR) passes through a stage-1 distortion to become the
//! degraded reference (DR), and the DR passes through a stage-2 distortion to
//! become the final distorted image (FD). Five orderings of distortion types
//! are generated; two further names exist only as aggregation labels when
//! results are pooled.
//!
//! Severity is controlled by fixed per-(type, stage) parameter ladders:
//! geometric progressions from a near-lossless level 1 to a severe top level
//! (11 steps at stage 1, 17 at stage 2). The ladder table in this module is
//! the single source of truth; tooling exports it verbatim.
//!
//! Determinism: the only stochastic operator is Gaussian noise. Its RNG seed
//! is derived from (dataset seed, stage index, stage-1 level), never from the
//! stage-2 level, so one DR image is shared bit-exactly by all of its FD
//! children.

mod jp2k;
mod jpeg;

pub use jp2k::BASE_STEP as JP2K_BASE_STEP;

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::{gaussian_blur, ImagePlane};
use crate::math::mix64;
use crate::{Error, Result};

/// Distortion operators available to the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistortionType {
    /// Gaussian blur; parameter is the kernel sigma.
    GaussianBlur,
    /// Additive white Gaussian noise; parameter is the noise sigma. Output
    /// is clamped to [0, 255].
    GaussianNoise,
    /// Blockwise-DCT quantization compression; parameter scales the standard
    /// luminance quantization table.
    JpegSim,
    /// Wavelet deadzone-quantization compression; parameter scales the base
    /// quantizer step.
    Jp2kSim,
}

impl DistortionType {
    pub fn name(self) -> &'static str {
        match self {
            DistortionType::GaussianBlur => "blur",
            DistortionType::GaussianNoise => "noise",
            DistortionType::JpegSim => "jpeg",
            DistortionType::Jp2kSim => "jp2k",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "blur" => Ok(DistortionType::GaussianBlur),
            "noise" => Ok(DistortionType::GaussianNoise),
            "jpeg" => Ok(DistortionType::JpegSim),
            "jp2k" => Ok(DistortionType::Jp2kSim),
            other => Err(Error::Domain(format!("unknown distortion type '{other}'"))),
        }
    }
}

/// Pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn index(self) -> u64 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }

    /// Number of ladder levels at this stage.
    pub fn levels(self) -> u8 {
        match self {
            Stage::One => LEVELS_STAGE1,
            Stage::Two => LEVELS_STAGE2,
        }
    }
}

pub const LEVELS_STAGE1: u8 = 11;
pub const LEVELS_STAGE2: u8 = 17;

/// A fully resolved distortion instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionSpec {
    pub kind: DistortionType,
    pub stage: Stage,
    /// 1-based ladder level.
    pub level: u8,
    /// Resolved operator parameter for (kind, stage, level).
    pub param: f64,
}

impl DistortionSpec {
    /// Looks up the ladder and builds the spec.
    pub fn from_ladder(kind: DistortionType, stage: Stage, level: u8) -> Result<Self> {
        let param = resolve_ladder(kind, stage, level)?;
        Ok(Self {
            kind,
            stage,
            level,
            param,
        })
    }
}

/// Stage-1 × stage-2 distortion pairings.
///
/// The first five generate images. `NbjJpeg` (the pool of the three
/// JPEG-terminated pipelines) and `AllData` are aggregation labels only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComboType {
    BlurJpeg,
    BlurNoise,
    JpegJpeg,
    NoiseJpeg,
    NoiseJp2k,
    NbjJpeg,
    AllData,
}

/// The five image-generating combos, in canonical order.
pub const GENERATING_COMBOS: [ComboType; 5] = [
    ComboType::BlurJpeg,
    ComboType::BlurNoise,
    ComboType::JpegJpeg,
    ComboType::NoiseJpeg,
    ComboType::NoiseJp2k,
];

/// All seven labels (generating combos plus aggregation pools), in reporting
/// order.
pub const ALL_COMBO_LABELS: [ComboType; 7] = [
    ComboType::BlurJpeg,
    ComboType::BlurNoise,
    ComboType::JpegJpeg,
    ComboType::NoiseJpeg,
    ComboType::NoiseJp2k,
    ComboType::NbjJpeg,
    ComboType::AllData,
];

impl ComboType {
    /// Stage kinds for generating combos; `None` for aggregation labels.
    pub fn stages(self) -> Option<(DistortionType, DistortionType)> {
        match self {
            ComboType::BlurJpeg => Some((DistortionType::GaussianBlur, DistortionType::JpegSim)),
            ComboType::BlurNoise => {
                Some((DistortionType::GaussianBlur, DistortionType::GaussianNoise))
            }
            ComboType::JpegJpeg => Some((DistortionType::JpegSim, DistortionType::JpegSim)),
            ComboType::NoiseJpeg => {
                Some((DistortionType::GaussianNoise, DistortionType::JpegSim))
            }
            ComboType::NoiseJp2k => {
                Some((DistortionType::GaussianNoise, DistortionType::Jp2kSim))
            }
            ComboType::NbjJpeg | ComboType::AllData => None,
        }
    }

    /// Generating combos whose samples this label pools.
    pub fn members(self) -> Vec<ComboType> {
        match self {
            ComboType::NbjJpeg => {
                [ComboType::NoiseJpeg, ComboType::BlurJpeg, ComboType::JpegJpeg].to_vec()
            }
            ComboType::AllData => GENERATING_COMBOS.to_vec(),
            single => [single].to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ComboType::BlurJpeg => "blur-jpeg",
            ComboType::BlurNoise => "blur-noise",
            ComboType::JpegJpeg => "jpeg-jpeg",
            ComboType::NoiseJpeg => "noise-jpeg",
            ComboType::NoiseJp2k => "noise-jp2k",
            ComboType::NbjJpeg => "nbj-jpeg",
            ComboType::AllData => "all-data",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "blur-jpeg" => Ok(ComboType::BlurJpeg),
            "blur-noise" => Ok(ComboType::BlurNoise),
            "jpeg-jpeg" => Ok(ComboType::JpegJpeg),
            "noise-jpeg" => Ok(ComboType::NoiseJpeg),
            "noise-jp2k" => Ok(ComboType::NoiseJp2k),
            "nbj-jpeg" => Ok(ComboType::NbjJpeg),
            "all-data" => Ok(ComboType::AllData),
            other => Err(Error::Domain(format!("unknown combo '{other}'"))),
        }
    }
}

// Ladder endpoints. Each ladder is a geometric progression over its stage's
// level count; endpoints are calibration constants chosen so level 1 is
// near-lossless and the top level is severe under the bundled metrics.
const BLUR_S1: (f64, f64) = (0.25, 4.0);
const NOISE_S1: (f64, f64) = (1.0, 32.0);
const JPEG_S1: (f64, f64) = (0.10, 2.5);
const NOISE_S2: (f64, f64) = (1.0, 48.0);
const JPEG_S2: (f64, f64) = (0.10, 4.0);
const JP2K_S2: (f64, f64) = (0.10, 4.0);

fn geometric(endpoints: (f64, f64), level: u8, levels: u8) -> f64 {
    let (lo, hi) = endpoints;
    let t = (level - 1) as f64 / (levels - 1) as f64;
    lo * crate::math::pow(hi / lo, t)
}

/// Resolves the operator parameter for (kind, stage, level).
///
/// Valid pairs are exactly the ladder table rows: blur/noise/jpeg at stage 1,
/// noise/jpeg/jp2k at stage 2. Levels are 1-based and bounded by the stage's
/// level count.
pub fn resolve_ladder(kind: DistortionType, stage: Stage, level: u8) -> Result<f64> {
    if level == 0 || level > stage.levels() {
        return Err(Error::Domain(format!(
            "level {level} out of range for stage {} (1..={})",
            stage.index(),
            stage.levels()
        )));
    }
    let endpoints = match (kind, stage) {
        (DistortionType::GaussianBlur, Stage::One) => BLUR_S1,
        (DistortionType::GaussianNoise, Stage::One) => NOISE_S1,
        (DistortionType::JpegSim, Stage::One) => JPEG_S1,
        (DistortionType::GaussianNoise, Stage::Two) => NOISE_S2,
        (DistortionType::JpegSim, Stage::Two) => JPEG_S2,
        (DistortionType::Jp2kSim, Stage::Two) => JP2K_S2,
        (DistortionType::Jp2kSim, Stage::One) => {
            return Err(Error::Domain(
                "jp2k appears only as the stage-2 member of noise-jp2k".into(),
            ))
        }
        (DistortionType::GaussianBlur, Stage::Two) => {
            return Err(Error::Domain(
                "no stage-2 blur ladder: combos never blur at stage 2".into(),
            ))
        }
    };
    Ok(geometric(endpoints, level, stage.levels()))
}

/// One row of the ladder table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderEntry {
    pub kind: DistortionType,
    pub stage: Stage,
    pub level: u8,
    pub param: f64,
}

/// Every (kind, stage, level) row, in table order. Tooling serializes this
/// so documentation, tests, and generation share one definition.
pub fn ladder_entries() -> Vec<LadderEntry> {
    let mut rows = Vec::new();
    let stage1 = [
        DistortionType::GaussianBlur,
        DistortionType::GaussianNoise,
        DistortionType::JpegSim,
    ];
    let stage2 = [
        DistortionType::GaussianNoise,
        DistortionType::JpegSim,
        DistortionType::Jp2kSim,
    ];
    for kind in stage1 {
        for level in 1..=LEVELS_STAGE1 {
            rows.push(LadderEntry {
                kind,
                stage: Stage::One,
                level,
                param: resolve_ladder(kind, Stage::One, level).expect("table row"),
            });
        }
    }
    for kind in stage2 {
        for level in 1..=LEVELS_STAGE2 {
            rows.push(LadderEntry {
                kind,
                stage: Stage::Two,
                level,
                param: resolve_ladder(kind, Stage::Two, level).expect("table row"),
            });
        }
    }
    rows
}

/// RNG seed for one pipeline stage. Depends on the stage-1 level but never
/// the stage-2 level, so a DR is invariant across its FD children.
pub fn stage_seed(seed: u64, stage: Stage, level1: u8) -> u64 {
    mix64(&[seed, stage.index(), level1 as u64])
}

/// Applies one distortion operator.
///
/// `seed` feeds the noise operator; deterministic operators ignore it.
/// Compression simulators require at least 32×32 input. Noise output is
/// clamped to [0, 255]; the compression simulators may overshoot the nominal
/// range slightly (ringing) and are left unclamped so repeated application
/// is exactly idempotent — files clamp at save time.
pub fn apply(img: &ImagePlane, spec: &DistortionSpec, seed: u64) -> Result<ImagePlane> {
    if !spec.param.is_finite() || spec.param < 0.0 {
        return Err(Error::Domain(format!(
            "distortion parameter must be finite and >= 0, got {}",
            spec.param
        )));
    }
    match spec.kind {
        DistortionType::GaussianBlur => gaussian_blur(img, spec.param),
        DistortionType::GaussianNoise => Ok(add_gaussian_noise(img, spec.param, seed)),
        DistortionType::JpegSim => {
            require_min_dims(img, 32)?;
            jpeg::simulate(img, spec.param)
        }
        DistortionType::Jp2kSim => {
            require_min_dims(img, 32)?;
            jp2k::simulate(img, spec.param)
        }
    }
}

fn require_min_dims(img: &ImagePlane, min: usize) -> Result<()> {
    if img.width() < min || img.height() < min {
        return Err(Error::Domain(format!(
            "compression simulators need at least {min}x{min}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Adds i.i.d. zero-mean Gaussian noise in row-major order and clamps to
/// [0, 255]. Bit-reproducible for a given seed.
pub fn add_gaussian_noise(img: &ImagePlane, sigma: f64, seed: u64) -> ImagePlane {
    if sigma == 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated by caller");
    img.map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 255.0))
}

/// Output of a two-stage pipeline run.
#[derive(Debug, Clone)]
pub struct TwoStageOutput {
    pub dr: ImagePlane,
    pub fd: ImagePlane,
    pub stage1: DistortionSpec,
    pub stage2: DistortionSpec,
}

/// Runs `pristine → DR → FD` for a generating combo at the given ladder
/// levels. Aggregation labels are rejected.
pub fn run_two_stage(
    pristine: &ImagePlane,
    combo: ComboType,
    level1: u8,
    level2: u8,
    seed: u64,
) -> Result<TwoStageOutput> {
    let Some((kind1, kind2)) = combo.stages() else {
        return Err(Error::Domain(format!(
            "combo '{}' is an aggregation label and generates no images",
            combo.name()
        )));
    };
    let stage1 = DistortionSpec::from_ladder(kind1, Stage::One, level1)?;
    let stage2 = DistortionSpec::from_ladder(kind2, Stage::Two, level2)?;
    let dr = apply(pristine, &stage1, stage_seed(seed, Stage::One, level1))?;
    let fd = apply(&dr, &stage2, stage_seed(seed, Stage::Two, level1))?;
    Ok(TwoStageOutput {
        dr,
        fd,
        stage1,
        stage2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth_image;

    #[test]
    fn ladders_hit_documented_endpoints() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12 * b.abs().max(1.0);
        let r = |k, s, l| resolve_ladder(k, s, l).unwrap();
        assert!(close(r(DistortionType::GaussianBlur, Stage::One, 1), 0.25));
        assert!(close(r(DistortionType::GaussianBlur, Stage::One, 11), 4.0));
        assert!(close(r(DistortionType::GaussianNoise, Stage::One, 1), 1.0));
        assert!(close(r(DistortionType::GaussianNoise, Stage::One, 11), 32.0));
        assert!(close(r(DistortionType::JpegSim, Stage::One, 1), 0.10));
        assert!(close(r(DistortionType::JpegSim, Stage::One, 11), 2.5));
        assert!(close(r(DistortionType::GaussianNoise, Stage::Two, 1), 1.0));
        assert!(close(r(DistortionType::GaussianNoise, Stage::Two, 17), 48.0));
        assert!(close(r(DistortionType::JpegSim, Stage::Two, 17), 4.0));
        assert!(close(r(DistortionType::Jp2kSim, Stage::Two, 17), 4.0));
    }

    #[test]
    fn ladders_are_geometric_and_monotone() {
        for entry_set in [
            (DistortionType::GaussianBlur, Stage::One),
            (DistortionType::GaussianNoise, Stage::One),
            (DistortionType::JpegSim, Stage::One),
            (DistortionType::GaussianNoise, Stage::Two),
            (DistortionType::JpegSim, Stage::Two),
            (DistortionType::Jp2kSim, Stage::Two),
        ] {
            let (kind, stage) = entry_set;
            let params: alloc::vec::Vec<f64> = (1..=stage.levels())
                .map(|l| resolve_ladder(kind, stage, l).unwrap())
                .collect();
            let ratio = params[1] / params[0];
            for w in params.windows(2) {
                assert!(w[1] > w[0], "{kind:?} not strictly increasing");
                assert!(
                    ((w[1] / w[0]) - ratio).abs() < 1e-12 * ratio,
                    "{kind:?} spacing not geometric"
                );
            }
        }
    }

    #[test]
    fn ladder_rejects_invalid_rows() {
        assert!(resolve_ladder(DistortionType::JpegSim, Stage::One, 0).is_err());
        assert!(resolve_ladder(DistortionType::JpegSim, Stage::One, 12).is_err());
        assert!(resolve_ladder(DistortionType::JpegSim, Stage::Two, 18).is_err());
        assert!(resolve_ladder(DistortionType::Jp2kSim, Stage::One, 1).is_err());
        assert!(resolve_ladder(DistortionType::GaussianBlur, Stage::Two, 1).is_err());
    }

    #[test]
    fn ladder_table_lists_every_row_once() {
        let rows = ladder_entries();
        assert_eq!(rows.len(), 3 * 11 + 3 * 17);
        for row in &rows {
            let param = resolve_ladder(row.kind, row.stage, row.level).unwrap();
            assert_eq!(param, row.param, "row {:?}", row);
        }
    }

    #[test]
    fn noise_is_seeded_and_clamped() {
        let img = synth_image(1, 48, 48);
        let a = add_gaussian_noise(&img, 12.0, 99);
        let b = add_gaussian_noise(&img, 12.0, 99);
        let c = add_gaussian_noise(&img, 12.0, 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.as_slice().iter().all(|&v| (0.0..=255.0).contains(&v)));
        // Zero-mean: the average perturbation is small relative to sigma.
        let drift = a.mean() - img.mean();
        assert!(drift.abs() < 1.0, "noise mean drift {drift}");
    }

    #[test]
    fn dr_is_invariant_to_stage2_level() {
        let img = synth_image(2, 64, 64);
        let a = run_two_stage(&img, ComboType::NoiseJpeg, 5, 1, 7).unwrap();
        let b = run_two_stage(&img, ComboType::NoiseJpeg, 5, 17, 7).unwrap();
        assert_eq!(a.dr, b.dr);
        assert_ne!(a.fd, b.fd);
    }

    #[test]
    fn aggregation_labels_do_not_generate() {
        let img = synth_image(3, 64, 64);
        assert!(run_two_stage(&img, ComboType::NbjJpeg, 1, 1, 0).is_err());
        assert!(run_two_stage(&img, ComboType::AllData, 1, 1, 0).is_err());
    }

    #[test]
    fn combo_membership_matches_names() {
        assert_eq!(ComboType::NbjJpeg.members().len(), 3);
        assert_eq!(ComboType::AllData.members().len(), 5);
        assert_eq!(ComboType::BlurJpeg.members(), [ComboType::BlurJpeg].to_vec());
        for combo in ALL_COMBO_LABELS {
            assert_eq!(ComboType::parse(combo.name()).unwrap(), combo);
        }
    }

    #[test]
    fn compression_sims_reject_tiny_images() {
        let img = synth_image(4, 16, 16);
        let spec = DistortionSpec::from_ladder(DistortionType::JpegSim, Stage::One, 1).unwrap();
        assert!(apply(&img, &spec, 0).is_err());
    }
}
