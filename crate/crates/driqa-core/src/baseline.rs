//! Single-stage baseline predictors for the two-stage setting.
//!
//! When an image has been distorted in two stages, existing one-stage
//! metrics can still be pressed into service in three ways, each blind to
//! part of the problem:
//!
//! * **Baseline 1** — full-reference between midpoint and final image:
//!   measures only the second-stage degradation and implicitly assumes the
//!   midpoint was pristine.
//! * **Baseline 2** — no-reference on the final image alone: ignores the
//!   reference chain entirely. Its raw score is lower-is-better
//!   ([`BaselineKind::higher_is_better`]); correlation harnesses must
//!   orient it before comparing.
//! * **Baseline 3** — the two-step product: a no-reference estimate of the
//!   midpoint, mapped onto the full-reference scale by a fitted logistic
//!   curve, multiplied by the midpoint→final MS-SSIM. The mapping is fitted
//!   (elsewhere) with [`crate::logistic::fit_logistic`] against MS-SSIM
//!   scores so both factors — and hence the product — live in [0, 1].
//!
//! These are the reference points the fusion models are measured against;
//! none of them sees both the first-stage degradation and the final image
//! at once, which is exactly the gap the models close.

use alloc::format;

use crate::fr::{msssim, FrBackend};
use crate::image::ImagePlane;
use crate::logistic::LogisticParams;
use crate::nr::{niqe_score, NiqeModel};
use crate::{Error, Result};

/// Selector for the three baseline approaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    /// Full-reference score between midpoint and final image.
    Baseline1,
    /// No-reference score of the final image (lower is better).
    Baseline2,
    /// Mapped no-reference midpoint score × midpoint→final MS-SSIM.
    Baseline3,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Baseline1 => "baseline1",
            BaselineKind::Baseline2 => "baseline2",
            BaselineKind::Baseline3 => "baseline3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "baseline1" => Ok(BaselineKind::Baseline1),
            "baseline2" => Ok(BaselineKind::Baseline2),
            "baseline3" => Ok(BaselineKind::Baseline3),
            other => Err(Error::Domain(format!(
                "unknown baseline '{other}' (expected baseline1, baseline2, or baseline3)"
            ))),
        }
    }

    /// Score orientation: `false` means lower scores indicate better
    /// quality, so rank correlations against quality labels must negate.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, BaselineKind::Baseline2)
    }
}

/// Everything a baseline might need; each kind reads its own subset.
///
/// `fr_backend` is only consulted by Baseline 1 (Baseline 3's
/// full-reference factor is MS-SSIM by definition of the two-step product).
#[derive(Clone, Copy)]
pub struct BaselineInputs<'a> {
    /// Midpoint (first-stage-distorted) image.
    pub dr: Option<&'a ImagePlane>,
    /// Final (two-stage-distorted) image.
    pub fd: Option<&'a ImagePlane>,
    /// Full-reference backend for Baseline 1.
    pub fr_backend: FrBackend,
    /// Trained no-reference model for Baselines 2 and 3.
    pub nr_model: Option<&'a NiqeModel>,
    /// No-reference → full-reference-scale mapping for Baseline 3.
    pub nr_map: Option<&'a LogisticParams>,
}

impl<'a> BaselineInputs<'a> {
    fn require<T>(v: Option<T>, kind: BaselineKind, what: &str) -> Result<T> {
        v.ok_or_else(|| {
            Error::Domain(format!("{} needs {what}", kind.name()))
        })
    }
}

/// Dispatches to the baseline implementation selected by `kind`; errors
/// from the underlying metrics propagate unchanged.
pub fn baseline_predict(kind: BaselineKind, inputs: &BaselineInputs) -> Result<f64> {
    match kind {
        BaselineKind::Baseline1 => {
            let dr = BaselineInputs::require(inputs.dr, kind, "the midpoint image")?;
            let fd = BaselineInputs::require(inputs.fd, kind, "the final image")?;
            baseline1(dr, fd, inputs.fr_backend)
        }
        BaselineKind::Baseline2 => {
            let fd = BaselineInputs::require(inputs.fd, kind, "the final image")?;
            let model =
                BaselineInputs::require(inputs.nr_model, kind, "a trained no-reference model")?;
            baseline2(fd, model)
        }
        BaselineKind::Baseline3 => {
            let dr = BaselineInputs::require(inputs.dr, kind, "the midpoint image")?;
            let fd = BaselineInputs::require(inputs.fd, kind, "the final image")?;
            let model =
                BaselineInputs::require(inputs.nr_model, kind, "a trained no-reference model")?;
            let map = BaselineInputs::require(
                inputs.nr_map,
                kind,
                "a fitted no-reference-to-full-reference mapping",
            )?;
            baseline3(dr, fd, model, map)
        }
    }
}

/// Baseline 1: the full-reference score between midpoint and final image —
/// the second-stage relative score used on its own. Identical images score
/// exactly 1.
pub fn baseline1(dr: &ImagePlane, fd: &ImagePlane, backend: FrBackend) -> Result<f64> {
    backend.compare(dr, fd)
}

/// Baseline 2: the no-reference score of the final image. Lower is better;
/// the value is returned unoriented.
pub fn baseline2(fd: &ImagePlane, model: &NiqeModel) -> Result<f64> {
    niqe_score(fd, model)
}

/// Baseline 3 (two-step product): logistic-mapped no-reference score of the
/// midpoint × MS-SSIM(midpoint, final).
///
/// The mapped factor is clamped into [0, 1] so the product remains a valid
/// quality index even where the fitted mapping overshoots its target range;
/// a mapped value of exactly 1 leaves the MS-SSIM factor untouched.
pub fn baseline3(
    dr: &ImagePlane,
    fd: &ImagePlane,
    model: &NiqeModel,
    map: &LogisticParams,
) -> Result<f64> {
    let nr = niqe_score(dr, model)?;
    let mapped = map.evaluate(nr).clamp(0.0, 1.0);
    Ok(mapped * msssim(dr, fd)?)
}
