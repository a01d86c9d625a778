//! Closed-form prediction models fusing midpoint scores into an estimate of
//! final-versus-original quality.
//!
//! Setting: an image passes two degradation stages. `as_dr` scores the
//! midpoint against the original, `rs_fd` scores the final image against the
//! midpoint, and the target `as_fd` scores the final image against the
//! original. Plotting `as_fd` against `rs_fd` for a fixed midpoint yields a
//! near-straight curve anchored at `(1, as_dr)` — an undistorted second
//! stage changes nothing — whose slope varies almost linearly with `as_dr`.
//!
//! * **Model 1** exploits exactly that: prediction
//!   `as_dr + (P1·as_dr + P2)·(rs_fd − 1)`, fitted in two tiers (per-curve
//!   anchored slopes, then a line through slope-versus-anchor).
//! * **Model 2** is the unconstrained quadratic
//!   `a·as² + b·rs² + c·as + d·rs + e·as·rs + f`, fitted by ordinary least
//!   squares; it contains Model 1 as the special case
//!   `(a,b,c,d,e,f) = (0, 0, 1−P1, P2, P1, −P2)`.
//!
//! When the midpoint cannot be scored against the original (no-reference
//! setting), a logistic-mapped NR score substitutes for `as_dr`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::distort::ComboType;
use crate::linalg::{least_squares, Matrix};
use crate::logistic::LogisticParams;
use crate::math::{self, ols_line};
use crate::{Error, Result};

#[allow(unused_imports)]
use crate::math::F64Ext;

/// How a score column was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreBackend {
    Ssim,
    Msssim,
    /// No-reference score mapped onto the FR scale with a fitted logistic.
    MappedNr,
}

impl ScoreBackend {
    pub fn name(self) -> &'static str {
        match self {
            ScoreBackend::Ssim => "ssim",
            ScoreBackend::Msssim => "msssim",
            ScoreBackend::MappedNr => "mapped-nr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ssim" => Ok(ScoreBackend::Ssim),
            "msssim" => Ok(ScoreBackend::Msssim),
            "mapped-nr" => Ok(ScoreBackend::MappedNr),
            other => Err(Error::Domain(format!("unknown score backend '{other}'"))),
        }
    }
}

/// (how `as_dr` estimates are produced, how `rs_fd` is produced).
/// The RS side always compares two concrete images, so it cannot be
/// `MappedNr`.
pub type BackendPair = (ScoreBackend, ScoreBackend);

fn check_backend_pair(pair: BackendPair) -> Result<()> {
    if pair.1 == ScoreBackend::MappedNr {
        return Err(Error::Domain(
            "the RS side of a backend pair is a reference comparison; mapped-nr cannot produce it"
                .into(),
        ));
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite")))
    }
}

/// One fitted curve slope: the anchored regression behind both tier 1 of
/// Model 1 and the behavior analyzer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// Slope of `as_fd − as_dr` against `rs_fd − 1` through the origin.
    pub m: f64,
    /// Root-mean-square residual of the anchored line over the points.
    pub residual_rmse: f64,
}

/// Fits the anchored line `as_fd ≈ as_dr + m·(rs_fd − 1)` to one curve's
/// points `(rs_fd, as_fd)` by least squares through the anchor `(1, as_dr)`.
pub fn anchored_slope(as_dr: f64, points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.is_empty() {
        return Err(Error::Degenerate("anchored fit needs points".into()));
    }
    if !as_dr.is_finite() || !points.iter().all(|(r, a)| r.is_finite() && a.is_finite()) {
        return Err(Error::Domain("anchored fit inputs must be finite".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(rs, as_fd) in points {
        let dx = rs - 1.0;
        num += dx * (as_fd - as_dr);
        den += dx * dx;
    }
    if den <= 0.0 {
        return Err(Error::Degenerate(
            "anchored fit is undetermined: every point has rs_fd == 1".into(),
        ));
    }
    let m = num / den;
    let mse = points
        .iter()
        .map(|&(rs, as_fd)| {
            let resid = as_fd - (as_dr + m * (rs - 1.0));
            resid * resid
        })
        .sum::<f64>()
        / points.len() as f64;
    Ok(SlopeFit {
        m,
        residual_rmse: F64Ext::sqrt(mse),
    })
}

/// Line through (anchor score, slope) pairs: returns (P1, P2, R²) where
/// `m ≈ P1·as_dr + P2`.
pub fn slope_versus_anchor_line(pairs: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::Degenerate(
            "slope-versus-anchor fit needs at least two curves".into(),
        ));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    check_finite(&xs, "anchor scores")?;
    check_finite(&ys, "curve slopes")?;
    let (p1, p2) = ols_line(&xs, &ys).ok_or_else(|| {
        Error::Degenerate("slope-versus-anchor fit needs distinct anchor scores".into())
    })?;
    // Coefficient of determination of the tier-2 line.
    let my = math::mean(&ys);
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - (p1 * x + p2);
            r * r
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((p1, p2, r2))
}

/// A curve group for Model-1 fitting: one midpoint (one anchor score) and
/// that midpoint's second-stage sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveGroup {
    /// Score of the shared midpoint against the original.
    pub as_dr: f64,
    /// `(rs_fd, as_fd)` per second-stage level.
    pub points: Vec<(f64, f64)>,
}

/// Fitted Model-1 coefficients with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Model1Params {
    /// Slope of the slope-versus-anchor line.
    pub p1: f64,
    /// Intercept of the slope-versus-anchor line.
    pub p2: f64,
    pub combo: ComboType,
    pub backends: BackendPair,
}

/// Model-1 diagnostics alongside the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model1Fit {
    pub params: Model1Params,
    /// Per-group (anchor score, fitted slope, residual RMSE).
    pub group_slopes: Vec<(f64, f64, f64)>,
    /// R² of the tier-2 slope-versus-anchor line.
    pub tier2_r2: f64,
}

impl Model1Params {
    /// Predicted `as_fd` in anchored point-slope form
    /// `as_dr + (P1·as_dr + P2)·(rs_fd − 1)`; exactly `as_dr` at
    /// `rs_fd = 1`. Inputs are expected in [0, 1.05] (small FR overshoot
    /// tolerated); non-finite inputs are rejected.
    pub fn predict(&self, as_dr: f64, rs_fd: f64) -> Result<f64> {
        check_finite(&[as_dr, rs_fd], "model inputs")?;
        Ok(as_dr + (self.p1 * as_dr + self.p2) * (rs_fd - 1.0))
    }

    /// Prediction when the midpoint is only observed by a no-reference
    /// measure: the NR score is first mapped onto the FR scale, then used in
    /// place of `as_dr`.
    pub fn predict_from_nr(
        &self,
        nr_score: f64,
        rs_fd: f64,
        mapping: &LogisticParams,
    ) -> Result<f64> {
        self.predict(mapping.evaluate(nr_score), rs_fd)
    }
}

/// Two-tier Model-1 fit: anchored slope per curve group, then the
/// slope-versus-anchor line.
///
/// Needs at least two groups with distinct anchors and at least three
/// points per group.
pub fn fit_model1(
    groups: &[CurveGroup],
    combo: ComboType,
    backends: BackendPair,
) -> Result<Model1Fit> {
    check_backend_pair(backends)?;
    if groups.len() < 2 {
        return Err(Error::Degenerate(
            "model-1 fit needs at least two curve groups".into(),
        ));
    }
    let mut group_slopes = Vec::with_capacity(groups.len());
    for group in groups {
        if group.points.len() < 3 {
            return Err(Error::Degenerate(
                "model-1 fit needs at least three points per curve group".into(),
            ));
        }
        let fit = anchored_slope(group.as_dr, &group.points)?;
        group_slopes.push((group.as_dr, fit.m, fit.residual_rmse));
    }
    let pairs: Vec<(f64, f64)> = group_slopes.iter().map(|&(a, m, _)| (a, m)).collect();
    let (p1, p2, tier2_r2) = slope_versus_anchor_line(&pairs)?;
    Ok(Model1Fit {
        params: Model1Params {
            p1,
            p2,
            combo,
            backends,
        },
        group_slopes,
        tier2_r2,
    })
}

/// Fitted quadratic-surface coefficients with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Model2Params {
    /// Coefficients of `a·as² + b·rs² + c·as + d·rs + e·as·rs + f`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub combo: ComboType,
    pub backends: BackendPair,
}

impl Model2Params {
    /// Predicted `as_fd` from the quadratic surface.
    pub fn predict(&self, as_dr: f64, rs_fd: f64) -> Result<f64> {
        check_finite(&[as_dr, rs_fd], "model inputs")?;
        Ok(self.a * as_dr * as_dr
            + self.b * rs_fd * rs_fd
            + self.c * as_dr
            + self.d * rs_fd
            + self.e * as_dr * rs_fd
            + self.f)
    }

    /// See [`Model1Params::predict_from_nr`].
    pub fn predict_from_nr(
        &self,
        nr_score: f64,
        rs_fd: f64,
        mapping: &LogisticParams,
    ) -> Result<f64> {
        self.predict(mapping.evaluate(nr_score), rs_fd)
    }

    /// The exact embedding of Model 1 into the quadratic surface:
    /// `(a,b,c,d,e,f) = (0, 0, 1−P1, P2, P1, −P2)`.
    pub fn from_model1(m1: &Model1Params) -> Self {
        Model2Params {
            a: 0.0,
            b: 0.0,
            c: 1.0 - m1.p1,
            d: m1.p2,
            e: m1.p1,
            f: -m1.p2,
            combo: m1.combo,
            backends: m1.backends,
        }
    }
}

/// One training triple for direct surface fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSample {
    pub as_dr: f64,
    pub rs_fd: f64,
    pub as_fd: f64,
}

/// Ordinary least squares on the 6-term quadratic design. Needs at least 6
/// samples and a full-rank design (collinear inputs such as
/// `rs_fd == as_dr` everywhere are rejected).
pub fn fit_model2(
    samples: &[FitSample],
    combo: ComboType,
    backends: BackendPair,
) -> Result<Model2Params> {
    check_backend_pair(backends)?;
    if samples.len() < 6 {
        return Err(Error::Degenerate(
            "model-2 fit needs at least six samples".into(),
        ));
    }
    for s in samples {
        check_finite(&[s.as_dr, s.rs_fd, s.as_fd], "fit samples")?;
    }
    let mut design = Matrix::zeros(samples.len(), 6);
    let mut target = vec![0.0; samples.len()];
    for (i, s) in samples.iter().enumerate() {
        design[(i, 0)] = s.as_dr * s.as_dr;
        design[(i, 1)] = s.rs_fd * s.rs_fd;
        design[(i, 2)] = s.as_dr;
        design[(i, 3)] = s.rs_fd;
        design[(i, 4)] = s.as_dr * s.rs_fd;
        design[(i, 5)] = 1.0;
        target[i] = s.as_fd;
    }
    let coef = least_squares(&design, &target)?;
    Ok(Model2Params {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        d: coef[3],
        e: coef[4],
        f: coef[5],
        combo,
        backends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PAIR: BackendPair = (ScoreBackend::Msssim, ScoreBackend::Msssim);

    fn params(p1: f64, p2: f64) -> Model1Params {
        Model1Params {
            p1,
            p2,
            combo: ComboType::BlurJpeg,
            backends: PAIR,
        }
    }

    #[test]
    fn undistorted_second_stage_returns_the_anchor_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = params(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let as_dr = rng.random_range(0.0..1.05);
            assert_eq!(p.predict(as_dr, 1.0).unwrap(), as_dr);
        }
    }

    #[test]
    fn additive_special_case_matches_hand_arithmetic() {
        let p = params(0.0, 1.0);
        let got = p.predict(0.9495, 0.9253).unwrap();
        assert!((got - 0.8748).abs() < 1e-12, "{got}");
    }

    #[test]
    fn unit_effective_slope_tracks_rs() {
        // P1 + P2 = 1 at as_dr = 1 means the prediction equals rs_fd.
        let p = params(0.5, 0.5);
        let got = p.predict(1.0, 0.8).unwrap();
        assert!((got - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_generating_parameters() {
        let truth = params(0.7, 0.4);
        let mut groups = Vec::new();
        for g in 0..6 {
            let as_dr = 0.5 + 0.08 * g as f64;
            let points: Vec<(f64, f64)> = (0..9)
                .map(|i| {
                    let rs = 0.3 + 0.0875 * i as f64;
                    (rs, truth.predict(as_dr, rs).unwrap())
                })
                .collect();
            groups.push(CurveGroup { as_dr, points });
        }
        let fit = fit_model1(&groups, ComboType::BlurJpeg, PAIR).unwrap();
        assert!((fit.params.p1 - 0.7).abs() < 1e-9, "{}", fit.params.p1);
        assert!((fit.params.p2 - 0.4).abs() < 1e-9, "{}", fit.params.p2);
        assert!(fit.tier2_r2 > 1.0 - 1e-9);
        for (_, _, rmse) in fit.group_slopes {
            assert!(rmse < 1e-12);
        }
    }

    #[test]
    fn fit_rejects_degenerate_groupings() {
        let truth = params(0.7, 0.4);
        let points: Vec<(f64, f64)> = (0..5)
            .map(|i| {
                let rs = 0.5 + 0.1 * i as f64;
                (rs, truth.predict(0.8, rs).unwrap())
            })
            .collect();
        // One group only.
        let one = vec![CurveGroup {
            as_dr: 0.8,
            points: points.clone(),
        }];
        assert!(fit_model1(&one, ComboType::BlurJpeg, PAIR).is_err());
        // Identical anchors across groups: tier 2 is rank-deficient.
        let same = vec![
            CurveGroup {
                as_dr: 0.8,
                points: points.clone(),
            },
            CurveGroup {
                as_dr: 0.8,
                points: points.clone(),
            },
        ];
        assert!(fit_model1(&same, ComboType::BlurJpeg, PAIR).is_err());
        // A group pinned at rs_fd == 1 everywhere.
        let pinned = vec![
            CurveGroup {
                as_dr: 0.8,
                points: vec![(1.0, 0.8), (1.0, 0.8), (1.0, 0.8)],
            },
            CurveGroup {
                as_dr: 0.6,
                points,
            },
        ];
        assert!(fit_model1(&pinned, ComboType::BlurJpeg, PAIR).is_err());
        // Too few points in a group.
        let thin = vec![
            CurveGroup {
                as_dr: 0.8,
                points: vec![(0.9, 0.7), (0.8, 0.6)],
            },
            CurveGroup {
                as_dr: 0.6,
                points: vec![(0.9, 0.55), (0.8, 0.5)],
            },
        ];
        assert!(fit_model1(&thin, ComboType::BlurJpeg, PAIR).is_err());
    }

    #[test]
    fn quadratic_surface_contains_the_anchored_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let m1 = params(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let m2 = Model2Params::from_model1(&m1);
            for _ in 0..40 {
                let as_dr = rng.random_range(0.0..1.05);
                let rs = rng.random_range(0.0..1.05);
                let direct = m1.predict(as_dr, rs).unwrap();
                let embedded = m2.predict(as_dr, rs).unwrap();
                assert!(
                    (direct - embedded).abs() < 1e-12,
                    "{direct} vs {embedded}"
                );
            }
        }
    }

    #[test]
    fn constant_surface_predicts_its_constant() {
        let m2 = Model2Params {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            e: 0.0,
            f: 0.5,
            combo: ComboType::AllData,
            backends: PAIR,
        };
        assert_eq!(m2.predict(0.3, 0.9).unwrap(), 0.5);
    }

    #[test]
    fn surface_fit_recovers_exact_coefficients() {
        let truth = Model2Params {
            a: 0.2,
            b: -0.1,
            c: 0.7,
            d: 0.3,
            e: 0.15,
            f: -0.05,
            combo: ComboType::NoiseJp2k,
            backends: PAIR,
        };
        let mut samples = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                let as_dr = 0.2 + 0.1 * i as f64;
                let rs = 0.25 + 0.1 * j as f64;
                samples.push(FitSample {
                    as_dr,
                    rs_fd: rs,
                    as_fd: truth.predict(as_dr, rs).unwrap(),
                });
            }
        }
        let fit = fit_model2(&samples, ComboType::NoiseJp2k, PAIR).unwrap();
        for (got, want) in [
            (fit.a, truth.a),
            (fit.b, truth.b),
            (fit.c, truth.c),
            (fit.d, truth.d),
            (fit.e, truth.e),
            (fit.f, truth.f),
        ] {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn surface_fit_rejects_underdetermined_and_collinear_data() {
        let five: Vec<FitSample> = (0..5)
            .map(|i| FitSample {
                as_dr: 0.1 * i as f64,
                rs_fd: 0.05 * i as f64,
                as_fd: 0.5,
            })
            .collect();
        assert!(fit_model2(&five, ComboType::AllData, PAIR).is_err());
        // rs_fd == as_dr for every sample: columns coincide.
        let collinear: Vec<FitSample> = (0..20)
            .map(|i| {
                let v = 0.04 * i as f64;
                FitSample {
                    as_dr: v,
                    rs_fd: v,
                    as_fd: 0.9 * v,
                }
            })
            .collect();
        assert!(fit_model2(&collinear, ComboType::AllData, PAIR).is_err());
    }

    #[test]
    fn refitting_on_own_predictions_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut samples = Vec::new();
        for _ in 0..60 {
            let as_dr: f64 = rng.random_range(0.3..1.0);
            let rs: f64 = rng.random_range(0.3..1.0);
            // Mild curvature plus noise so the first fit is not exact.
            let as_fd =
                (as_dr * rs).min(1.0) - 0.02 * rs * rs + rng.random_range(-0.01..0.01);
            samples.push(FitSample {
                as_dr,
                rs_fd: rs,
                as_fd,
            });
        }
        let first = fit_model2(&samples, ComboType::AllData, PAIR).unwrap();
        let refit_samples: Vec<FitSample> = samples
            .iter()
            .map(|s| FitSample {
                as_dr: s.as_dr,
                rs_fd: s.rs_fd,
                as_fd: first.predict(s.as_dr, s.rs_fd).unwrap(),
            })
            .collect();
        let second = fit_model2(&refit_samples, ComboType::AllData, PAIR).unwrap();
        for (a, b) in [
            (first.a, second.a),
            (first.b, second.b),
            (first.c, second.c),
            (first.d, second.d),
            (first.e, second.e),
            (first.f, second.f),
        ] {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn nr_substitution_routes_through_the_mapping() {
        let p = params(0.4, 0.5);
        let mapping = LogisticParams {
            beta: [0.0, 1.0, 0.0, 0.1, 0.2],
        };
        // Mapping reduces to 0.1·n + 0.2.
        let nr = 3.0;
        let mapped = 0.1 * nr + 0.2;
        let via_nr = p.predict_from_nr(nr, 0.9, &mapping).unwrap();
        let direct = p.predict(mapped, 0.9).unwrap();
        assert_eq!(via_nr, direct);
    }

    #[test]
    fn rs_side_cannot_be_mapped_nr() {
        let bad: BackendPair = (ScoreBackend::MappedNr, ScoreBackend::MappedNr);
        let groups = vec![
            CurveGroup {
                as_dr: 0.8,
                points: vec![(0.9, 0.7), (0.8, 0.65), (0.7, 0.6)],
            },
            CurveGroup {
                as_dr: 0.6,
                points: vec![(0.9, 0.55), (0.8, 0.5), (0.7, 0.45)],
            },
        ];
        assert!(fit_model1(&groups, ComboType::BlurJpeg, bad).is_err());
    }

    #[test]
    fn predictions_reject_non_finite_inputs() {
        let p = params(0.5, 0.5);
        assert!(p.predict(f64::NAN, 0.5).is_err());
        assert!(p.predict(0.5, f64::INFINITY).is_err());
        let m2 = Model2Params::from_model1(&p);
        assert!(m2.predict(f64::NAN, 0.5).is_err());
    }
}
