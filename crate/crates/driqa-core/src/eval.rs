//! Correlation measures, dataset arithmetic, and distortion-behavior
//! analysis.
//!
//! Two correlation conventions are standard for quality benchmarks:
//!
//! * [`plcc`] — Pearson linear correlation after a fitted five-parameter
//!   logistic mapping absorbs the (monotone, possibly nonlinear) scale
//!   difference between predictions and labels;
//! * [`srcc`] — Spearman rank-order correlation, computed as the Pearson
//!   correlation of average ranks so tied values are handled exactly.
//!
//! The behavior half of this module turns per-image score triples into
//! per-curve summaries: each (original image, first-stage level) pair traces
//! a curve of `as_fd` against `rs_fd` as the second stage sweeps its ladder,
//! and the curve is summarized by a least-squares slope through the anchor
//! `(1, as_dr)`. Curves occasionally rise above their own anchor — the
//! second stage *masking* the first — and [`detect_overshoot`] flags those
//! points.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::distort::{ComboType, GENERATING_COMBOS};
use crate::fr::FrBackend;
use crate::fusion::{anchored_slope, CurveGroup, FitSample};
use crate::image::ImagePlane;
use crate::logistic::fit_logistic_with_min;
use crate::math;
use crate::{Error, Result};

/// Minimum paired samples for a correlation.
pub const MIN_CORRELATION_SAMPLES: usize = 4;

fn check_pairs(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::Domain(
            "correlation needs prediction and target lists of equal length".into(),
        ));
    }
    if pred.len() < MIN_CORRELATION_SAMPLES {
        return Err(Error::Domain(
            "correlation needs at least four paired samples".into(),
        ));
    }
    if !pred.iter().chain(target.iter()).all(|v| v.is_finite()) {
        return Err(Error::Domain("correlation inputs must be finite".into()));
    }
    Ok(())
}

/// Average (fractional) ranks, 1-based; tied values share the mean of the
/// positions they occupy.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("ranking needs finite values".into()));
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .partial_cmp(&values[j])
            .expect("finite values compare totally")
            .then(i.cmp(&j))
    });
    let mut ranks = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) hold ranks i+1..=j+1; ties share the mean.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Spearman rank-order correlation: Pearson correlation of average ranks.
///
/// Invariant under strictly increasing transforms of either list; −1 for a
/// reversed ordering. Constant lists are degenerate.
pub fn srcc(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pairs(pred, target)?;
    let rp = average_ranks(pred)?;
    let rt = average_ranks(target)?;
    math::pearson(&rp, &rt)
        .ok_or_else(|| Error::Degenerate("rank correlation needs non-constant lists".into()))
}

/// Pearson linear correlation after logistic remapping.
///
/// Fits the five-parameter logistic from predictions to targets, maps the
/// predictions through it, and returns the Pearson correlation of the mapped
/// values against the targets. An exactly monotone-logistic relationship
/// therefore scores 1, and the result is invariant (within fit tolerance)
/// under increasing affine changes of the prediction scale.
pub fn plcc(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pairs(pred, target)?;
    let params = fit_logistic_with_min(pred, target, MIN_CORRELATION_SAMPLES)?;
    let mapped = params.map(pred);
    math::pearson(&mapped, &target.to_vec())
        .ok_or_else(|| Error::Degenerate("correlation needs non-constant lists".into()))
}

/// Benchmark quality label for a distorted image: the full-reference score
/// against its pristine original, scaled to [0, 100].
pub fn benchmark_label(
    pristine: &ImagePlane,
    img: &ImagePlane,
    backend: FrBackend,
) -> Result<f64> {
    let score = backend.compare(pristine, img)?;
    Ok((100.0 * score).clamp(0.0, 100.0))
}

/// Number of first-stage distortion types every database carries.
pub const STAGE1_TYPE_COUNT: usize = 3;

/// Closed-form sizes of a two-stage database.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetCounts {
    /// Midpoint images per first-stage type: `pristine × |L1|`.
    pub dr_per_type: usize,
    /// All midpoint images: `pristine × 3 × |L1|`.
    pub dr_total: usize,
    /// Final images per combination: `pristine × |L1| × |L2|`.
    pub fd_per_combo: usize,
    /// All final images: `fd_per_combo × combos`.
    pub fd_total: usize,
    /// Every distorted image: `dr_total + fd_total`.
    pub distorted_total: usize,
}

/// Database sizes from the generation parameters. Midpoints are generated
/// for all three first-stage types regardless of which combinations are
/// selected; final images only for the selected combinations.
pub fn dataset_counts(
    pristine: usize,
    levels1: usize,
    levels2: usize,
    combos: usize,
) -> DatasetCounts {
    let dr_per_type = pristine * levels1;
    let dr_total = dr_per_type * STAGE1_TYPE_COUNT;
    let fd_per_combo = pristine * levels1 * levels2;
    let fd_total = fd_per_combo * combos;
    DatasetCounts {
        dr_per_type,
        dr_total,
        fd_per_combo,
        fd_total,
        distorted_total: dr_total + fd_total,
    }
}

/// One scored final image: the three reference scores plus where it came
/// from. This is the in-memory row everything downstream fits and evaluates
/// on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleRecord {
    /// Identifier of the pristine original.
    pub pristine: u64,
    /// Generating combination this row belongs to.
    pub combo: ComboType,
    /// First-stage ladder level.
    pub level1: u8,
    /// Second-stage ladder level.
    pub level2: u8,
    /// Midpoint against original.
    pub as_dr: f64,
    /// Final against original (the prediction target).
    pub as_fd: f64,
    /// Final against midpoint.
    pub rs_fd: f64,
}

/// One point of a behavior curve, ordered by second-stage level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub level2: u8,
    pub rs_fd: f64,
    pub as_fd: f64,
}

/// One summarized behavior curve: a (pristine, first-stage level) pair swept
/// across the second-stage ladder, with its anchored-slope fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorCurveFit {
    pub combo: ComboType,
    pub pristine: u64,
    /// First-stage ladder level shared by the curve.
    pub level1: u8,
    /// Anchor: score of the shared midpoint against the original.
    pub as_dr: f64,
    /// Fitted slope of `as_fd` against `rs_fd` through the anchor `(1, as_dr)`.
    pub m: f64,
    /// RMS residual of the anchored line.
    pub residual_rmse: f64,
    pub points: Vec<CurvePoint>,
}

fn combo_ordinal(combo: ComboType) -> Result<usize> {
    GENERATING_COMBOS
        .iter()
        .position(|&c| c == combo)
        .ok_or_else(|| {
            Error::Domain(String::from(
                "behavior grouping is per generating combination, not an aggregation label",
            ))
        })
}

/// Filters `records` to the given combination's members and groups them by
/// (member combination, pristine, first-stage level) in deterministic order,
/// points sorted by second-stage level. Aggregation labels pool the curves
/// of their member combinations.
fn grouped_curves(
    records: &[TripleRecord],
    combo: ComboType,
) -> Result<Vec<(ComboType, u64, u8, Vec<TripleRecord>)>> {
    let members = combo.members();
    let mut map: BTreeMap<(usize, u64, u8), Vec<TripleRecord>> = BTreeMap::new();
    for rec in records {
        if !members.contains(&rec.combo) {
            continue;
        }
        if !(rec.as_dr.is_finite() && rec.as_fd.is_finite() && rec.rs_fd.is_finite()) {
            return Err(Error::Domain("score records must be finite".into()));
        }
        let ord = combo_ordinal(rec.combo)?;
        map.entry((ord, rec.pristine, rec.level1))
            .or_default()
            .push(*rec);
    }
    if map.is_empty() {
        return Err(Error::Degenerate(
            "no records match the requested combination".into(),
        ));
    }
    let mut groups = Vec::with_capacity(map.len());
    for ((ord, pristine, level1), mut rows) in map {
        rows.sort_by_key(|r| r.level2);
        for pair in rows.windows(2) {
            if pair[0].level2 == pair[1].level2 {
                return Err(Error::Domain(
                    "duplicate second-stage level within one curve".into(),
                ));
            }
        }
        let anchor = rows[0].as_dr;
        if rows.iter().any(|r| r.as_dr != anchor) {
            return Err(Error::Domain(
                "records of one curve must share their midpoint score".into(),
            ));
        }
        groups.push((GENERATING_COMBOS[ord], pristine, level1, rows));
    }
    Ok(groups)
}

/// Extracts and fits every behavior curve of one generating combination.
///
/// Curves are returned ordered by (pristine, first-stage level); each needs
/// at least two points off the anchor for a meaningful slope.
pub fn extract_behavior(
    records: &[TripleRecord],
    combo: ComboType,
) -> Result<Vec<BehaviorCurveFit>> {
    combo_ordinal(combo)?;
    let groups = grouped_curves(records, combo)?;
    let mut curves = Vec::with_capacity(groups.len());
    for (combo, pristine, level1, rows) in groups {
        let as_dr = rows[0].as_dr;
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.rs_fd, r.as_fd)).collect();
        let fit = anchored_slope(as_dr, &pts)?;
        curves.push(BehaviorCurveFit {
            combo,
            pristine,
            level1,
            as_dr,
            m: fit.m,
            residual_rmse: fit.residual_rmse,
            points: rows
                .iter()
                .map(|r| CurvePoint {
                    level2: r.level2,
                    rs_fd: r.rs_fd,
                    as_fd: r.as_fd,
                })
                .collect(),
        });
    }
    Ok(curves)
}

/// Model-1 curve groups for a combination (aggregation labels pool their
/// members), in the same deterministic order as [`extract_behavior`].
pub fn model1_groups(records: &[TripleRecord], combo: ComboType) -> Result<Vec<CurveGroup>> {
    let groups = grouped_curves(records, combo)?;
    Ok(groups
        .into_iter()
        .map(|(_, _, _, rows)| CurveGroup {
            as_dr: rows[0].as_dr,
            points: rows.iter().map(|r| (r.rs_fd, r.as_fd)).collect(),
        })
        .collect())
}

/// Flat fitting samples for a combination (aggregation labels pool their
/// members), ordered by (combination, pristine, first-stage level,
/// second-stage level).
pub fn fit_samples(records: &[TripleRecord], combo: ComboType) -> Result<Vec<FitSample>> {
    let groups = grouped_curves(records, combo)?;
    Ok(groups
        .into_iter()
        .flat_map(|(_, _, _, rows)| {
            rows.into_iter().map(|r| FitSample {
                as_dr: r.as_dr,
                rs_fd: r.rs_fd,
                as_fd: r.as_fd,
            })
        })
        .collect())
}

/// A second stage can *mask* the first: the final image scores better
/// against the original than the midpoint did. A point overshoots when
/// `as_fd` exceeds the curve's anchor by more than this margin (comfortably
/// above FR metric noise).
pub const OVERSHOOT_MARGIN: f64 = 0.002;

/// Overshooting second-stage levels of one curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveOvershoot {
    pub pristine: u64,
    pub level1: u8,
    /// Second-stage levels whose `as_fd` exceeds the anchor by the margin.
    pub levels2: Vec<u8>,
}

/// Overshoot summary across the curves of one combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OvershootReport {
    pub combo: ComboType,
    /// Curves with at least one overshooting point.
    pub curves: Vec<CurveOvershoot>,
    /// Total overshooting points across all curves.
    pub total_points: usize,
}

impl OvershootReport {
    pub fn any(&self) -> bool {
        self.total_points > 0
    }
}

/// Flags every point scoring above its own curve's anchor by more than
/// [`OVERSHOOT_MARGIN`]. All curves must come from one combination.
pub fn detect_overshoot(curves: &[BehaviorCurveFit]) -> Result<OvershootReport> {
    let combo = curves
        .first()
        .ok_or_else(|| Error::Degenerate("overshoot detection needs curves".into()))?
        .combo;
    if curves.iter().any(|c| c.combo != combo) {
        return Err(Error::Domain(
            "overshoot detection expects curves of a single combination".into(),
        ));
    }
    let mut report = OvershootReport {
        combo,
        curves: Vec::new(),
        total_points: 0,
    };
    for curve in curves {
        let levels2: Vec<u8> = curve
            .points
            .iter()
            .filter(|p| p.as_fd > curve.as_dr + OVERSHOOT_MARGIN)
            .map(|p| p.level2)
            .collect();
        if !levels2.is_empty() {
            report.total_points += levels2.len();
            report.curves.push(CurveOvershoot {
                pristine: curve.pristine,
                level1: curve.level1,
                levels2,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{BackendPair, Model1Params, ScoreBackend};
    use crate::logistic::logistic_value;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[allow(unused_imports)]
    use crate::math::F64Ext;

    // ---- ranks ----

    #[test]
    fn ranks_of_distinct_values_are_positions() {
        let r = average_ranks(&[30.0, 10.0, 20.0]).unwrap();
        assert_eq!(r, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn tied_values_share_the_average_position() {
        let r = average_ranks(&[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
        let r = average_ranks(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(r, vec![2.0, 2.0, 2.0]);
    }

    // ---- srcc ----

    #[test]
    fn rank_correlation_of_a_near_ordered_list() {
        // Two adjacent swaps in five items: 1 − 6·4/(5·24) = 0.8.
        let got = srcc(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert!((got - 0.8).abs() < 1e-12, "{got}");
    }

    #[test]
    fn rank_correlation_ignores_monotone_transforms() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.31 - 1.4).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| math::exp(x) + 5.0).collect();
        let got = srcc(&xs, &ys).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|&x| -x).collect();
        let got = srcc(&neg, &ys).unwrap();
        assert!((got + 1.0).abs() < 1e-12);
    }

    /// Independent oracle: O(n²) counting ranks + direct correlation sums.
    fn srcc_oracle(pred: &[f64], target: &[f64]) -> f64 {
        fn counting_ranks(xs: &[f64]) -> Vec<f64> {
            xs.iter()
                .map(|&x| {
                    let less = xs.iter().filter(|&&y| y < x).count() as f64;
                    let equal = xs.iter().filter(|&&y| y == x).count() as f64;
                    less + (equal - 1.0) / 2.0 + 1.0
                })
                .collect()
        }
        let a = counting_ranks(pred);
        let b = counting_ranks(target);
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(&b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / F64Ext::sqrt(va * vb)
    }

    #[test]
    fn rank_correlation_matches_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for case in 0..1000 {
            let tie_heavy = case % 2 == 1;
            let gen = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..10)
                    .map(|_| {
                        let v: f64 = rng.random_range(-1.0..1.0);
                        if tie_heavy {
                            // Quantize to force ties.
                            F64Ext::round(v * 3.0) / 3.0
                        } else {
                            v
                        }
                    })
                    .collect()
            };
            let pred = gen(&mut rng);
            let target = gen(&mut rng);
            let oracle = srcc_oracle(&pred, &target);
            if !oracle.is_finite() {
                continue; // constant list sampled; rejected below anyway
            }
            let got = srcc(&pred, &target).unwrap();
            assert!(
                (got - oracle).abs() < 1e-12,
                "case {case}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn correlations_reject_bad_shapes() {
        let c = [1.0, 1.0, 1.0, 1.0];
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(srcc(&c, &v), Err(Error::Degenerate(_))));
        assert!(matches!(srcc(&v[..3], &c[..3]), Err(Error::Domain(_))));
        assert!(matches!(srcc(&v, &c[..3]), Err(Error::Domain(_))));
        assert!(matches!(plcc(&c, &v), Err(Error::Degenerate(_))));
        assert!(matches!(plcc(&v, &c), Err(Error::Degenerate(_))));
        assert!(matches!(plcc(&v[..3], &v[..3]), Err(Error::Domain(_))));
        let nan = [1.0, f64::NAN, 3.0, 4.0];
        assert!(matches!(srcc(&nan, &v), Err(Error::Domain(_))));
        assert!(matches!(plcc(&nan, &v), Err(Error::Domain(_))));
    }

    // ---- plcc ----

    #[test]
    fn identical_lists_correlate_perfectly() {
        let xs: Vec<f64> = (0..20).map(|i| 0.3 + 0.025 * i as f64).collect();
        let got = plcc(&xs, &xs).unwrap();
        assert!(got > 1.0 - 1e-9, "{got}");
    }

    #[test]
    fn four_samples_suffice() {
        let xs = [0.1, 0.4, 0.7, 0.9];
        let got = plcc(&xs, &xs).unwrap();
        assert!(got > 1.0 - 1e-6, "{got}");
    }

    #[test]
    fn exact_logistic_relationship_correlates_perfectly() {
        let beta = [1.1, 4.0, 0.5, 0.2, 0.15];
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| logistic_value(&beta, x)).collect();
        let got = plcc(&xs, &ys).unwrap();
        assert!(got > 1.0 - 1e-6, "{got}");
    }

    #[test]
    fn negated_predictions_still_correlate_in_magnitude() {
        let ys: Vec<f64> = (0..25).map(|i| 0.1 + 0.035 * i as f64).collect();
        let xs: Vec<f64> = ys.iter().map(|&y| -y).collect();
        let got = plcc(&xs, &ys).unwrap();
        assert!(got.abs() > 1.0 - 1e-6, "{got}");
    }

    #[test]
    fn increasing_affine_rescaling_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let xs: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..1.0)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| logistic_value(&[0.8, 5.0, 0.5, 0.1, 0.2], x) + rng.random_range(-0.01..0.01))
            .collect();
        let base = plcc(&xs, &ys).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|&x| 7.0 * x + 3.0).collect();
        let got = plcc(&scaled, &ys).unwrap();
        assert!((got - base).abs() < 1e-6, "{got} vs {base}");
    }

    // ---- counts ----

    #[test]
    fn full_scale_counts_match_the_published_database() {
        let c = dataset_counts(34, 11, 17, 5);
        assert_eq!(c.dr_per_type, 374);
        assert_eq!(c.dr_total, 1122);
        assert_eq!(c.fd_per_combo, 6358);
        assert_eq!(c.fd_total, 31790);
        assert_eq!(c.distorted_total, 32912);
    }

    #[test]
    fn reduced_grids_count_correctly() {
        let c = dataset_counts(4, 5, 5, 5);
        assert_eq!(c.dr_per_type, 20);
        assert_eq!(c.dr_total, 60);
        assert_eq!(c.fd_per_combo, 100);
        assert_eq!(c.fd_total, 500);
        assert_eq!(c.distorted_total, 560);
        let c = dataset_counts(1, 11, 17, 5);
        assert_eq!(c.dr_total, 33);
        assert_eq!(c.fd_per_combo, 187);
        assert_eq!(c.distorted_total, 968);
    }

    // ---- behavior ----

    const PAIR: BackendPair = (ScoreBackend::Msssim, ScoreBackend::Msssim);

    /// Synthetic records from a known anchored-line surface.
    fn synthetic_records(combo: ComboType, pristines: &[u64]) -> Vec<TripleRecord> {
        let truth = Model1Params {
            p1: 0.6,
            p2: 0.35,
            combo,
            backends: PAIR,
        };
        let mut out = Vec::new();
        for (pi, &pristine) in pristines.iter().enumerate() {
            for level1 in 1..=4u8 {
                let as_dr = 0.95 - 0.1 * level1 as f64 - 0.01 * pi as f64;
                for level2 in 1..=5u8 {
                    let rs_fd = 1.0 - 0.12 * (level2 - 1) as f64;
                    let as_fd = truth.predict(as_dr, rs_fd).unwrap();
                    out.push(TripleRecord {
                        pristine,
                        combo,
                        level1,
                        level2,
                        as_dr,
                        as_fd,
                        rs_fd,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn curves_group_by_origin_and_first_stage_level() {
        let mut records = synthetic_records(ComboType::BlurJpeg, &[7, 3]);
        // Shuffle to prove order independence.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for i in (1..records.len()).rev() {
            records.swap(i, rng.random_range(0..=i));
        }
        let curves = extract_behavior(&records, ComboType::BlurJpeg).unwrap();
        assert_eq!(curves.len(), 8); // 2 pristine × 4 levels
        for w in curves.windows(2) {
            assert!((w[0].pristine, w[0].level1) < (w[1].pristine, w[1].level1));
        }
        for curve in &curves {
            assert_eq!(curve.points.len(), 5);
            for pair in curve.points.windows(2) {
                assert!(pair[0].level2 < pair[1].level2);
            }
            // Exact surface data: slope is P1·as_dr + P2, residual ~0.
            let want = 0.6 * curve.as_dr + 0.35;
            assert!((curve.m - want).abs() < 1e-12, "{} vs {want}", curve.m);
            assert!(curve.residual_rmse < 1e-12);
        }
    }

    #[test]
    fn aggregation_labels_pool_member_curves() {
        let mut records = synthetic_records(ComboType::BlurJpeg, &[1]);
        records.extend(synthetic_records(ComboType::NoiseJpeg, &[1]));
        records.extend(synthetic_records(ComboType::NoiseJp2k, &[1]));
        // Pools blur-jpeg and noise-jpeg (jpeg-jpeg has no records here).
        let nbj = model1_groups(&records, ComboType::NbjJpeg).unwrap();
        assert_eq!(nbj.len(), 8);
        let all = model1_groups(&records, ComboType::AllData).unwrap();
        assert_eq!(all.len(), 12);
        let single = model1_groups(&records, ComboType::NoiseJp2k).unwrap();
        assert_eq!(single.len(), 4);
        let flat = fit_samples(&records, ComboType::AllData).unwrap();
        assert_eq!(flat.len(), 60);
        // Behavior curves are per generating combination only.
        assert!(matches!(
            extract_behavior(&records, ComboType::AllData),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn grouping_rejects_inconsistent_curves() {
        let mut records = synthetic_records(ComboType::BlurJpeg, &[1]);
        // No matching combo at all.
        assert!(matches!(
            extract_behavior(&records, ComboType::JpegJpeg),
            Err(Error::Degenerate(_))
        ));
        // Conflicting anchor inside one curve.
        let mut bad = records.clone();
        bad[0].as_dr += 0.01;
        assert!(matches!(
            extract_behavior(&bad, ComboType::BlurJpeg),
            Err(Error::Domain(_))
        ));
        // Duplicate second-stage level.
        let dup = records[0];
        records.push(dup);
        assert!(matches!(
            extract_behavior(&records, ComboType::BlurJpeg),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn overshoot_flags_points_above_the_anchor_margin() {
        let mut records = synthetic_records(ComboType::NoiseJp2k, &[2]);
        // The exact surface never overshoots: as_fd ≤ as_dr when m > 0.
        let curves = extract_behavior(&records, ComboType::NoiseJp2k).unwrap();
        let report = detect_overshoot(&curves).unwrap();
        assert!(!report.any(), "{report:?}");

        // Push two points of the (2, level1=3) curve above its anchor.
        for rec in records.iter_mut() {
            if rec.level1 == 3 && (rec.level2 == 2 || rec.level2 == 4) {
                rec.as_fd = rec.as_dr + 0.01;
            }
        }
        // And one point just inside the margin: must stay unflagged.
        for rec in records.iter_mut() {
            if rec.level1 == 1 && rec.level2 == 2 {
                rec.as_fd = rec.as_dr + 0.001;
            }
        }
        let curves = extract_behavior(&records, ComboType::NoiseJp2k).unwrap();
        let report = detect_overshoot(&curves).unwrap();
        assert!(report.any());
        assert_eq!(report.total_points, 2);
        assert_eq!(report.curves.len(), 1);
        assert_eq!(report.curves[0].pristine, 2);
        assert_eq!(report.curves[0].level1, 3);
        assert_eq!(report.curves[0].levels2, vec![2, 4]);
    }

    #[test]
    fn overshoot_requires_a_single_combination() {
        let a = extract_behavior(
            &synthetic_records(ComboType::BlurJpeg, &[1]),
            ComboType::BlurJpeg,
        )
        .unwrap();
        let b = extract_behavior(
            &synthetic_records(ComboType::NoiseJpeg, &[1]),
            ComboType::NoiseJpeg,
        )
        .unwrap();
        let mixed: Vec<BehaviorCurveFit> = a.iter().chain(b.iter()).cloned().collect();
        assert!(detect_overshoot(&mixed).is_err());
        assert!(detect_overshoot(&[]).is_err());
    }

    // ---- labels ----

    #[test]
    fn labels_score_copies_at_one_hundred_and_fall_with_distortion() {
        let img = crate::corpus::synth_image(0x5eed, 200, 200);
        let copy = img.clone();
        assert_eq!(
            benchmark_label(&img, &copy, FrBackend::Msssim).unwrap(),
            100.0
        );
        let light = crate::distort::add_gaussian_noise(&img, 4.0, 1);
        let heavy = crate::distort::add_gaussian_noise(&img, 30.0, 1);
        let l_light = benchmark_label(&img, &light, FrBackend::Msssim).unwrap();
        let l_heavy = benchmark_label(&img, &heavy, FrBackend::Msssim).unwrap();
        assert!(l_light > l_heavy, "{l_light} vs {l_heavy}");
        assert!((0.0..=100.0).contains(&l_light));
        assert!((0.0..=100.0).contains(&l_heavy));
    }
}
