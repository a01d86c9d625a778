//! Result tables and curve plots.
//!
//! CSV is the canonical output. The results table mirrors the evaluation
//! layout used throughout the literature on this problem: one row per
//! method, one column pair (correlation after nonlinear mapping, rank
//! correlation) per distortion grouping. Curve and behavior tables carry
//! raw values with full float precision so downstream analysis can
//! reproduce every number bit-for-bit.
//!
//! SVG plots are drawn by a small built-in writer — polylines, ticks, and
//! text only — so the toolkit stays dependency-free. A behavior plot shows
//! one curve per first-stage level: the final-versus-original score
//! (`as_fd`) against the second-stage score (`rs_fd`), averaged over the
//! database's pristine images, with the first-stage anchor score (`as_dr`)
//! as a dotted horizontal baseline per curve.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use driqa_core::distort::{ComboType, ALL_COMBO_LABELS};
use driqa_core::eval::{BehaviorCurveFit, OvershootReport};

use crate::dataset::ScoredFd;
use crate::error::{Result, ToolError};
use crate::params::f17;

/// One method's correlations per grouping.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub method: String,
    /// Grouping name → (plcc, srcc). Groupings the method was not fitted
    /// for stay absent and render as empty cells.
    pub cells: BTreeMap<&'static str, (f64, f64)>,
}

/// Renders the method × grouping correlation table.
pub fn results_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from("method");
    for combo in ALL_COMBO_LABELS {
        out.push_str(&format!(",{0}_plcc,{0}_srcc", combo.name()));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.method);
        for combo in ALL_COMBO_LABELS {
            match row.cells.get(combo.name()) {
                Some((plcc, srcc)) => out.push_str(&format!(",{plcc:.4},{srcc:.4}")),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Renders the per-final-image score table, sorted by (combo, pristine,
/// levels). `pristine_names` maps the numeric grouping key back to the
/// manifest id.
pub fn curves_csv(scored: &[ScoredFd], pristine_names: &BTreeMap<u64, String>) -> String {
    let mut rows: Vec<&ScoredFd> = scored.iter().collect();
    rows.sort_by(|a, b| {
        (
            a.triple.combo.name(),
            a.triple.pristine,
            a.triple.level1,
            a.triple.level2,
        )
            .cmp(&(
                b.triple.combo.name(),
                b.triple.pristine,
                b.triple.level1,
                b.triple.level2,
            ))
    });
    let mut out = String::from("combo,pristine,level1,level2,as_dr,rs_fd,as_fd\n");
    for s in rows {
        let t = &s.triple;
        let name = pristine_names
            .get(&t.pristine)
            .map(String::as_str)
            .unwrap_or("?");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t.combo.name(),
            name,
            t.level1,
            t.level2,
            f17(t.as_dr),
            f17(t.rs_fd),
            f17(t.as_fd)
        ));
    }
    out
}

/// Renders fitted per-curve behavior lines: one row per (pristine,
/// first-stage level) with the anchor score, fitted slope, and fit
/// residual.
pub fn behavior_csv(fits: &[BehaviorCurveFit], pristine_names: &BTreeMap<u64, String>) -> String {
    let mut out = String::from("combo,pristine,level1,as_dr,m,residual_rmse\n");
    for fit in fits {
        let name = pristine_names
            .get(&fit.pristine)
            .map(String::as_str)
            .unwrap_or("?");
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fit.combo.name(),
            name,
            fit.level1,
            f17(fit.as_dr),
            f17(fit.m),
            f17(fit.residual_rmse)
        ));
    }
    out
}

/// Renders the overshoot report: one row per curve that exceeds its
/// anchor, listing the offending second-stage levels.
pub fn overshoot_csv(report: &OvershootReport, pristine_names: &BTreeMap<u64, String>) -> String {
    let mut out = String::from("combo,pristine,level1,levels2,points\n");
    for curve in &report.curves {
        let name = pristine_names
            .get(&curve.pristine)
            .map(String::as_str)
            .unwrap_or("?");
        let levels: Vec<String> = curve.levels2.iter().map(|l| l.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            report.combo.name(),
            name,
            curve.level1,
            levels.join(";"),
            curve.levels2.len()
        ));
    }
    out
}

/// Fixed palette for first-stage levels; cycles past eleven entries.
const PALETTE: [&str; 11] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#4b0082",
];

struct PlotFrame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

const W: f64 = 720.0;
const H: f64 = 520.0;
const ML: f64 = 72.0;
const MR: f64 = 130.0;
const MT: f64 = 40.0;
const MB: f64 = 56.0;

impl PlotFrame {
    fn x(&self, v: f64) -> f64 {
        ML + (v - self.x_min) / (self.x_max - self.x_min) * (W - ML - MR)
    }

    fn y(&self, v: f64) -> f64 {
        H - MB - (v - self.y_min) / (self.y_max - self.y_min) * (H - MT - MB)
    }
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Draws the behavior plot for one combination: per first-stage level, the
/// mean `as_fd` against mean `rs_fd` across pristine images, plus a dotted
/// mean-anchor baseline.
pub fn behavior_svg(combo: ComboType, fits: &[BehaviorCurveFit]) -> String {
    // Average the curves of each first-stage level across pristine images.
    let mut by_level: BTreeMap<u8, Vec<&BehaviorCurveFit>> = BTreeMap::new();
    for fit in fits {
        if fit.combo == combo {
            by_level.entry(fit.level1).or_default().push(fit);
        }
    }
    struct LevelCurve {
        level1: u8,
        anchor: f64,
        points: Vec<(f64, f64)>,
    }
    let mut curves = Vec::new();
    for (level1, group) in &by_level {
        let anchor = group.iter().map(|f| f.as_dr).sum::<f64>() / group.len() as f64;
        let mut by_l2: BTreeMap<u8, (f64, f64, usize)> = BTreeMap::new();
        for fit in group {
            for p in &fit.points {
                let cell = by_l2.entry(p.level2).or_insert((0.0, 0.0, 0));
                cell.0 += p.rs_fd;
                cell.1 += p.as_fd;
                cell.2 += 1;
            }
        }
        let points: Vec<(f64, f64)> = by_l2
            .values()
            .map(|&(rs, asf, n)| (rs / n as f64, asf / n as f64))
            .collect();
        curves.push(LevelCurve {
            level1: *level1,
            anchor,
            points,
        });
    }

    let mut x_min: f64 = 1.0;
    let mut y_min: f64 = 1.0;
    let mut y_max: f64 = 0.0;
    for c in &curves {
        for &(x, y) in &c.points {
            x_min = x_min.min(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        y_min = y_min.min(c.anchor);
        y_max = y_max.max(c.anchor);
    }
    // Snap to tenth-of-a-score gridlines with one tick of slack.
    let frame = PlotFrame {
        x_min: ((x_min * 10.0).floor() / 10.0 - 0.1).max(0.0),
        x_max: 1.0,
        y_min: ((y_min * 10.0).floor() / 10.0 - 0.1).max(0.0),
        y_max: ((y_max * 10.0).ceil() / 10.0 + 0.1).min(1.1),
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (ML + W - MR) / 2.0,
        combo.name()
    ));

    // Axes and ticks.
    let axis = format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = ML,
        r = W - MR,
        t = MT,
        b = H - MB
    );
    svg.push_str(&axis);
    let mut tick = (frame.x_min * 10.0).round() as i64;
    while tick as f64 / 10.0 <= frame.x_max + 1e-9 {
        let v = tick as f64 / 10.0;
        let x = frame.x(v);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n\
             <text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4:.1}</text>\n",
            fmt2(x),
            H - MB,
            H - MB + 6.0,
            H - MB + 22.0,
            v
        ));
        tick += 1;
    }
    let mut tick = (frame.y_min * 10.0).round() as i64;
    while tick as f64 / 10.0 <= frame.y_max + 1e-9 {
        let v = tick as f64 / 10.0;
        let y = frame.y(v);
        svg.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n\
             <text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5:.1}</text>\n",
            fmt2(y),
            ML - 6.0,
            ML,
            ML - 10.0,
            fmt2(y + 4.0),
            v
        ));
        tick += 1;
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">second-stage similarity (rs_fd)</text>\n",
        (ML + W - MR) / 2.0,
        H - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">final similarity (as_fd)</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));

    // One polyline plus one dotted anchor baseline per first-stage level.
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt2(frame.x(x)), fmt2(frame.y(y))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{2}\" x2=\"{}\" y2=\"{2}\" stroke=\"{color}\" \
             stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n",
            fmt2(frame.x(frame.x_min)),
            fmt2(frame.x(frame.x_max)),
            fmt2(frame.y(c.anchor))
        ));
        let ly = MT + 16.0 + i as f64 * 18.0;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{3}\" y=\"{4}\">level {5}</text>\n",
            W - MR + 10.0,
            fmt2(ly),
            W - MR + 34.0,
            W - MR + 40.0,
            fmt2(ly + 4.0),
            c.level1
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes text to a file, mapping failures onto the toolkit error type.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| ToolError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use driqa_core::eval::CurvePoint;
    use driqa_core::eval::TripleRecord;

    fn names() -> BTreeMap<u64, String> {
        [(0, "pr-a".to_string()), (1, "pr-b".to_string())]
            .into_iter()
            .collect()
    }

    fn sample_fits() -> Vec<BehaviorCurveFit> {
        let mut fits = Vec::new();
        for pristine in 0..2u64 {
            for (i, level1) in [1u8, 6].into_iter().enumerate() {
                let as_dr = 0.95 - 0.1 * i as f64;
                let points: Vec<CurvePoint> = (1..=3u8)
                    .map(|l2| CurvePoint {
                        level2: l2,
                        rs_fd: 1.0 - 0.2 * l2 as f64,
                        as_fd: as_dr * (1.0 - 0.15 * l2 as f64),
                    })
                    .collect();
                fits.push(BehaviorCurveFit {
                    combo: ComboType::BlurJpeg,
                    pristine,
                    level1,
                    as_dr,
                    m: 0.8,
                    residual_rmse: 0.01,
                    points,
                });
            }
        }
        fits
    }

    #[test]
    fn results_table_has_fixed_column_set() {
        let rows = vec![EvalRow {
            method: "model1 ssim/ssim".into(),
            cells: [("blur-jpeg", (0.91234, 0.89876))].into_iter().collect(),
        }];
        let csv = results_csv(&rows);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 15);
        assert!(header.starts_with("method,blur-jpeg_plcc,blur-jpeg_srcc"));
        let row = lines.next().unwrap();
        assert!(row.contains("0.9123,0.8988"));
        assert!(row.ends_with(",,"));
    }

    #[test]
    fn curves_table_is_sorted_and_exact() {
        let scored = vec![
            ScoredFd {
                fd_id: "fd-b".into(),
                dr_id: "dr-b".into(),
                triple: TripleRecord {
                    pristine: 1,
                    combo: ComboType::BlurJpeg,
                    level1: 2,
                    level2: 3,
                    as_dr: 1.0 / 3.0,
                    as_fd: 0.25,
                    rs_fd: 0.5,
                },
                label: Some(25.0),
            },
            ScoredFd {
                fd_id: "fd-a".into(),
                dr_id: "dr-a".into(),
                triple: TripleRecord {
                    pristine: 0,
                    combo: ComboType::BlurJpeg,
                    level1: 2,
                    level2: 1,
                    as_dr: 0.9,
                    as_fd: 0.8,
                    rs_fd: 0.85,
                },
                label: Some(80.0),
            },
        ];
        let csv = curves_csv(&scored, &names());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "combo,pristine,level1,level2,as_dr,rs_fd,as_fd");
        assert!(lines[1].starts_with("blur-jpeg,pr-a,2,1,"));
        assert!(lines[2].starts_with("blur-jpeg,pr-b,2,3,"));
        let back: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn behavior_svg_draws_one_curve_per_level() {
        let svg = behavior_svg(ComboType::BlurJpeg, &sample_fits());
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("blur-jpeg"));
        // Deterministic output: rendering twice gives identical bytes.
        assert_eq!(svg, behavior_svg(ComboType::BlurJpeg, &sample_fits()));
    }

    #[test]
    fn overshoot_table_lists_levels() {
        use driqa_core::eval::CurveOvershoot;
        let report = OvershootReport {
            combo: ComboType::NoiseJp2k,
            curves: vec![CurveOvershoot {
                pristine: 0,
                level1: 4,
                levels2: vec![15, 16, 17],
            }],
            total_points: 3,
        };
        let csv = overshoot_csv(&report, &names());
        assert!(csv.contains("noise-jp2k,pr-a,4,15;16;17,3"));
    }
}
