//! Five-parameter logistic mapping between score scales.
//!
//! Different quality measures live on different scales (a no-reference score
//! versus an FR similarity, raw predictions versus benchmark labels). The
//! standard practice before computing linear correlation is to map one scale
//! onto the other with a monotone-capable parametric curve:
//!
//! ```text
//! F(N) = β1·(1/2 − 1/(1 + exp(β2·(N − β3)))) + β4·N + β5
//! ```
//!
//! a sigmoid with its inflection at `N = β3` plus a linear term, which also
//! degenerates gracefully to a pure line (β1 or β2 → 0). Fitting minimizes a
//! lightly ridge-regularized sum of squared errors: the curve is linear in
//! (β1, β4, β5) once (β2, β3) are fixed, so a deterministic grid over shape
//! and center with closed-form solves for the linear part seeds a damped
//! least-squares refinement. The ridge term keeps every error valley bounded
//! with an isolated minimizer, which makes the fitted curve depend
//! continuously on the data — rounding-level input changes cannot flip it
//! into a different answer.

use alloc::vec::Vec;

use crate::math::{self, median, ols_line};
use crate::{Error, Result};

/// Coefficients of the fitted mapping, β1..β5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub beta: [f64; 5],
}

impl LogisticParams {
    /// Evaluates the mapping at one point.
    pub fn evaluate(&self, n: f64) -> f64 {
        logistic_value(&self.beta, n)
    }

    /// Maps a whole slice.
    pub fn map(&self, ns: &[f64]) -> Vec<f64> {
        ns.iter().map(|&n| self.evaluate(n)).collect()
    }
}

/// The raw five-parameter curve.
pub fn logistic_value(beta: &[f64; 5], n: f64) -> f64 {
    let sig = 1.0 / (1.0 + math::exp(beta[1] * (n - beta[2])));
    beta[0] * (0.5 - sig) + beta[3] * n + beta[4]
}

fn sse(beta: &[f64], ns: &[f64], fs: &[f64]) -> f64 {
    let b = [beta[0], beta[1], beta[2], beta[3], beta[4]];
    ns.iter()
        .zip(fs)
        .map(|(&n, &f)| {
            let d = logistic_value(&b, n) - f;
            d * d
        })
        .sum()
}

/// Iteration cap for the damped least-squares refinement.
const POLISH_ITER: usize = 200;
/// Refinement stops once the gradient is this small relative to the error.
const GRADIENT_TOL: f64 = 1e-14;
/// Ridge weight on the coefficients (in doubly normalized coordinates).
/// Five orders below any meaningful error difference for well-scaled
/// coefficients, yet large enough to price out the runaway ridges
/// (`β1 → ∞, β2 → 0`) where the plain objective decreases forever without a
/// minimizer.
const RIDGE: f64 = 1e-10;
/// Inflection-point seed grid: centers across (and slightly beyond) the
/// normalized predictor range.
const CENTER_STEPS: usize = 17;
/// Shape seed grid. Only positive shapes are needed: the sigmoid term is odd
/// around its center, so a negative shape is the same curve as a negated
/// amplitude, which the closed-form linear solve already covers.
const SHAPE_GRID: [f64; 7] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
/// Candidate seeds kept for full refinement, ranked by seed error.
const POLISH_CANDIDATES: usize = 8;
/// Minimum paired samples for a meaningful five-parameter fit.
pub const MIN_SAMPLES: usize = 10;

/// Fits the mapping `F(N) ≈ f` by ridge-regularized least squares.
///
/// The fit runs on predictors and targets normalized to [0, 1] (the family
/// is closed under affine changes of either scale, so the result is mapped
/// back exactly), which makes it indifferent to the caller's score units.
/// Seeds come from a fixed grid over sigmoid shape and center — solving the
/// remaining three coefficients in closed form per cell — plus three
/// OLS-based heuristic starts; the best few are refined to stationarity and
/// the lowest final error wins.
pub fn fit_logistic(n_scores: &[f64], f_scores: &[f64]) -> Result<LogisticParams> {
    fit_logistic_with_min(n_scores, f_scores, MIN_SAMPLES)
}

/// Same fit with a caller-chosen sample floor. The correlation mapper admits
/// shorter lists than a standalone scale calibration would (the curve then
/// merely interpolates, which is exactly what a correlation after monotone
/// mapping calls for).
pub(crate) fn fit_logistic_with_min(
    n_scores: &[f64],
    f_scores: &[f64],
    min_samples: usize,
) -> Result<LogisticParams> {
    if n_scores.len() != f_scores.len() {
        return Err(Error::Domain(
            "logistic fit needs paired samples of equal length".into(),
        ));
    }
    if n_scores.len() < min_samples {
        return Err(Error::Degenerate(
            "logistic fit needs more paired samples".into(),
        ));
    }
    if !n_scores
        .iter()
        .chain(f_scores.iter())
        .all(|v| v.is_finite())
    {
        return Err(Error::Domain("logistic fit inputs must be finite".into()));
    }
    // The curve family is closed under affine changes of either scale, so
    // fit on predictors and targets normalized to [0, 1] — the seed grid and
    // the ridge weight are tuned for that range, and the optimization
    // landscape then no longer depends on the caller's units — and map the
    // coefficients back. The predictor span is also the constant-predictor
    // gate: a span test cannot disagree with the normalization the way a
    // rounded variance can.
    let nmin = n_scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let nmax = n_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d = nmax - nmin;
    if d <= 0.0 {
        return Err(Error::Degenerate(
            "logistic fit needs non-constant predictor scores".into(),
        ));
    }
    let normalized: Vec<f64> = n_scores.iter().map(|&n| (n - nmin) / d).collect();

    let fmin = f_scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let fmax = f_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Constant targets are representable (a constant curve), so they pass
    // through on the identity scale rather than erroring.
    let sf = if fmax - fmin > 0.0 { fmax - fmin } else { 1.0 };
    let targets: Vec<f64> = f_scores.iter().map(|&f| (f - fmin) / sf).collect();

    let mut candidates = seed_candidates(&normalized, &targets);
    let (slope, intercept) = ols_line(&normalized, &targets)
        .expect("a positive span guarantees non-constant normalized predictors");
    let mid = median(&normalized);
    for start in [
        [1.0, 1.0, mid, slope, intercept],
        [1.0, -1.0, mid, slope, intercept],
        [0.5, 3.0, mid, slope, intercept],
    ] {
        candidates.push((start, ridge_sse(&start, &normalized, &targets)));
    }
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut best: Option<(f64, [f64; 5])> = None;
    for &(seed, _) in candidates.iter().take(POLISH_CANDIDATES) {
        let (beta, value) = polish(seed, &normalized, &targets);
        let better = match &best {
            None => true,
            Some((v, _)) => value < *v,
        };
        if better {
            best = Some((value, beta));
        }
    }
    let (_, beta) = best.expect("the seed grid always produces candidates");
    // Undo the target normalization f' = (f − fmin)/sf: amplitude and the
    // linear part scale by sf, the intercept absorbs the offset.
    let beta = [
        beta[0] * sf,
        beta[1],
        beta[2],
        beta[3] * sf,
        beta[4] * sf + fmin,
    ];
    // Undo the predictor normalization n' = (n − nmin)/d exactly in
    // coefficient space: β2, β4 scale by 1/d; β3 shifts back; β5 absorbs the
    // linear offset.
    Ok(LogisticParams {
        beta: [
            beta[0],
            beta[1] / d,
            nmin + beta[2] * d,
            beta[3] / d,
            beta[4] - beta[3] * nmin / d,
        ],
    })
}

/// Ridge-regularized error: the data term plus `RIDGE·‖β‖²`.
fn ridge_sse(beta: &[f64; 5], ns: &[f64], fs: &[f64]) -> f64 {
    sse(beta, ns, fs) + RIDGE * beta.iter().map(|b| b * b).sum::<f64>()
}

/// Deterministic seed candidates: for every (shape, center) cell of a fixed
/// grid, the model is linear in the remaining coefficients, so the best
/// (β1, β4, β5) per cell come from one closed-form least-squares solve.
/// Returns `(seed, ridge error)` pairs.
fn seed_candidates(ns: &[f64], fs: &[f64]) -> Vec<([f64; 5], f64)> {
    let mut out = Vec::with_capacity(SHAPE_GRID.len() * CENTER_STEPS);
    let n = ns.len() as f64;
    for &shape in &SHAPE_GRID {
        for step in 0..CENTER_STEPS {
            let center = -0.25 + 0.1 * step as f64;
            // Normal equations over the basis {g(z), n, 1} with
            // g(z) = 1/2 − σ(shape·(n − center)).
            let mut sgg = 0.0;
            let mut sgn = 0.0;
            let mut sg = 0.0;
            let mut snn = 0.0;
            let mut sn = 0.0;
            let mut sgf = 0.0;
            let mut snf = 0.0;
            let mut sf = 0.0;
            for (&x, &f) in ns.iter().zip(fs) {
                let g = 0.5 - 1.0 / (1.0 + math::exp(shape * (x - center)));
                sgg += g * g;
                sgn += g * x;
                sg += g;
                snn += x * x;
                sn += x;
                sgf += g * f;
                snf += x * f;
                sf += f;
            }
            // A light ridge keeps the solve well-posed even when the sigmoid
            // column is nearly collinear with the linear part.
            let a = [
                [sgg + RIDGE, sgn, sg],
                [sgn, snn + RIDGE, sn],
                [sg, sn, n + RIDGE],
            ];
            if let Some([b1, b4, b5]) = solve3(a, [sgf, snf, sf]) {
                let beta = [b1, shape, center, b4, b5];
                out.push((beta, ridge_sse(&beta, ns, fs)));
            }
        }
    }
    out
}

/// Damped least-squares (Levenberg–Marquardt) refinement of a candidate
/// coefficient vector under the ridge objective. The curve is smooth with a
/// closed-form Jacobian, so near a minimum this converges quadratically to
/// the stationary point. Returns the refined coefficients and their error;
/// never worse than the seed because steps are only accepted on improvement.
fn polish(start: [f64; 5], ns: &[f64], fs: &[f64]) -> ([f64; 5], f64) {
    let mut beta = start;
    let mut value = ridge_sse(&start, ns, fs);
    let mut lambda = 1e-3;
    for _ in 0..POLISH_ITER {
        // Normal equations: a = JᵀJ + RIDGE·I, g = Jᵀr + RIDGE·β for
        // residuals r = F(n) − f.
        let mut a = [[0.0f64; 5]; 5];
        let mut g = [0.0f64; 5];
        for (&n, &f) in ns.iter().zip(fs) {
            let s = 1.0 / (1.0 + math::exp(beta[1] * (n - beta[2])));
            let slope = s * (1.0 - s);
            let row = [
                0.5 - s,
                beta[0] * slope * (n - beta[2]),
                -beta[0] * slope * beta[1],
                n,
                1.0,
            ];
            let residual = beta[0] * (0.5 - s) + beta[3] * n + beta[4] - f;
            for i in 0..5 {
                g[i] += row[i] * residual;
                for j in i..5 {
                    a[i][j] += row[i] * row[j];
                }
            }
        }
        for i in 0..5 {
            g[i] += RIDGE * beta[i];
            a[i][i] += RIDGE;
            for j in 0..i {
                a[i][j] = a[j][i];
            }
        }
        if !g.iter().all(|v| v.is_finite()) {
            break;
        }
        let gmax = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if gmax <= GRADIENT_TOL * (1.0 + value) {
            break;
        }
        // Damped step: (a + λ·diag(a)) δ = −g, with λ adapted so every
        // accepted step truly lowers the error.
        let mut damped = a;
        for i in 0..5 {
            let d = a[i][i];
            damped[i][i] = d + lambda * if d > 0.0 { d } else { 1.0 };
        }
        let rhs = [-g[0], -g[1], -g[2], -g[3], -g[4]];
        let step = solve5(damped, rhs);
        let improved = step.and_then(|delta| {
            let candidate = [
                beta[0] + delta[0],
                beta[1] + delta[1],
                beta[2] + delta[2],
                beta[3] + delta[3],
                beta[4] + delta[4],
            ];
            let v = ridge_sse(&candidate, ns, fs);
            (v.is_finite() && v < value).then_some((candidate, v))
        });
        match improved {
            Some((candidate, v)) => {
                beta = candidate;
                value = v;
                lambda = (lambda / 3.0).max(1e-12);
            }
            None => {
                lambda *= 7.0;
                if lambda > 1e12 {
                    break;
                }
            }
        }
    }
    (beta, value)
}

/// Direct 3×3 linear solve by Gaussian elimination with partial pivoting,
/// for the per-cell closed-form seeds.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let mut pivot = col;
        for row in col + 1..3 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if !(a[pivot][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for col in (0..3).rev() {
        let mut acc = b[col];
        for k in col + 1..3 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Direct 5×5 linear solve by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes; the caller treats that as a failed
/// step and raises the damping.
fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let mut pivot = col;
        for row in col + 1..5 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if !(a[pivot][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..5 {
            let factor = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0f64; 5];
    for col in (0..5).rev() {
        let mut acc = b[col];
        for k in col + 1..5 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}
