//! Iteration engines that alternate isotone and antitone projections.
//!
//! Two equivalent schedules are provided: `iir` refits partial residuals
//! (each pass projects `y` minus the opposite component), while `iibr`
//! projects the global residual and accumulates the resulting increments.
//! Both produce the same accumulated states, which is what the trace
//! stores, so downstream consumers never need to care which engine ran.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::SortedSample;
use crate::projection::{pava_values, Direction};
use crate::selection::{level_set_count, select_k, Criterion, Grid, SelectionReport};

/// Iterations whose vectors are retained by default; beyond this only
/// diagnostics and the final state's vectors are kept.
pub const DEFAULT_VECTOR_RETENTION: usize = 10_000;

/// Relative threshold declaring two consecutive fits equal at machine
/// precision, halting an otherwise endless fixed-point loop.
const FIXED_POINT_REL_TOL: f64 = 1e-15;

/// Iteration schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Alternate projections on partial residuals (backfitting style).
    Iir,
    /// Projections of global residuals with accumulated increments
    /// (boosting style).
    Iibr,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Iir => "iir",
            Algorithm::Iibr => "iibr",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iir" => Ok(Algorithm::Iir),
            "iibr" => Ok(Algorithm::Iibr),
            other => Err(Error::InvalidPolicy(format!(
                "unknown algorithm {other:?} (expected iir or iibr)"
            ))),
        }
    }
}

/// Accumulated component vectors of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVectors {
    pub u_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
}

/// Diagnostics (and, when retained, vectors) of iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    k: usize,
    rss: f64,
    level_sets: usize,
    vectors: Option<StateVectors>,
}

impl IterationState {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Weighted residual sum of squares against the data.
    pub fn rss(&self) -> f64 {
        self.rss
    }

    /// Number of maximal constant runs of the fitted vector.
    pub fn level_sets(&self) -> usize {
        self.level_sets
    }

    pub fn vectors(&self) -> Option<&StateVectors> {
        self.vectors.as_ref()
    }

    pub fn u_hat(&self) -> Option<&[f64]> {
        self.vectors.as_ref().map(|v| v.u_hat.as_slice())
    }

    pub fn b_hat(&self) -> Option<&[f64]> {
        self.vectors.as_ref().map(|v| v.b_hat.as_slice())
    }

    pub fn y_hat(&self) -> Option<&[f64]> {
        self.vectors.as_ref().map(|v| v.y_hat.as_slice())
    }
}

/// Per-iteration record of a fit, states indexed 1..=K.
#[derive(Debug, Clone)]
pub struct FitTrace {
    sample: SortedSample,
    algorithm: Algorithm,
    states: Vec<IterationState>,
}

impl FitTrace {
    pub fn sample(&self) -> &SortedSample {
        &self.sample
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn states(&self) -> &[IterationState] {
        &self.states
    }

    /// Number of recorded iterations K.
    pub fn iterations(&self) -> usize {
        self.states.len()
    }

    /// State of iteration `k` (1-based).
    pub fn state(&self, k: usize) -> Option<&IterationState> {
        if k == 0 {
            return None;
        }
        self.states.get(k - 1)
    }

    /// Final state; its vectors are always retained.
    pub fn final_state(&self) -> &IterationState {
        self.states.last().expect("a trace holds at least one state")
    }
}

/// How long to keep iterating.
#[derive(Debug, Clone, PartialEq)]
pub enum StoppingRule {
    /// Run exactly k iterations (sooner at a floating-point fixed point).
    FixedK(usize),
    /// Stop once `max |y - y_hat| <= eps`.
    ResidualTol(f64),
    /// Run the grid, then pick the criterion-minimizing iteration.
    Criterion { criterion: Criterion, grid: Grid },
}

/// A stopping rule plus the always-required iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingPolicy {
    rule: StoppingRule,
    max_iter: usize,
}

impl StoppingPolicy {
    /// Validates the rule against the cap. `FixedK` and `Criterion` derive
    /// a missing cap from the rule itself; a residual tolerance alone
    /// cannot guarantee termination, so omitting the cap is the "no cap"
    /// error.
    pub fn new(rule: StoppingRule, max_iter: Option<usize>) -> Result<Self> {
        let max_iter = match &rule {
            StoppingRule::FixedK(k) => {
                if *k < 1 {
                    return Err(Error::InvalidPolicy("fixed k must be at least 1".into()));
                }
                let cap = max_iter.unwrap_or(*k);
                if *k > cap {
                    return Err(Error::InvalidPolicy(format!(
                        "fixed k={k} exceeds max-iteration cap {cap}"
                    )));
                }
                cap
            }
            StoppingRule::ResidualTol(eps) => {
                if !eps.is_finite() || *eps < 0.0 {
                    return Err(Error::InvalidPolicy(format!(
                        "residual tolerance {eps} must be finite and nonnegative"
                    )));
                }
                max_iter.ok_or(Error::NoCap)?
            }
            StoppingRule::Criterion { grid, .. } => {
                let cap = max_iter.unwrap_or(grid.end());
                if grid.end() > cap {
                    return Err(Error::InvalidPolicy(format!(
                        "grid {grid} extends beyond max-iteration cap {cap}"
                    )));
                }
                cap
            }
        };
        if max_iter < 1 {
            return Err(Error::InvalidPolicy("max-iteration cap must be at least 1".into()));
        }
        Ok(Self { rule, max_iter })
    }

    pub fn fixed_k(k: usize) -> Result<Self> {
        Self::new(StoppingRule::FixedK(k), None)
    }

    pub fn residual_tol(eps: f64, max_iter: usize) -> Result<Self> {
        Self::new(StoppingRule::ResidualTol(eps), Some(max_iter))
    }

    pub fn criterion(criterion: Criterion, grid: Grid) -> Result<Self> {
        Self::new(StoppingRule::Criterion { criterion, grid }, None)
    }

    pub fn rule(&self) -> &StoppingRule {
        &self.rule
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }
}

/// A completed fit: the trace, and the selection report when the stopping
/// rule was criterion-based.
#[derive(Debug, Clone)]
pub struct FitRun {
    pub trace: FitTrace,
    pub report: Option<SelectionReport>,
}

impl FitRun {
    /// The iteration the run settles on: the criterion's choice, otherwise
    /// the final iteration.
    pub fn selected_k(&self) -> usize {
        self.report
            .as_ref()
            .map(|r| r.chosen_k())
            .unwrap_or_else(|| self.trace.final_state().k())
    }

    pub fn selected_state(&self) -> &IterationState {
        self.trace
            .state(self.selected_k())
            .expect("selected iteration is part of the trace")
    }
}

/// One partial-residual pass: project `y - b_prev` onto the nondecreasing
/// cone, then the remaining residual onto the nonincreasing cone.
pub fn iir_step(sample: &SortedSample, b_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = sample.len();
    if b_prev.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: b_prev.len(),
        });
    }
    let partial: Vec<f64> = sample.y().iter().zip(b_prev).map(|(y, b)| y - b).collect();
    let u = pava_values(&partial, sample.w(), Direction::Nondecreasing);
    let resid: Vec<f64> = sample.y().iter().zip(&u).map(|(y, u)| y - u).collect();
    let b = pava_values(&resid, sample.w(), Direction::Nonincreasing);
    Ok((u, b))
}

/// One global-residual pass: increments from projecting `y - y_hat_prev`,
/// then its remainder, onto the two cones.
pub fn iibr_step(sample: &SortedSample, y_hat_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = sample.len();
    if y_hat_prev.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y_hat_prev.len(),
        });
    }
    let global: Vec<f64> = sample
        .y()
        .iter()
        .zip(y_hat_prev)
        .map(|(y, f)| y - f)
        .collect();
    let u_inc = pava_values(&global, sample.w(), Direction::Nondecreasing);
    let resid: Vec<f64> = global.iter().zip(&u_inc).map(|(g, u)| g - u).collect();
    let b_inc = pava_values(&resid, sample.w(), Direction::Nonincreasing);
    Ok((u_inc, b_inc))
}

/// Projection of `x` onto the cone of nondecreasing vectors translated to
/// pass through `y`: `y + P(x - y)`.
pub fn translated_cone_projection(y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let ones = vec![1.0; y.len()];
    translated_cone_projection_weighted(y, x, &ones)
}

/// Weighted-metric variant of [`translated_cone_projection`].
pub fn translated_cone_projection_weighted(
    y: &[f64],
    x: &[f64],
    weights: &[f64],
) -> Result<Vec<f64>> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.len(),
        });
    }
    if y.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: weights.len(),
        });
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| xi - yi).collect();
    let proj = pava_values(&diff, weights, Direction::Nondecreasing);
    Ok(y.iter().zip(&proj).map(|(yi, pi)| yi + pi).collect())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs the iteration under `stop`, retaining per-iteration vectors up to
/// [`DEFAULT_VECTOR_RETENTION`].
pub fn run(sample: &SortedSample, algorithm: Algorithm, stop: &StoppingPolicy) -> Result<FitRun> {
    run_with_retention(sample, algorithm, stop, DEFAULT_VECTOR_RETENTION)
}

/// [`run`] with an explicit vector-retention bound. Diagnostics are kept
/// for every iteration; vectors only for `k <= retention` and for the
/// final state. A criterion rule raises retention to cover its grid so the
/// chosen state stays materialized.
///
/// Iteration halts early once consecutive fits agree within machine
/// precision; if that happens before a criterion grid begins, the grid
/// collapses to the fixed-point iteration, which every later iteration
/// would equal anyway.
pub fn run_with_retention(
    sample: &SortedSample,
    algorithm: Algorithm,
    stop: &StoppingPolicy,
    retention: usize,
) -> Result<FitRun> {
    let y = sample.y();
    let w = sample.w();
    let n = sample.len();
    let retention = match stop.rule() {
        StoppingRule::Criterion { grid, .. } => retention.max(grid.end()),
        _ => retention,
    };
    let y_inf = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fixed_point_tol = FIXED_POINT_REL_TOL * (1.0 + y_inf);

    let mut u = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut y_hat_prev = vec![0.0; n];
    let mut states: Vec<IterationState> = Vec::new();

    for k in 1..=stop.max_iter() {
        match algorithm {
            Algorithm::Iir => {
                let partial: Vec<f64> = y.iter().zip(&b).map(|(yi, bi)| yi - bi).collect();
                u = pava_values(&partial, w, Direction::Nondecreasing);
                let resid: Vec<f64> = y.iter().zip(&u).map(|(yi, ui)| yi - ui).collect();
                b = pava_values(&resid, w, Direction::Nonincreasing);
            }
            Algorithm::Iibr => {
                let global: Vec<f64> = y
                    .iter()
                    .zip(&u)
                    .zip(&b)
                    .map(|((yi, ui), bi)| yi - ui - bi)
                    .collect();
                let u_inc = pava_values(&global, w, Direction::Nondecreasing);
                let resid: Vec<f64> = global.iter().zip(&u_inc).map(|(g, ui)| g - ui).collect();
                let b_inc = pava_values(&resid, w, Direction::Nonincreasing);
                for (acc, inc) in u.iter_mut().zip(&u_inc) {
                    *acc += inc;
                }
                for (acc, inc) in b.iter_mut().zip(&b_inc) {
                    *acc += inc;
                }
            }
        }
        let y_hat: Vec<f64> = u.iter().zip(&b).map(|(ui, bi)| ui + bi).collect();

        if k >= 2 && max_abs_diff(&y_hat, &y_hat_prev) <= fixed_point_tol {
            break;
        }

        let rss: f64 = y
            .iter()
            .zip(&y_hat)
            .zip(w)
            .map(|((yi, fi), wi)| wi * (yi - fi) * (yi - fi))
            .sum();
        let level_sets = level_set_count(&y_hat);

        if let Some(prev) = states.last_mut() {
            if prev.k > retention {
                prev.vectors = None;
            }
        }
        states.push(IterationState {
            k,
            rss,
            level_sets,
            vectors: Some(StateVectors {
                u_hat: u.clone(),
                b_hat: b.clone(),
                y_hat: y_hat.clone(),
            }),
        });

        let stop_now = match stop.rule() {
            StoppingRule::FixedK(kk) => k == *kk,
            StoppingRule::ResidualTol(eps) => max_abs_diff(y, &y_hat) <= *eps,
            StoppingRule::Criterion { grid, .. } => k == grid.max_k(),
        };
        y_hat_prev = y_hat;
        if stop_now {
            break;
        }
    }

    let trace = FitTrace {
        sample: sample.clone(),
        algorithm,
        states,
    };
    let report = match stop.rule() {
        StoppingRule::Criterion { criterion, grid } => {
            let effective = grid
                .clamped_to(trace.iterations())
                .unwrap_or_else(|| Grid::through(trace.iterations()).expect("trace is nonempty"));
            Some(select_k(&trace, *criterion, &effective)?)
        }
        _ => None,
    };
    Ok(FitRun { trace, report })
}
