//! Stopping-rule machinery: effective dimension via level-set counts, the
//! aic/bic/aicc/gcv complexity penalties, and minimization of
//! `log(RSS_k / n) + phi(p_k)` over a grid of iteration counts.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fit::FitTrace;

/// Penalized-fit criterion used to choose the stopping iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Bic,
    Aicc,
    Gcv,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Aic, Criterion::Bic, Criterion::Aicc, Criterion::Gcv];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
            Criterion::Aicc => "aicc",
            Criterion::Gcv => "gcv",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            "aicc" => Ok(Criterion::Aicc),
            "gcv" => Ok(Criterion::Gcv),
            other => Err(Error::InvalidPolicy(format!(
                "unknown criterion {other:?} (expected aic, bic, aicc or gcv)"
            ))),
        }
    }
}

/// Number of maximal runs of exactly-equal consecutive values.
pub fn level_set_count(v: &[f64]) -> usize {
    if v.is_empty() {
        return 0;
    }
    1 + v.windows(2).filter(|p| p[0] != p[1]).count()
}

/// Complexity penalty for a fit with `p` level sets on `n` observations.
///
/// Returns "criterion undefined at this complexity" outside the penalty's
/// domain (`n - p - 2 > 0` for aicc, `p < n` for gcv); the caller excludes
/// such grid entries rather than failing.
pub fn phi(criterion: Criterion, p: usize, n: usize) -> Result<f64> {
    if p < 1 || n < 1 {
        return Err(Error::CriterionUndefined { p, n });
    }
    let pf = p as f64;
    let nf = n as f64;
    match criterion {
        Criterion::Aic => Ok(2.0 * pf / nf),
        Criterion::Bic => Ok(pf / nf * nf.ln()),
        Criterion::Aicc => {
            if n as i64 - p as i64 - 2 <= 0 {
                return Err(Error::CriterionUndefined { p, n });
            }
            Ok(1.0 + 2.0 * (pf + 1.0) / (nf - pf - 2.0))
        }
        Criterion::Gcv => {
            if p >= n {
                return Err(Error::CriterionUndefined { p, n });
            }
            Ok(-2.0 * (1.0 - pf / nf).ln())
        }
    }
}

/// `log(rss / n) + phi(criterion, p, n)`.
///
/// A zero rss is excluded: perfect interpolation would have criterion
/// negative infinity and always win.
pub fn criterion_value(criterion: Criterion, rss: f64, p: usize, n: usize) -> Result<f64> {
    if !rss.is_finite() || rss <= 0.0 {
        return Err(Error::CriterionUndefined { p, n });
    }
    Ok((rss / n as f64).ln() + phi(criterion, p, n)?)
}

/// Iteration grid `start..=end` with the given stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    start: usize,
    end: usize,
    step: usize,
}

impl Grid {
    pub fn new(start: usize, end: usize, step: usize) -> Result<Self> {
        if start < 1 || end < start || step < 1 {
            return Err(Error::InvalidGrid(format!(
                "{start}..{end}:{step} is not a valid iteration range"
            )));
        }
        Ok(Self { start, end, step })
    }

    /// `1..=end` with unit stride.
    pub fn through(end: usize) -> Result<Self> {
        Self::new(1, end, 1)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Largest grid member actually reachable from `start` by `step`.
    pub fn max_k(&self) -> usize {
        self.start + (self.end - self.start) / self.step * self.step
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (self.start..=self.end).step_by(self.step)
    }

    /// Restricts the grid to iterations `<= available`; `None` when nothing
    /// is left.
    pub fn clamped_to(&self, available: usize) -> Option<Grid> {
        if self.start > available {
            return None;
        }
        Some(Grid {
            start: self.start,
            end: self.end.min(available),
            step: self.step,
        })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.step == 1 {
            write!(f, "{}..{}", self.start, self.end)
        } else {
            write!(f, "{}..{}:{}", self.start, self.end, self.step)
        }
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// Parses `"a..b"` or `"a..b:step"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGrid(format!("{s:?} does not match a..b[:step]"));
        let (range, step) = match s.split_once(':') {
            Some((r, st)) => (r, st.parse::<usize>().map_err(|_| bad())?),
            None => (s, 1),
        };
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let start = a.parse::<usize>().map_err(|_| bad())?;
        let end = b.parse::<usize>().map_err(|_| bad())?;
        Grid::new(start, end, step)
    }
}

/// Why a grid entry carries no finite criterion value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntryStatus {
    /// Finite criterion value.
    Value(f64),
    /// Zero rss with fewer level sets than data points; wins outright at
    /// the smallest such k.
    ExactFit,
    /// Undefined penalty, or a zero-rss pure interpolation.
    Excluded,
}

impl EntryStatus {
    pub fn value(&self) -> Option<f64> {
        match self {
            EntryStatus::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// Criterion evaluation for one grid iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEntry {
    pub k: usize,
    pub rss: f64,
    pub level_sets: usize,
    pub status: EntryStatus,
}

/// Criterion values over a grid together with the chosen iteration count.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    criterion: Criterion,
    entries: Vec<GridEntry>,
    chosen_k: usize,
}

impl SelectionReport {
    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn entries(&self) -> &[GridEntry] {
        &self.entries
    }

    pub fn chosen_k(&self) -> usize {
        self.chosen_k
    }

    pub fn entry(&self, k: usize) -> Option<&GridEntry> {
        self.entries.iter().find(|e| e.k == k)
    }
}

/// Minimizes the criterion over the grid, smallest k winning ties.
///
/// An exact fit (zero rss) that is not a pure interpolation beats every
/// finite value; all-excluded grids fail with "criterion degenerate on
/// grid". The model size n is the raw observation count, so tie-merged
/// samples are scored as their expanded data.
pub fn select_k(trace: &FitTrace, criterion: Criterion, grid: &Grid) -> Result<SelectionReport> {
    let available = trace.iterations();
    let n = trace.sample().raw_len();
    let m = trace.sample().len();
    let mut entries = Vec::new();
    let mut chosen: Option<(bool, f64, usize)> = None; // (exact, value, k)
    for k in grid.iter() {
        let state = trace
            .state(k)
            .ok_or(Error::GridOutsideTrace { k, available })?;
        let rss = state.rss();
        let p = state.level_sets();
        let status = if rss == 0.0 {
            if p < m {
                EntryStatus::ExactFit
            } else {
                EntryStatus::Excluded
            }
        } else {
            match criterion_value(criterion, rss, p, n) {
                Ok(v) => EntryStatus::Value(v),
                Err(Error::CriterionUndefined { .. }) => EntryStatus::Excluded,
                Err(e) => return Err(e),
            }
        };
        match status {
            EntryStatus::ExactFit => {
                let better = match chosen {
                    None => true,
                    Some((exact, _, _)) => !exact, // first exact fit wins
                };
                if better {
                    chosen = Some((true, f64::NEG_INFINITY, k));
                }
            }
            EntryStatus::Value(v) => {
                let better = match chosen {
                    None => true,
                    Some((true, _, _)) => false,
                    Some((false, best, _)) => v < best,
                };
                if better {
                    chosen = Some((false, v, k));
                }
            }
            EntryStatus::Excluded => {}
        }
        entries.push(GridEntry {
            k,
            rss,
            level_sets: p,
            status,
        });
    }
    let (_, _, chosen_k) = chosen.ok_or(Error::DegenerateCriterion)?;
    Ok(SelectionReport {
        criterion,
        entries,
        chosen_k,
    })
}
