//! Seed-deterministic generation of noisy bounded-variation signals on an
//! equispaced grid, plus a small experiment harness reporting per-iteration
//! error against the noiseless truth.
//!
//! Noise is a standard-normal stream drawn from a ChaCha8 generator seeded
//! with the spec's 64-bit seed, so equal seeds give bit-identical samples.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fit::{run_with_retention, Algorithm, StoppingPolicy};
use crate::io::{SampleRow, SortedSample, TiePolicy};

/// Shape of the noiseless signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Constant levels between breakpoints.
    PiecewiseConstant,
    /// A sine component on top of the piecewise-constant levels; the first
    /// coefficient is the sine amplitude, the rest are the levels.
    BvSmoothMix,
}

impl SignalKind {
    pub fn name(self) -> &'static str {
        match self {
            SignalKind::PiecewiseConstant => "piecewise_constant",
            SignalKind::BvSmoothMix => "bv_smooth_mix",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "piecewise_constant" => Ok(SignalKind::PiecewiseConstant),
            "bv_smooth_mix" => Ok(SignalKind::BvSmoothMix),
            other => Err(Error::InvalidSignalSpec(format!(
                "unknown kind {other:?} (expected piecewise_constant or bv_smooth_mix)"
            ))),
        }
    }
}

/// Deterministic recipe for a noisy sample on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    /// Jump locations, strictly increasing, strictly inside (0, 1).
    pub breakpoints: Vec<f64>,
    /// Segment levels (piecewise constant), or sine amplitude followed by
    /// segment levels (smooth mix).
    pub coefficients: Vec<f64>,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_sd: f64,
    /// Number of equispaced design points; at least 2.
    pub n: usize,
    pub seed: u64,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSignalSpec(msg));
        if self.n < 2 {
            return fail(format!("n={} but at least 2 points are required", self.n));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return fail(format!("noise_sd={} must be finite and >= 0", self.noise_sd));
        }
        for b in &self.breakpoints {
            if !(0.0 < *b && *b < 1.0) {
                return fail(format!("breakpoint {b} lies outside (0, 1)"));
            }
        }
        if self.breakpoints.windows(2).any(|p| p[0] >= p[1]) {
            return fail("breakpoints must be strictly increasing".into());
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return fail("coefficients must be finite".into());
        }
        let expected = match self.kind {
            SignalKind::PiecewiseConstant => self.breakpoints.len() + 1,
            SignalKind::BvSmoothMix => self.breakpoints.len() + 2,
        };
        if self.coefficients.len() != expected {
            return fail(format!(
                "expected {expected} coefficients for this kind, got {}",
                self.coefficients.len()
            ));
        }
        Ok(())
    }

    fn levels(&self) -> &[f64] {
        match self.kind {
            SignalKind::PiecewiseConstant => &self.coefficients,
            SignalKind::BvSmoothMix => &self.coefficients[1..],
        }
    }

    /// Noiseless signal value at `x`.
    pub fn truth_at(&self, x: f64) -> f64 {
        let segment = self.breakpoints.iter().take_while(|b| **b <= x).count();
        let step = self.levels()[segment];
        match self.kind {
            SignalKind::PiecewiseConstant => step,
            SignalKind::BvSmoothMix => {
                step + self.coefficients[0] * (2.0 * std::f64::consts::PI * x).sin()
            }
        }
    }
}

/// Generates the sample and the noiseless truth at the design points
/// `x_i = i / (n - 1)`.
pub fn generate(spec: &SignalSpec) -> Result<(SortedSample, Vec<f64>)> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        let r = spec.truth_at(x);
        let noise: f64 = StandardNormal.sample(&mut rng);
        rows.push(SampleRow {
            x,
            y: r + spec.noise_sd * noise,
            w: 1.0,
        });
        truth.push(r);
    }
    let sample = SortedSample::from_rows(rows, TiePolicy::Error)?;
    Ok((sample, truth))
}

/// Per-iteration diagnostics of a fit against the noiseless truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub k: usize,
    pub rss: f64,
    pub mse_truth: f64,
    pub level_sets: usize,
}

/// Generates per `spec`, runs `k_max` iterations, and tabulates rss,
/// level-set count, and mean squared error against the truth for every
/// iteration.
pub fn experiment_mse(
    spec: &SignalSpec,
    algorithm: Algorithm,
    k_max: usize,
) -> Result<Vec<ExperimentRow>> {
    let (sample, truth) = generate(spec)?;
    let policy = StoppingPolicy::fixed_k(k_max)?;
    let fit = run_with_retention(&sample, algorithm, &policy, k_max)?;
    let n = sample.len() as f64;
    let mut rows = Vec::with_capacity(fit.trace.iterations());
    for state in fit.trace.states() {
        let y_hat = state
            .y_hat()
            .expect("retention covers every iteration of the experiment");
        let mse_truth = y_hat
            .iter()
            .zip(&truth)
            .map(|(f, t)| (f - t) * (f - t))
            .sum::<f64>()
            / n;
        rows.push(ExperimentRow {
            k: state.k(),
            rss: state.rss(),
            mse_truth,
            level_sets: state.level_sets(),
        });
    }
    Ok(rows)
}
