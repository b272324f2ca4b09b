//! Discrete variation toolkit: difference operator, Hadamard product,
//! total-variation norm, the singular-variation predicate, and the
//! minimum-variation split of a vector into a nondecreasing and a
//! nonincreasing part. That split is the limit the iteration engine
//! converges to, which makes it the reference the convergence tests check
//! against.

use crate::error::{Error, Result};
use crate::projection::{is_in_cone, weighted_mean, Direction};

/// Cone-membership tolerance used when validating a [`DecompositionPair`].
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Absolute elementwise bound on `delta(u) * delta(b)` for a valid pair.
pub const SINGULARITY_TOL: f64 = 1e-10;
/// Relative tolerance on the mean conditions of a valid pair.
pub const MEAN_TOL: f64 = 1e-10;

/// Consecutive differences `(z[1]-z[0], ..., z[n-1]-z[n-2])`.
pub fn delta(z: &[f64]) -> Result<Vec<f64>> {
    if z.len() < 2 {
        return Err(Error::NeedsTwoPoints);
    }
    Ok(z.windows(2).map(|p| p[1] - p[0]).collect())
}

/// Elementwise product of two equal-length vectors.
pub fn hadamard(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

/// Sum of absolute consecutive differences; zero for a single point.
pub fn total_variation(z: &[f64]) -> f64 {
    z.windows(2).map(|p| (p[1] - p[0]).abs()).sum()
}

/// True when `u` and `b` never move at the same index:
/// `max |delta(u) * delta(b)| <= tol`.
pub fn singular_variations(u: &[f64], b: &[f64], tol: f64) -> Result<bool> {
    if u.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: b.len(),
        });
    }
    let prod = hadamard(&delta(u)?, &delta(b)?)?;
    Ok(prod.iter().all(|p| p.abs() <= tol))
}

fn max_singular_product(u: &[f64], b: &[f64]) -> f64 {
    if u.len() < 2 {
        return 0.0;
    }
    u.windows(2)
        .zip(b.windows(2))
        .map(|(du, db)| ((du[1] - du[0]) * (db[1] - db[0])).abs())
        .fold(0.0, f64::max)
}

/// A split `y = u + b` into a nondecreasing part `u` and a nonincreasing
/// part `b` with singular variations, pinned down by `mean(u) =
/// reference_mean` and `mean(b) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionPair {
    increasing: Vec<f64>,
    decreasing: Vec<f64>,
    reference_mean: f64,
}

impl DecompositionPair {
    /// Validates the three identifiability conditions under unit weights
    /// and wraps the pair.
    pub fn new(increasing: Vec<f64>, decreasing: Vec<f64>, reference_mean: f64) -> Result<Self> {
        let ones = vec![1.0; increasing.len()];
        Self::new_weighted(increasing, decreasing, &ones, reference_mean)
    }

    /// Weighted-mean variant of [`DecompositionPair::new`]; a fit over
    /// tie-merged data preserves weighted rather than arithmetic means.
    pub fn new_weighted(
        increasing: Vec<f64>,
        decreasing: Vec<f64>,
        weights: &[f64],
        reference_mean: f64,
    ) -> Result<Self> {
        if increasing.is_empty() {
            return Err(Error::EmptySequence);
        }
        if increasing.len() != decreasing.len() {
            return Err(Error::LengthMismatch {
                left: increasing.len(),
                right: decreasing.len(),
            });
        }
        if !is_in_cone(&increasing, Direction::Nondecreasing, MEMBERSHIP_TOL) {
            return Err(Error::InvalidDecomposition(
                "increasing part is not nondecreasing".into(),
            ));
        }
        if !is_in_cone(&decreasing, Direction::Nonincreasing, MEMBERSHIP_TOL) {
            return Err(Error::InvalidDecomposition(
                "decreasing part is not nonincreasing".into(),
            ));
        }
        let mean_tol = MEAN_TOL * (1.0 + reference_mean.abs());
        if (weighted_mean(&increasing, weights) - reference_mean).abs() > mean_tol {
            return Err(Error::InvalidDecomposition(
                "increasing part does not match the reference mean".into(),
            ));
        }
        if weighted_mean(&decreasing, weights).abs() > mean_tol {
            return Err(Error::InvalidDecomposition(
                "decreasing part does not have zero mean".into(),
            ));
        }
        if max_singular_product(&increasing, &decreasing) > SINGULARITY_TOL {
            return Err(Error::InvalidDecomposition(
                "parts do not have singular variations".into(),
            ));
        }
        Ok(Self {
            increasing,
            decreasing,
            reference_mean,
        })
    }

    /// Wraps parts whose invariants are guaranteed by the producing
    /// algorithm (for example an iteration state, whose tolerances scale
    /// with the data) without re-validating.
    pub fn from_parts_unchecked(
        increasing: Vec<f64>,
        decreasing: Vec<f64>,
        reference_mean: f64,
    ) -> Self {
        Self {
            increasing,
            decreasing,
            reference_mean,
        }
    }

    pub fn increasing(&self) -> &[f64] {
        &self.increasing
    }

    pub fn decreasing(&self) -> &[f64] {
        &self.decreasing
    }

    pub fn reference_mean(&self) -> f64 {
        self.reference_mean
    }

    pub fn len(&self) -> usize {
        self.increasing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increasing.is_empty()
    }

    /// Reassembled vector `u + b`.
    pub fn sum(&self) -> Vec<f64> {
        self.increasing
            .iter()
            .zip(&self.decreasing)
            .map(|(u, b)| u + b)
            .collect()
    }
}

/// Splits `y` into cumulative positive and negative increments, shifted so
/// that `mean(u) = mean(y)` and `mean(b) = 0`.
///
/// Exactly one of the two parts moves at each index, so the construction
/// is singular by construction and the total variation is additive:
/// `V(y) = V(u) + V(b)`.
pub fn jordan_decompose(y: &[f64]) -> Result<DecompositionPair> {
    let ones = vec![1.0; y.len()];
    jordan_decompose_weighted(y, &ones)
}

/// [`jordan_decompose`] with the mean conditions taken in the weighted
/// average, matching the identifiability a weighted fit preserves.
pub fn jordan_decompose_weighted(y: &[f64], weights: &[f64]) -> Result<DecompositionPair> {
    if y.is_empty() {
        return Err(Error::EmptySequence);
    }
    if y.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: weights.len(),
        });
    }
    let n = y.len();
    let mut up = vec![0.0; n];
    let mut down = vec![0.0; n];
    for i in 1..n {
        let d = y[i] - y[i - 1];
        // Zero increments are assigned to neither part.
        up[i] = up[i - 1] + if d > 0.0 { d } else { 0.0 };
        down[i] = down[i - 1] + if d < 0.0 { d } else { 0.0 };
    }
    let y_mean = weighted_mean(y, weights);
    let shift_up = y_mean - weighted_mean(&up, weights);
    let shift_down = -weighted_mean(&down, weights);
    let increasing: Vec<f64> = up.iter().map(|v| v + shift_up).collect();
    let decreasing: Vec<f64> = down.iter().map(|v| v + shift_down).collect();
    DecompositionPair::new_weighted(increasing, decreasing, weights, y_mean)
}
