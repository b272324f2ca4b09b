//! Exact Euclidean projection onto the monotone cones via weighted
//! pool-adjacent-violators, together with the predicates used to verify a
//! claimed projection: an exhaustive small-n oracle, the orthogonality /
//! generator characterization, and cone membership.

use crate::error::{Error, Result};

/// Maximum length accepted by [`brute_force_projection`]; the oracle
/// enumerates `2^(n-1)` block partitions.
pub const ORACLE_MAX_LEN: usize = 12;

/// Orientation of a monotone cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The cone of vectors with `v[0] <= v[1] <= ... <= v[n-1]`.
    Nondecreasing,
    /// The cone of vectors with `v[0] >= v[1] >= ... >= v[n-1]`.
    Nonincreasing,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Nondecreasing => Direction::Nonincreasing,
            Direction::Nonincreasing => Direction::Nondecreasing,
        }
    }
}

/// Finite response values paired with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSequence {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSequence {
    /// Validates and wraps a weighted sequence.
    ///
    /// Fails with "empty sequence" on length zero and "invalid sample" on a
    /// non-finite value or a non-positive (or non-finite) weight.
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        if values.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: weights.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "non-finite value at index {i}"
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidSample(format!(
                "non-positive weight at index {i}"
            )));
        }
        Ok(Self { values, weights })
    }

    /// Wraps `values` with unit weights.
    pub fn unweighted(values: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        Self::new(values, weights)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        // Construction rejects empty input.
        false
    }

    pub fn weighted_mean(&self) -> f64 {
        weighted_mean(&self.values, &self.weights)
    }
}

pub(crate) fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, w) in values.iter().zip(weights) {
        num += v * w;
        den += w;
    }
    num / den
}

/// One maximal constant run of a [`MonotoneFit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    /// 0-based index of the first element of the run.
    pub start: usize,
    /// Number of elements in the run; always positive.
    pub len: usize,
    /// Pooled weighted mean shared by the run.
    pub value: f64,
}

/// A vector in a monotone cone stored as its level sets.
///
/// Blocks partition `0..n` contiguously and adjacent block values are
/// strictly ordered according to `direction`; equal pooled values are
/// always merged into one block.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFit {
    blocks: Vec<Block>,
    direction: Direction,
    n: usize,
}

impl MonotoneFit {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of level sets.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Expands the block representation into a length-`n` vector.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        for b in &self.blocks {
            out.extend(std::iter::repeat_n(b.value, b.len));
        }
        out
    }
}

/// Weighted least-squares projection onto the nondecreasing cone.
///
/// Stack-based pool-adjacent-violators: blocks are pooled while an adjacent
/// pair violates (or exactly equals) the required order, each pool keeping
/// the running weighted mean. Every block value is the weighted mean of its
/// members and the weighted mean of the whole fit equals the weighted mean
/// of the input.
pub fn project_isotone(s: &WeightedSequence) -> MonotoneFit {
    pava(&s.values, &s.weights, Direction::Nondecreasing)
}

/// Weighted least-squares projection onto the nonincreasing cone.
///
/// Computed by reduction: the values are negated, projected with
/// [`project_isotone`], and the pooled block values negated back. Negation
/// is exact in floating point, so the reduction introduces no error; the
/// reversal identity `anti(y) = reverse(iso(reverse(y)))` is covered by the
/// oracle tests instead of being used as the implementation.
pub fn project_antitone(s: &WeightedSequence) -> MonotoneFit {
    pava(&s.values, &s.weights, Direction::Nonincreasing)
}

/// Unvalidated PAVA entry point shared by the iteration engine.
pub(crate) fn pava(values: &[f64], weights: &[f64], direction: Direction) -> MonotoneFit {
    match direction {
        Direction::Nondecreasing => pava_nondecreasing(values, weights),
        Direction::Nonincreasing => {
            let negated: Vec<f64> = values.iter().map(|v| -v).collect();
            let mut fit = pava_nondecreasing(&negated, weights);
            for b in &mut fit.blocks {
                b.value = -b.value;
            }
            fit.direction = Direction::Nonincreasing;
            fit
        }
    }
}

/// PAVA returning the expanded vector directly.
pub(crate) fn pava_values(values: &[f64], weights: &[f64], direction: Direction) -> Vec<f64> {
    pava(values, weights, direction).expand()
}

fn pava_nondecreasing(values: &[f64], weights: &[f64]) -> MonotoneFit {
    debug_assert_eq!(values.len(), weights.len());
    debug_assert!(!values.is_empty());
    // (pooled value, pooled weight, length)
    let mut stack: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        stack.push((v, w, 1));
        while stack.len() >= 2 {
            let (v2, w2, l2) = stack[stack.len() - 1];
            let (v1, w1, l1) = stack[stack.len() - 2];
            if v1 < v2 {
                break;
            }
            // Equal pooled values merge without arithmetic so that
            // re-projecting a fit reproduces it bit for bit.
            let pooled = if v1 == v2 {
                v1
            } else {
                (v1 * w1 + v2 * w2) / (w1 + w2)
            };
            stack.pop();
            let top = stack.last_mut().expect("stack has a predecessor");
            *top = (pooled, w1 + w2, l1 + l2);
        }
    }
    let mut blocks = Vec::with_capacity(stack.len());
    let mut start = 0;
    for (value, _, len) in stack {
        blocks.push(Block { start, len, value });
        start += len;
    }
    MonotoneFit {
        blocks,
        direction: Direction::Nondecreasing,
        n: values.len(),
    }
}

/// Exhaustive projection oracle for `n <= 12`.
///
/// Enumerates every partition of the indices into consecutive blocks,
/// fits each block with its weighted mean, keeps the candidates whose
/// pooled means satisfy the direction's non-strict order, and returns the
/// feasible candidate with minimal weighted residual sum of squares. This
/// path shares no code with the PAVA implementation.
pub fn brute_force_projection(s: &WeightedSequence, direction: Direction) -> Result<Vec<f64>> {
    let n = s.len();
    if n > ORACLE_MAX_LEN {
        return Err(Error::OracleSizeLimit {
            n,
            max: ORACLE_MAX_LEN,
        });
    }
    let values = s.values();
    let weights = s.weights();
    let mut best: Option<(f64, Vec<f64>)> = None;
    // Bit i of `cuts` splits between positions i and i+1.
    for cuts in 0u32..(1u32 << (n - 1)) {
        let mut means = Vec::new();
        let mut bounds = Vec::new();
        let mut start = 0;
        for end in 0..n {
            let is_last = end == n - 1;
            if is_last || cuts & (1 << end) != 0 {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in start..=end {
                    num += weights[i] * values[i];
                    den += weights[i];
                }
                means.push(num / den);
                bounds.push((start, end));
                start = end + 1;
            }
        }
        let feasible = means.windows(2).all(|m| match direction {
            Direction::Nondecreasing => m[0] <= m[1],
            Direction::Nonincreasing => m[0] >= m[1],
        });
        if !feasible {
            continue;
        }
        let mut rss = 0.0;
        for (mean, &(lo, hi)) in means.iter().zip(&bounds) {
            for i in lo..=hi {
                let r = values[i] - mean;
                rss += weights[i] * r * r;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| rss < *b) {
            let mut fitted = Vec::with_capacity(n);
            for (mean, &(lo, hi)) in means.iter().zip(&bounds) {
                fitted.extend(std::iter::repeat_n(*mean, hi - lo + 1));
            }
            best = Some((rss, fitted));
        }
    }
    Ok(best.expect("the single-block partition is always feasible").1)
}

/// Residual quantities characterizing a metric projection onto a monotone
/// cone, along with the claimed vector's own cone-membership violation.
///
/// `u` is the projection of `y` exactly when `cone_violation` is zero,
/// `residual_inner` (the inner product of the residual with `u`) is zero,
/// and `max_generator_inner` (the largest inner product of the residual
/// with a cone generator) is nonpositive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCheck {
    pub residual_inner: f64,
    pub max_generator_inner: f64,
    pub cone_violation: f64,
}

impl ProjectionCheck {
    pub fn is_projection(&self, tol: f64) -> bool {
        self.cone_violation <= tol
            && self.residual_inner.abs() <= tol
            && self.max_generator_inner <= tol
    }
}

/// Evaluates the projection characterization under unit weights.
///
/// The nondecreasing cone is generated by the all-ones vector, its
/// negation, and the n-1 step vectors that are zero then one; every cone
/// element is a nonnegative combination of these plus a multiple of the
/// all-ones line, so checking the finite generator set suffices. The
/// nonincreasing cone uses the mirrored (one then zero) steps.
pub fn check_projection_characterization(
    y: &[f64],
    u: &[f64],
    direction: Direction,
) -> Result<ProjectionCheck> {
    let ones = vec![1.0; y.len()];
    check_projection_characterization_weighted(y, u, &ones, direction)
}

/// Same characterization in the weighted inner product `<a, b> = sum w a b`,
/// which is the geometry a weighted projection minimizes in. Unit weights
/// recover [`check_projection_characterization`].
pub fn check_projection_characterization_weighted(
    y: &[f64],
    u: &[f64],
    weights: &[f64],
    direction: Direction,
) -> Result<ProjectionCheck> {
    let n = y.len();
    if u.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: u.len(),
        });
    }
    if weights.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: weights.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptySequence);
    }

    let weighted_residual: Vec<f64> = y
        .iter()
        .zip(u)
        .zip(weights)
        .map(|((yi, ui), wi)| wi * (yi - ui))
        .collect();
    let residual_inner: f64 = weighted_residual.iter().zip(u).map(|(r, ui)| r * ui).sum();

    // <r, e> and <r, -e> for the all-ones vector e.
    let total: f64 = weighted_residual.iter().sum();
    let mut max_generator_inner = total.max(-total);
    match direction {
        Direction::Nondecreasing => {
            // Suffix sums: generators are zero up to j, one from j on.
            let mut suffix = 0.0;
            for r in weighted_residual.iter().rev().take(n - 1) {
                suffix += r;
                max_generator_inner = max_generator_inner.max(suffix);
            }
        }
        Direction::Nonincreasing => {
            // Prefix sums: generators are one up to j, zero from j on.
            let mut prefix = 0.0;
            for r in weighted_residual.iter().take(n - 1) {
                prefix += r;
                max_generator_inner = max_generator_inner.max(prefix);
            }
        }
    }

    let mut cone_violation = 0.0f64;
    for pair in u.windows(2) {
        let d = pair[1] - pair[0];
        let v = match direction {
            Direction::Nondecreasing => -d,
            Direction::Nonincreasing => d,
        };
        cone_violation = cone_violation.max(v);
    }

    Ok(ProjectionCheck {
        residual_inner,
        max_generator_inner,
        cone_violation,
    })
}

/// True when every consecutive difference of `v` respects `direction`
/// within `-tol`.
pub fn is_in_cone(v: &[f64], direction: Direction, tol: f64) -> bool {
    v.windows(2).all(|pair| {
        let d = pair[1] - pair[0];
        match direction {
            Direction::Nondecreasing => d >= -tol,
            Direction::Nonincreasing => d <= tol,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(values: &[f64]) -> WeightedSequence {
        WeightedSequence::unweighted(values.to_vec()).unwrap()
    }

    fn wseq(values: &[f64], weights: &[f64]) -> WeightedSequence {
        WeightedSequence::new(values.to_vec(), weights.to_vec()).unwrap()
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn rejects_empty_input() {
        let err = WeightedSequence::unweighted(vec![]).unwrap_err();
        assert!(matches!(err, Error::EmptySequence));
        assert_eq!(err.to_string(), "empty sequence");
    }

    #[test]
    fn rejects_non_finite_values_and_bad_weights() {
        let err = WeightedSequence::unweighted(vec![1.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().starts_with("invalid sample"));
        let err = WeightedSequence::new(vec![1.0, 2.0], vec![1.0, 0.0]).unwrap_err();
        assert!(err.to_string().starts_with("invalid sample"));
        let err = WeightedSequence::new(vec![1.0, 2.0], vec![1.0, -3.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidSample(_)));
    }

    #[test]
    fn isotone_identity_on_sorted_input() {
        let fit = project_isotone(&seq(&[1.0, 2.0, 3.0]));
        assert_eq!(
            fit.blocks(),
            &[
                Block { start: 0, len: 1, value: 1.0 },
                Block { start: 1, len: 1, value: 2.0 },
                Block { start: 2, len: 1, value: 3.0 },
            ]
        );
        assert_eq!(fit.expand(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn isotone_pools_a_violating_pair() {
        let fit = project_isotone(&seq(&[2.0, 1.0]));
        assert_eq!(fit.blocks(), &[Block { start: 0, len: 2, value: 1.5 }]);
    }

    #[test]
    fn isotone_three_point_example() {
        // Expected vector confirmed by the exhaustive oracle below.
        let s = seq(&[1.0, 3.0, 2.0]);
        let fit = project_isotone(&s);
        assert_eq!(fit.expand(), vec![1.0, 2.5, 2.5]);
        let oracle = brute_force_projection(&s, Direction::Nondecreasing).unwrap();
        assert_close(&fit.expand(), &oracle, 1e-9);
    }

    #[test]
    fn isotone_weighted_pooling() {
        let s = wseq(&[2.0, 0.0], &[1.0, 3.0]);
        let fit = project_isotone(&s);
        assert_eq!(fit.expand(), vec![0.5, 0.5]);
        let oracle = brute_force_projection(&s, Direction::Nondecreasing).unwrap();
        assert_close(&fit.expand(), &oracle, 1e-9);
    }

    #[test]
    fn antitone_identity_on_reverse_sorted_input() {
        let fit = project_antitone(&seq(&[3.0, 2.0, 1.0]));
        assert_eq!(fit.expand(), vec![3.0, 2.0, 1.0]);
        assert_eq!(fit.direction(), Direction::Nonincreasing);
    }

    #[test]
    fn antitone_three_point_example() {
        let s = seq(&[1.0, 3.0, 2.0]);
        let fit = project_antitone(&s);
        assert_eq!(fit.expand(), vec![2.0, 2.0, 2.0]);
        let oracle = brute_force_projection(&s, Direction::Nonincreasing).unwrap();
        assert_close(&fit.expand(), &oracle, 1e-9);
    }

    #[test]
    fn antitone_mixed_sign_example() {
        let s = seq(&[0.0, 0.5, -0.5]);
        let fit = project_antitone(&s);
        assert_eq!(fit.expand(), vec![0.25, 0.25, -0.5]);
        let oracle = brute_force_projection(&s, Direction::Nonincreasing).unwrap();
        assert_close(&fit.expand(), &oracle, 1e-9);
    }

    #[test]
    fn oracle_matches_hand_computed_cases() {
        let got = brute_force_projection(&seq(&[3.0, 1.0, 2.0]), Direction::Nondecreasing).unwrap();
        assert_close(&got, &[2.0, 2.0, 2.0], 1e-12);
        let got = brute_force_projection(&seq(&[1.0, 2.0]), Direction::Nondecreasing).unwrap();
        assert_close(&got, &[1.0, 2.0], 1e-12);
        let got = brute_force_projection(&seq(&[2.0, 1.0]), Direction::Nondecreasing).unwrap();
        assert_close(&got, &[1.5, 1.5], 1e-12);
    }

    #[test]
    fn oracle_rejects_large_inputs() {
        let s = seq(&[0.0; ORACLE_MAX_LEN + 1]);
        let err = brute_force_projection(&s, Direction::Nondecreasing).unwrap_err();
        assert!(err.to_string().starts_with("oracle size limit"));
    }

    #[test]
    fn characterization_accepts_true_projections() {
        let check = check_projection_characterization(
            &[1.0, 3.0, 2.0],
            &[1.0, 2.5, 2.5],
            Direction::Nondecreasing,
        )
        .unwrap();
        assert!(check.residual_inner.abs() <= 1e-12);
        assert!(check.max_generator_inner <= 1e-12);
        assert!(check.max_generator_inner >= -1e-12 || check.max_generator_inner <= 0.0);
        assert!(check.is_projection(1e-12));

        let check = check_projection_characterization(
            &[1.0, 2.0],
            &[1.0, 2.0],
            Direction::Nondecreasing,
        )
        .unwrap();
        assert_eq!(check.residual_inner, 0.0);
        assert_eq!(check.max_generator_inner, 0.0);
        assert!(check.is_projection(1e-12));
    }

    #[test]
    fn characterization_rejects_vector_outside_cone() {
        // Zero residual, but the claimed projection is not nondecreasing.
        let check = check_projection_characterization(
            &[2.0, 1.0],
            &[2.0, 1.0],
            Direction::Nondecreasing,
        )
        .unwrap();
        assert!(check.cone_violation > 0.0);
        assert!(!check.is_projection(1e-12));
    }

    #[test]
    fn characterization_rejects_length_mismatch() {
        let err = check_projection_characterization(&[1.0, 2.0], &[1.0], Direction::Nondecreasing)
            .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn cone_membership_predicate() {
        assert!(is_in_cone(&[1.0, 1.0, 2.0], Direction::Nondecreasing, 0.0));
        assert!(is_in_cone(
            &[1.0, 1.0 - 1e-12, 2.0],
            Direction::Nondecreasing,
            1e-10
        ));
        assert!(!is_in_cone(&[2.0, 1.0], Direction::Nondecreasing, 0.0));
        assert!(is_in_cone(&[2.0, 1.0], Direction::Nonincreasing, 0.0));
        assert!(is_in_cone(&[5.0], Direction::Nondecreasing, 0.0));
    }

    #[test]
    fn single_point_projects_to_itself() {
        let fit = project_isotone(&seq(&[4.25]));
        assert_eq!(fit.blocks(), &[Block { start: 0, len: 1, value: 4.25 }]);
    }

    #[test]
    fn idempotence_is_exact() {
        let s = wseq(&[3.0, 1.0, 2.0, -1.0, 0.5], &[1.0, 2.5, 0.5, 1.25, 3.0]);
        let once = project_isotone(&s);
        let again = project_isotone(
            &WeightedSequence::new(once.expand(), s.weights().to_vec()).unwrap(),
        );
        assert_eq!(once, again);
    }

    #[test]
    fn mean_preservation_weighted() {
        let s = wseq(&[2.0, -1.0, 4.0, 0.0], &[0.5, 2.0, 1.5, 3.0]);
        let fit = project_isotone(&s);
        let out = WeightedSequence::new(fit.expand(), s.weights().to_vec()).unwrap();
        let tol = 1e-12 * (1.0 + s.weighted_mean().abs());
        assert!((out.weighted_mean() - s.weighted_mean()).abs() <= tol);
    }

    #[test]
    fn cluster_boundary_last_raw_value_below_block_value() {
        // Unit weights: within each block the last raw value never exceeds
        // the pooled value.
        let values = [4.0, 1.0, 3.0, 0.0, 2.0, 2.0, -1.0, 5.0];
        let fit = project_isotone(&seq(&values));
        for b in fit.blocks() {
            let last = values[b.start + b.len - 1];
            assert!(last <= b.value + 1e-12, "block {b:?} last raw {last}");
        }
    }
}
