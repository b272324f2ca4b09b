//! Iterative isotonic regression for univariate functions of bounded
//! variation.
//!
//! The estimator alternates least-squares projections onto the cones of
//! nondecreasing and nonincreasing vectors (weighted pool-adjacent-violators
//! underneath), producing at each iteration a piecewise-constant fit
//! `y_hat = u_hat + b_hat` split into a rising and a falling component.
//! Iterating forever interpolates the data, so the crate also ships the
//! exact limit of the split (the minimum-variation decomposition) and
//! information-criterion stopping rules (aic, bic, aicc, gcv) that pick a
//! sensible iteration count instead.
//!
//! Modules follow the pipeline: [`projection`] for the cone projections and
//! their verification predicates, [`variation`] for the difference/total-
//! variation toolkit and the limit decomposition, [`fit`] for the iteration
//! engines, [`selection`] for the stopping rules, [`io`] for CSV/JSON
//! ingestion and serialization, and [`simulate`] for seed-deterministic
//! test signals.

pub mod error;
pub mod fit;
pub mod io;
pub mod projection;
pub mod selection;
pub mod simulate;
pub mod variation;

pub use error::{Error, Result};
pub use fit::{
    iibr_step, iir_step, run, run_with_retention, translated_cone_projection,
    translated_cone_projection_weighted, Algorithm, FitRun, FitTrace, IterationState,
    StateVectors, StoppingPolicy, StoppingRule, DEFAULT_VECTOR_RETENTION,
};
pub use io::{
    format_f64, load_sample, write_experiment, write_fit, write_sample, write_trace,
    write_trace_tidy, Provenance, SampleRow, SortedSample, TiePolicy,
};
pub use projection::{
    brute_force_projection, check_projection_characterization,
    check_projection_characterization_weighted, is_in_cone, project_antitone, project_isotone,
    Block, Direction, MonotoneFit, ProjectionCheck, WeightedSequence, ORACLE_MAX_LEN,
};
pub use selection::{
    criterion_value, level_set_count, phi, select_k, Criterion, EntryStatus, Grid, GridEntry,
    SelectionReport,
};
pub use simulate::{experiment_mse, generate, ExperimentRow, SignalKind, SignalSpec};
pub use variation::{
    delta, hadamard, jordan_decompose, jordan_decompose_weighted, singular_variations,
    total_variation, DecompositionPair,
};
