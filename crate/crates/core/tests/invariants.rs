//! Cross-module invariants: equivalence of the two iteration schedules,
//! identifiability of every iterate, convergence toward the
//! minimum-variation split, tie-merge consistency, and stopping-rule
//! behavior on simulated data. The cli crate's `acceptance` suite re-runs
//! the same statements at full scale.

use iteriso::{
    brute_force_projection, check_projection_characterization_weighted, delta, generate, hadamard,
    is_in_cone, jordan_decompose, jordan_decompose_weighted, run, select_k,
    translated_cone_projection_weighted, Algorithm, Criterion, Direction, FitRun, Grid, SampleRow,
    SignalKind, SignalSpec, SortedSample, StoppingPolicy, TiePolicy, WeightedSequence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_sample(y: &[f64]) -> SortedSample {
    let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
    SortedSample::new(x, y.to_vec()).unwrap()
}

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn both_schedules_accumulate_to_the_same_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..40 {
        let n = rng.random_range(2..=30);
        let sample = unit_sample(&random_values(&mut rng, n));
        let policy = StoppingPolicy::fixed_k(20).unwrap();
        let a = run(&sample, Algorithm::Iir, &policy).unwrap();
        let b = run(&sample, Algorithm::Iibr, &policy).unwrap();
        assert_eq!(a.trace.iterations(), b.trace.iterations());
        for (sa, sb) in a.trace.states().iter().zip(b.trace.states()) {
            assert!(max_abs_diff(sa.u_hat().unwrap(), sb.u_hat().unwrap()) <= 1e-8);
            assert!(max_abs_diff(sa.b_hat().unwrap(), sb.b_hat().unwrap()) <= 1e-8);
        }
    }
}

#[test]
fn every_iterate_is_identifiable_and_on_the_translated_cone() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for trial in 0..30 {
        let n = rng.random_range(2..=20);
        // Every third trial exercises a tie-merged (hence weighted) sample.
        let sample = if trial % 3 == 0 {
            let rows: Vec<SampleRow> = (0..n)
                .map(|i| SampleRow {
                    x: (i / 2) as f64,
                    y: rng.random_range(-10.0..10.0),
                    w: 1.0,
                })
                .collect();
            SortedSample::from_rows(rows, TiePolicy::MergeMean).unwrap()
        } else {
            unit_sample(&random_values(&mut rng, n))
        };
        let y = sample.y();
        let w = sample.w();
        let y_inf = inf_norm(y);
        let wsum: f64 = w.iter().sum();
        let wmean = |v: &[f64]| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
        let y_mean = wmean(y);

        let fit = run(&sample, Algorithm::Iir, &StoppingPolicy::fixed_k(15).unwrap()).unwrap();
        let mean_tol = 1e-10 * (1.0 + y_mean.abs());
        let singular_tol = 1e-9 * (1.0 + y_inf * y_inf);
        for state in fit.trace.states() {
            let u = state.u_hat().unwrap();
            let b = state.b_hat().unwrap();
            assert!(is_in_cone(u, Direction::Nondecreasing, 0.0));
            assert!(is_in_cone(b, Direction::Nonincreasing, 0.0));
            assert!((wmean(u) - y_mean).abs() <= mean_tol);
            assert!(wmean(b).abs() <= mean_tol);
            if u.len() >= 2 {
                let prod = hadamard(&delta(u).unwrap(), &delta(b).unwrap()).unwrap();
                assert!(prod.iter().all(|p| p.abs() <= singular_tol));
            }
            // y - b_hat is the projection of u_hat onto the cone through y.
            let lhs: Vec<f64> = y.iter().zip(b).map(|(yi, bi)| yi - bi).collect();
            let rhs = translated_cone_projection_weighted(y, u, w).unwrap();
            assert!(max_abs_diff(&lhs, &rhs) <= 1e-10 * (1.0 + y_inf));
        }
    }
}

#[test]
fn consecutive_component_differences_stay_in_their_cones() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..25 {
        let n = rng.random_range(2..=25);
        let sample = unit_sample(&random_values(&mut rng, n));
        let fit = run(&sample, Algorithm::Iir, &StoppingPolicy::fixed_k(12).unwrap()).unwrap();
        for pair in fit.trace.states().windows(2) {
            let du: Vec<f64> = pair[1]
                .u_hat()
                .unwrap()
                .iter()
                .zip(pair[0].u_hat().unwrap())
                .map(|(a, b)| a - b)
                .collect();
            let db: Vec<f64> = pair[1]
                .b_hat()
                .unwrap()
                .iter()
                .zip(pair[0].b_hat().unwrap())
                .map(|(a, b)| a - b)
                .collect();
            assert!(is_in_cone(&du, Direction::Nondecreasing, 1e-10));
            assert!(is_in_cone(&db, Direction::Nonincreasing, 1e-10));
        }
    }
}

#[test]
fn iterates_converge_to_the_minimum_variation_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..15 {
        let n = rng.random_range(2..=15);
        let sample = unit_sample(&random_values(&mut rng, n));
        let policy = StoppingPolicy::residual_tol(1e-6, 100_000).unwrap();
        let fit = run(&sample, Algorithm::Iir, &policy).unwrap();
        let last = fit.trace.final_state();
        let resid = max_abs_diff(sample.y(), last.y_hat().unwrap());
        assert!(resid <= 1e-6, "did not converge: {resid}");

        let mut prev = f64::INFINITY;
        for state in fit.trace.states() {
            assert!(state.rss() <= prev);
            prev = state.rss();
        }

        let limit = jordan_decompose(sample.y()).unwrap();
        assert!(max_abs_diff(last.u_hat().unwrap(), limit.increasing()) <= 1e-4);
        assert!(max_abs_diff(last.b_hat().unwrap(), limit.decreasing()) <= 1e-4);
    }
}

#[test]
fn weighted_fit_converges_to_the_weighted_split() {
    // Duplicate abscissas merge into weights; the limit preserves the
    // weighted mean, so it is the weighted variant of the decomposition.
    let rows = vec![
        SampleRow { x: 0.0, y: 1.0, w: 1.0 },
        SampleRow { x: 0.0, y: 2.0, w: 1.0 },
        SampleRow { x: 1.0, y: 5.0, w: 1.0 },
        SampleRow { x: 2.0, y: 0.5, w: 1.0 },
        SampleRow { x: 2.0, y: 1.5, w: 1.0 },
        SampleRow { x: 3.0, y: 3.0, w: 1.0 },
    ];
    let sample = SortedSample::from_rows(rows, TiePolicy::MergeMean).unwrap();
    let policy = StoppingPolicy::residual_tol(1e-8, 100_000).unwrap();
    let fit = run(&sample, Algorithm::Iir, &policy).unwrap();
    let last = fit.trace.final_state();
    let limit = jordan_decompose_weighted(sample.y(), sample.w()).unwrap();
    assert!(max_abs_diff(last.u_hat().unwrap(), limit.increasing()) <= 1e-4);
    assert!(max_abs_diff(last.b_hat().unwrap(), limit.decreasing()) <= 1e-4);
}

#[test]
fn merged_weighted_projection_matches_expanded_data() {
    // Expanding each merged point into w copies of its mean and projecting
    // the expanded vector (via the exhaustive oracle) reproduces the
    // weighted projection at the distinct abscissas.
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..50 {
        let groups = rng.random_range(2..=4usize);
        let mut rows = Vec::new();
        for g in 0..groups {
            let copies = rng.random_range(1..=2usize);
            for _ in 0..copies {
                rows.push(SampleRow {
                    x: g as f64,
                    y: rng.random_range(-5.0..5.0),
                    w: 1.0,
                });
            }
        }
        if rows.len() > 7 {
            continue;
        }
        let sample = SortedSample::from_rows(rows, TiePolicy::MergeMean).unwrap();
        let merged = WeightedSequence::new(sample.y().to_vec(), sample.w().to_vec()).unwrap();

        let mut expanded = Vec::new();
        for (yi, wi) in sample.y().iter().zip(sample.w()) {
            for _ in 0..(*wi as usize) {
                expanded.push(*yi);
            }
        }
        let expanded_seq = WeightedSequence::unweighted(expanded).unwrap();

        for direction in [Direction::Nondecreasing, Direction::Nonincreasing] {
            let merged_fit = match direction {
                Direction::Nondecreasing => iteriso::project_isotone(&merged),
                Direction::Nonincreasing => iteriso::project_antitone(&merged),
            }
            .expand();
            let expanded_fit = brute_force_projection(&expanded_seq, direction).unwrap();
            let mut pos = 0;
            for (i, wi) in sample.w().iter().enumerate() {
                for _ in 0..(*wi as usize) {
                    assert!(
                        (expanded_fit[pos] - merged_fit[i]).abs() <= 1e-9,
                        "expanded {expanded_fit:?} merged {merged_fit:?}"
                    );
                    pos += 1;
                }
            }
        }
    }
}

#[test]
fn weighted_projection_passes_weighted_characterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..100 {
        let n = rng.random_range(1..=12usize);
        let values = random_values(&mut rng, n);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..5.0)).collect();
        let s = WeightedSequence::new(values, weights).unwrap();
        let tol = 1e-10 * (1.0 + inf_norm(s.values()));
        for direction in [Direction::Nondecreasing, Direction::Nonincreasing] {
            let fit = match direction {
                Direction::Nondecreasing => iteriso::project_isotone(&s),
                Direction::Nonincreasing => iteriso::project_antitone(&s),
            };
            let check = check_projection_characterization_weighted(
                s.values(),
                &fit.expand(),
                s.weights(),
                direction,
            )
            .unwrap();
            assert!(check.is_projection(tol), "{check:?}");
        }
    }
}

#[test]
fn monotone_sample_selects_the_first_iteration() {
    let sample = unit_sample(&[0.0, 1.0, 1.5, 4.0, 4.0, 6.0]);
    let policy = StoppingPolicy::criterion(Criterion::Aicc, Grid::through(50).unwrap()).unwrap();
    let fit = run(&sample, Algorithm::Iir, &policy).unwrap();
    // rss hits zero at k = 1 and the run fixed-points immediately, so the
    // grid collapses onto the exact fit.
    let report = fit.report.as_ref().unwrap();
    assert_eq!(report.chosen_k(), 1);
    assert_eq!(fit.trace.state(1).unwrap().rss(), 0.0);
    assert!(fit.trace.state(1).unwrap().level_sets() < sample.len());
}

#[test]
fn singleton_grid_selects_its_only_entry() {
    let sample = unit_sample(&[1.0, 3.0, 2.0, 5.0, 4.0, 0.0, 6.0, 5.5]);
    let fit = run(&sample, Algorithm::Iir, &StoppingPolicy::fixed_k(10).unwrap()).unwrap();
    let report = select_k(&fit.trace, Criterion::Aic, &Grid::new(3, 3, 1).unwrap()).unwrap();
    assert_eq!(report.chosen_k(), 3);
    assert_eq!(report.entries().len(), 1);
}

#[test]
fn selection_is_invariant_under_positive_rescaling() {
    let spec = SignalSpec {
        kind: SignalKind::PiecewiseConstant,
        breakpoints: vec![0.3, 0.7],
        coefficients: vec![0.0, 1.0, 0.0],
        noise_sd: 0.3,
        n: 60,
        seed: 7,
    };
    let (sample, _) = generate(&spec).unwrap();
    let scaled = SortedSample::new(
        sample.x().to_vec(),
        sample.y().iter().map(|v| v * 3.5).collect(),
    )
    .unwrap();
    let policy = StoppingPolicy::criterion(Criterion::Aicc, Grid::through(40).unwrap()).unwrap();
    let base = run(&sample, Algorithm::Iir, &policy).unwrap();
    let resc = run(&scaled, Algorithm::Iir, &policy).unwrap();
    assert_eq!(
        base.report.unwrap().chosen_k(),
        resc.report.unwrap().chosen_k()
    );
}

#[test]
fn criterion_choice_beats_overfitting_on_noisy_steps() {
    let mut wins = 0;
    let seeds = 20;
    for seed in 0..seeds {
        let spec = SignalSpec {
            kind: SignalKind::PiecewiseConstant,
            breakpoints: vec![0.3, 0.7],
            coefficients: vec![0.0, 1.0, 0.0],
            noise_sd: 0.3,
            n: 100,
            seed,
        };
        let rows = iteriso::experiment_mse(&spec, Algorithm::Iir, 50).unwrap();
        let (sample, _) = generate(&spec).unwrap();
        let policy =
            StoppingPolicy::criterion(Criterion::Aicc, Grid::through(50).unwrap()).unwrap();
        let FitRun { trace, report } = run(&sample, Algorithm::Iir, &policy).unwrap();
        let chosen = report.unwrap().chosen_k();
        assert!(trace.state(chosen).unwrap().level_sets() < sample.len());
        if chosen > 1 {
            assert!(trace.state(chosen).unwrap().rss() < trace.state(1).unwrap().rss());
        }
        let mse_at = |k: usize| rows.iter().find(|r| r.k == k).unwrap().mse_truth;
        if mse_at(chosen) <= mse_at(rows.last().unwrap().k) {
            wins += 1;
        }
    }
    assert!(wins * 5 >= seeds * 4, "only {wins}/{seeds} seeds improved");
}
