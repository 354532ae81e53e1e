mod common;

use common::{lg, max_abs, mean_and_se, observations};
use wrs_smc::models::{LinearGaussianParams, Tobit, TobitParams};
use wrs_smc::oracle::{
    kalman_smoother, ks_critical_value, ks_statistic, mean_z_scores, windowed_marginals, Reference,
};
use wrs_smc::rejection::{full_trajectory_rejection, DEFAULT_MAX_ATTEMPTS};
use wrs_smc::wrs::{calibrate_window, window_count, wrs_block_step, wrs_run, CalibrationSettings};
use wrs_smc::{Coordinate, EnsembleKind, Error, RngStream};

#[test]
fn block_step_matches_the_windowed_kalman_conditional() {
    let model = lg();
    let x_prev = 1.5;
    let y_window = [2.0, -1.0, 3.0];
    let pinned = LinearGaussianParams {
        mu0: x_prev,
        sigma0: 1e-9,
        ..LinearGaussianParams::default()
    };
    let exact = kalman_smoother(&pinned, &y_window);
    let replicates = 100_000;
    let mut rng = RngStream::new(17, 0);
    let blocks: Vec<Vec<f64>> = (0..replicates)
        .map(|_| {
            wrs_block_step(&model, 4, x_prev, &y_window, &mut rng, DEFAULT_MAX_ATTEMPTS)
                .unwrap()
                .draw
        })
        .collect();
    for k in 0..3 {
        let xs: Vec<f64> = blocks.iter().map(|b| b[k]).collect();
        let (mean, se) = mean_and_se(&xs);
        let z = (mean - exact.means[k + 1]) / se;
        assert!(z.abs() < 3.0, "block coordinate {k}: z = {z}");
    }
}

#[test]
fn block_step_is_deterministic_per_stream() {
    let model = lg();
    let draw = || {
        let mut rng = RngStream::new(9, 3);
        wrs_block_step(&model, 2, 0.5, &[1.0, 2.0], &mut rng, 1_000).unwrap()
    };
    let (a, b) = (draw(), draw());
    assert_eq!(a.draw, b.draw);
    assert_eq!(a.attempts, b.attempts);
}

#[test]
fn maximal_window_reproduces_full_rejection_in_distribution() {
    let model = lg();
    let y = observations(&model, 4, 6);
    let wrs = wrs_run(&model, &y, 5, 10_000, 1, DEFAULT_MAX_ATTEMPTS).unwrap();
    let exact = full_trajectory_rejection(&model, &y, 10_000, 2, DEFAULT_MAX_ATTEMPTS).unwrap();
    let critical = ks_critical_value(0.01, 10_000, 10_000);
    for i in 0..=4 {
        let d = ks_statistic(
            &wrs.ensemble.marginal(i).unwrap(),
            &exact.ensemble.marginal(i).unwrap(),
        )
        .unwrap();
        assert!(d < critical, "index {i}: KS {d} >= {critical}");
    }
}

#[test]
fn sampler_output_matches_its_exact_windowed_marginals() {
    let model = lg();
    let p = LinearGaussianParams::default();
    let y = observations(&model, 10, 4);
    for w in [1, 2, 3, 5] {
        let run = wrs_run(&model, &y, w, 50_000, 30 + w as u64, DEFAULT_MAX_ATTEMPTS).unwrap();
        let oracle = windowed_marginals(&p, &y, w).unwrap();
        let z = mean_z_scores(&run.ensemble, Reference::Exact(&oracle)).unwrap();
        assert!(max_abs(&z) < 3.5, "w = {w}: z-scores {z:?}");
        for i in 0..=10 {
            let ratio = run.ensemble.marginal_variance(i).unwrap() / oracle.variances[i];
            assert!(
                (ratio - 1.0).abs() < 0.03,
                "w = {w}, index {i}: variance ratio {ratio}"
            );
        }
    }
}

#[test]
fn unit_window_leaves_the_initial_state_at_its_prior() {
    let p = LinearGaussianParams::default();
    let run = wrs_run(&lg(), &[6.0], 1, 50_000, 3, DEFAULT_MAX_ATTEMPTS).unwrap();
    let (mean, _) = mean_and_se(&run.ensemble.marginal(0).unwrap());
    assert!((mean - p.mu0).abs() < 3.0 * p.sigma0 / (50_000f64).sqrt());
}

#[test]
fn output_is_iid_and_fully_distinct() {
    let model = lg();
    for (n, w) in [(12, 1), (12, 3), (12, 6), (3, 4), (3, 9)] {
        let y = observations(&model, n, 8);
        let run = wrs_run(&model, &y, w, 1_000, 2, DEFAULT_MAX_ATTEMPTS).unwrap();
        assert_eq!(run.ensemble.kind(), EnsembleKind::Iid);
        assert!(run.ensemble.is_uniform());
        assert_eq!(
            run.ensemble.distinct_fraction(Coordinate::All).unwrap(),
            1.0
        );
        assert_eq!(run.mean_attempts.len(), window_count(n, w));
    }
}

#[test]
fn attempts_per_window_do_not_drift_with_time() {
    // Constant observations make every window statistically alike, so any
    // spread in attempt counts would come from the sampler itself.
    let y = vec![1.0; 100];
    let run = wrs_run(&lg(), &y, 3, 2_000, 5, DEFAULT_MAX_ATTEMPTS).unwrap();
    let lo = run
        .mean_attempts
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = run.mean_attempts.iter().copied().fold(0.0, f64::max);
    assert!(hi / lo <= 10.0, "attempts range {lo}..{hi}");
}

#[test]
fn failures_name_the_window() {
    let model = lg();
    let mut y = vec![0.5; 8];
    y[4] = 300.0; // y_5: first covered by window m = 3 when w = 3
    match wrs_run(&model, &y, 3, 4, 0, 1_000) {
        Err(Error::Window { m, source }) => {
            assert_eq!(m, 3);
            assert!(matches!(
                *source,
                Error::AcceptanceTooRare { attempts: 1_000 }
            ));
        }
        other => panic!("expected a window error, got {other:?}"),
    }
}

#[test]
fn calibration_stops_once_the_window_covers_the_chain() {
    let model = Tobit::new(TobitParams::default()).unwrap();
    let y = observations(&model, 3, 1);
    let reference = full_trajectory_rejection(&model, &y, 5_000, 77, DEFAULT_MAX_ATTEMPTS).unwrap();
    let settings = CalibrationSettings {
        n_particles: 5_000,
        w_max: 4,
        seed: 3,
        max_attempts: 1_000_000,
        z_bound: 2.0,
    };
    let plan = calibrate_window(&model, &y, &reference.ensemble, &settings).unwrap();
    assert!(plan.w <= 4);
    let table = plan.calibration.unwrap();
    assert_eq!(table.candidates.len(), plan.w);
    assert!(max_abs(&table.candidates.last().unwrap().z_scores) <= 2.0);
}

#[test]
fn exhausted_calibration_reports_the_worst_index() {
    let model = lg();
    let y = observations(&model, 10, 0);
    let reference = wrs_run(&model, &y, 6, 20_000, 1, DEFAULT_MAX_ATTEMPTS).unwrap();
    let settings = CalibrationSettings {
        n_particles: 20_000,
        w_max: 1,
        ..CalibrationSettings::default()
    };
    match calibrate_window(&model, &y, &reference.ensemble, &settings) {
        Err(Error::CalibrationExhausted { w_max, index, z }) => {
            assert_eq!(w_max, 1);
            assert!(index <= 10);
            assert!(z.abs() > 2.0);
        }
        other => panic!("expected exhaustion, got {other:?}"),
    }
}

#[test]
fn infeasible_window_lengths_are_skipped() {
    let model = Tobit::new(TobitParams::default()).unwrap();
    let y = [3.0, 3.0];
    let reference = full_trajectory_rejection(&model, &y, 500, 1, DEFAULT_MAX_ATTEMPTS).unwrap();
    let settings = CalibrationSettings {
        n_particles: 500,
        w_max: 3,
        max_attempts: 1_000,
        ..CalibrationSettings::default()
    };
    let plan = calibrate_window(&model, &y, &reference.ensemble, &settings).unwrap();
    let table = plan.calibration.unwrap();
    assert!(table.candidates[0].infeasible.is_some());
    assert!(table.candidates[0].z_scores.iter().all(|z| z.is_infinite()));
    assert!(table.candidates.last().unwrap().infeasible.is_none());
}

#[test]
fn exact_window_bias_settles_within_five_steps_on_lg() {
    // Deterministic counterpart of calibrating at N = 1e5: the smallest w
    // whose exact bias stays inside two standard errors everywhere.
    let p = LinearGaussianParams::default();
    let model = lg();
    for seed in 0..10 {
        let y = observations(&model, 10, seed);
        let exact = kalman_smoother(&p, &y);
        let w = (1..=11)
            .find(|&w| {
                let g = windowed_marginals(&p, &y, w).unwrap();
                (0..=10).all(|i| {
                    (g.means[i] - exact.means[i]).abs() <= 2.0 * (g.variances[i] / 1e5).sqrt()
                })
            })
            .unwrap();
        assert!(w <= 5, "dataset {seed}: w = {w}");
    }
}
