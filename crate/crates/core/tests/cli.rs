use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrs-smc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&[
            "run",
            "--model",
            "lg",
            "--algo",
            "full-rejection",
            "--n",
            "3",
            "--N",
            "1000",
            "--seed",
            "7",
            "--hist",
            "0,3",
            "--out",
            path(out),
        ]);
    }
    for file in [
        "report.csv",
        "histogram_0.csv",
        "histogram_3.csv",
        "meta.txt",
        "data.txt",
        "attempts.csv",
    ] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }
    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    assert!(report.starts_with("index,mean,variance,distinct_fraction\n"));
    assert_eq!(report.lines().count(), 5);
}

#[test]
fn missing_window_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "run",
        "--model",
        "lg",
        "--algo",
        "wrs",
        "--n",
        "3",
        "--N",
        "10",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('w'));
}

#[test]
fn unknown_keys_and_bad_values_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    for (args, field) in [
        (
            vec![
                "run", "--model", "lg", "--algo", "sir", "--n", "3", "--N", "10", "--out", d,
                "--speed", "3",
            ],
            "speed",
        ),
        (
            vec![
                "run", "--model", "lg", "--algo", "sir", "--n", "x", "--N", "10", "--out", d,
            ],
            "`n`",
        ),
        (
            vec![
                "run", "--model", "tobit", "--algo", "sir", "--n", "3", "--N", "10", "--out", d,
                "--phi", "1.2",
            ],
            "phi",
        ),
    ] {
        let out = cli(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let msg = String::from_utf8_lossy(&out.stderr);
        assert!(msg.contains(field), "{args:?}: {msg}");
    }
}

#[test]
fn sampler_errors_exit_with_code_three_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("y.txt");
    fs::write(&data, "0.5\n0\n1.5\n").unwrap();
    let out = cli(&[
        "run",
        "--model",
        "sv",
        "--algo",
        "wrs",
        "--w",
        "2",
        "--N",
        "10",
        "--data",
        path(&data),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measurement bound infinite at y=0"));
}

#[test]
fn config_file_supplies_defaults_that_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(
        &cfg,
        "# lg smoke run\nmodel = lg\nalgo = sir\nn = 4\nN = 200\npolicy = always\nseed = 3\n",
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    run_ok(&[
        "run",
        "--config",
        path(&cfg),
        "--N",
        "300",
        "--out",
        path(&out_dir),
    ]);
    let meta = fs::read_to_string(out_dir.join("meta.txt")).unwrap();
    assert!(meta.contains("N = 300\n"));
    assert!(meta.contains("policy = always\n"));
    let ess = fs::read_to_string(out_dir.join("ess.csv")).unwrap();
    assert_eq!(ess.lines().count(), 5);
    assert!(ess.lines().skip(1).all(|l| l.ends_with(",1")));
}

#[test]
fn report_compared_with_itself_has_zero_z() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    run_ok(&[
        "run",
        "--model",
        "tobit",
        "--algo",
        "wrs",
        "--w",
        "3",
        "--n",
        "5",
        "--N",
        "500",
        "--out",
        path(&a),
    ]);
    let out = cli(&["compare", path(&a), path(&a)]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("index,mean_a,mean_b,standard_error,z\n"));
    for line in csv.lines().skip(1) {
        assert_eq!(
            line.rsplit(',').next().unwrap().parse::<f64>().unwrap(),
            0.0
        );
    }
}

#[test]
fn wrong_model_parameters_fail_the_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&[
        "run",
        "--model",
        "lg",
        "--algo",
        "wrs",
        "--w",
        "4",
        "--n",
        "3",
        "--N",
        "5000",
        "--out",
        path(&a),
    ]);
    let data = a.join("data.txt");
    run_ok(&[
        "run",
        "--model",
        "lg",
        "--algo",
        "wrs",
        "--w",
        "4",
        "--N",
        "5000",
        "--seed",
        "1",
        "--mu0",
        "-8",
        "--sigma-y",
        "0.5",
        "--data",
        path(&data),
        "--out",
        path(&b),
    ]);
    assert_eq!(cli(&["compare", path(&a), path(&b)]).status.code(), Some(1));
    assert_eq!(
        cli(&["compare", path(&a), "--oracle"]).status.code(),
        Some(0)
    );
    assert_eq!(
        cli(&["compare", path(&b), "--oracle"]).status.code(),
        Some(0)
    );
}

#[test]
fn mismatched_reports_and_foreign_oracles_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&[
        "run",
        "--model",
        "nl",
        "--algo",
        "sis",
        "--n",
        "3",
        "--N",
        "100",
        "--out",
        path(&a),
    ]);
    run_ok(&[
        "run",
        "--model",
        "nl",
        "--algo",
        "sis",
        "--n",
        "4",
        "--N",
        "100",
        "--out",
        path(&b),
    ]);
    assert_eq!(cli(&["compare", path(&a), path(&b)]).status.code(), Some(2));
    assert_eq!(
        cli(&["compare", path(&a), "--oracle"]).status.code(),
        Some(2)
    );
}

#[test]
fn maximal_window_and_full_rejection_agree_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut passes = 0;
    for seed in 0..100u64 {
        let s = seed.to_string();
        let other = (seed + 1_000).to_string();
        let (a, b) = (
            dir.path().join(format!("w{seed}")),
            dir.path().join(format!("f{seed}")),
        );
        let common = [
            "--model",
            "lg",
            "--n",
            "3",
            "--N",
            "10000",
            "--data-seed",
            "5",
        ];
        run_ok(
            &[
                &[
                    "run",
                    "--algo",
                    "wrs",
                    "--w",
                    "4",
                    "--seed",
                    &s,
                    "--out",
                    path(&a),
                ],
                &common[..],
            ]
            .concat(),
        );
        run_ok(
            &[
                &[
                    "run",
                    "--algo",
                    "full-rejection",
                    "--seed",
                    &other,
                    "--out",
                    path(&b),
                ],
                &common[..],
            ]
            .concat(),
        );
        let out = cli(&["compare", path(&a), path(&b)]);
        if out.status.code() == Some(0) {
            passes += 1;
        }
    }
    assert!(passes >= 95, "{passes}/100 comparisons passed");
}

#[test]
fn calibrate_writes_plan_table_and_attempts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal");
    run_ok(&[
        "calibrate",
        "--model",
        "tobit",
        "--n",
        "4",
        "--N",
        "2000",
        "--max-attempts",
        "100000",
        "--out",
        path(&out),
    ]);
    let plan = fs::read_to_string(out.join("window_plan.txt")).unwrap();
    let w: usize = plan
        .lines()
        .next()
        .unwrap()
        .trim_start_matches("w = ")
        .parse()
        .unwrap();
    assert!((1..=25).contains(&w));
    let table = fs::read_to_string(out.join("calibration.csv")).unwrap();
    assert!(table.starts_with("w,index,wrs_mean,wrs_sd,reference_mean,z\n"));
    assert!(
        fs::read_to_string(out.join("calibration_attempts.csv"))
            .unwrap()
            .lines()
            .count()
            > 1
    );
    assert!(fs::read_to_string(out.join("meta.txt"))
        .unwrap()
        .contains(&format!("calibrated_w = {w}")));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["1", "3"]
        .iter()
        .map(|t| {
            let out = dir.path().join(format!("t{t}"));
            run_ok(&[
                "run",
                "--model",
                "sv",
                "--algo",
                "wrs",
                "--w",
                "3",
                "--n",
                "6",
                "--N",
                "2000",
                "--threads",
                t,
                "--hist",
                "2",
                "--out",
                path(&out),
            ]);
            out
        })
        .collect();
    for file in [
        "report.csv",
        "histogram_2.csv",
        "meta.txt",
        "attempts.csv",
        "data.txt",
    ] {
        assert_eq!(
            fs::read(runs[0].join(file)).unwrap(),
            fs::read(runs[1].join(file)).unwrap(),
            "{file}"
        );
    }
}
