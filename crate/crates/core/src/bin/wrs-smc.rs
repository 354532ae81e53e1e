use std::path::PathBuf;
use std::process::ExitCode;

use wrs_smc::experiment::{
    compare, parse_flags, resolve_pairs, run, CompareTarget, ExperimentConfig, ExperimentError,
    DEFAULT_COMPARE_BOUND,
};

const USAGE: &str = "\
usage:
  wrs-smc run --model <lg|sv|nl|tobit> --algo <wrs|sir|sis|full-rejection|calibrate> \\
              --n <len> --N <particles> --out <dir> [--w <len>] [--seed <u64>] [--key value ...]
  wrs-smc calibrate --model <name> --n <len> --N <particles> --out <dir> [--w-max 25] [--z-bound 2]
  wrs-smc compare <run_dir_a> (<run_dir_b> | --oracle) [--bound 4] [--out <file.csv>]

Any run key may also come from `--config <file>` holding `key = value` lines.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(args: &[String]) -> Result<u8, ExperimentError> {
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        return Ok(2);
    };
    match command.as_str() {
        "run" | "calibrate" => {
            let (mut pairs, positional) = parse_flags(&args[1..], &[])?;
            if let Some(extra) = positional.first() {
                return Err(unexpected(extra));
            }
            if command == "calibrate" {
                pairs.insert("algo".into(), "calibrate".into());
            }
            let config = ExperimentConfig::from_pairs(&resolve_pairs(pairs)?)?;
            let summary = run(&config)?;
            match (&summary.report, &summary.plan) {
                (_, Some(plan)) => println!("calibrated w = {}", plan.w),
                (Some(report), _) => println!(
                    "{} {} n={} N={}: wrote {} (effective size {:.1}, {:.3}s)",
                    config.model.name(),
                    config.algorithm.name(),
                    summary.observations.len(),
                    config.n_particles,
                    config.out.display(),
                    report.effective_size,
                    report.wall_clock_seconds
                ),
                _ => {}
            }
            Ok(0)
        }
        "compare" => {
            let (pairs, positional) = parse_flags(&args[1..], &["oracle"])?;
            let oracle = pairs.contains_key("oracle");
            let target = match (positional.as_slice(), oracle) {
                ([_], true) => CompareTarget::Oracle,
                ([_, b], false) => CompareTarget::Run(PathBuf::from(b)),
                _ => {
                    return Err(ExperimentError::Config {
                        field: "compare".into(),
                        message: "expected <run_dir_a> followed by <run_dir_b> or --oracle".into(),
                    })
                }
            };
            if let Some(key) = pairs
                .keys()
                .find(|k| !["oracle", "bound", "out"].contains(&k.as_str()))
            {
                return Err(ExperimentError::Config {
                    field: key.clone(),
                    message: "unknown key for compare".into(),
                });
            }
            let bound = match pairs.get("bound") {
                Some(v) => v.parse().map_err(|e| ExperimentError::Config {
                    field: "bound".into(),
                    message: format!("cannot parse `{v}`: {e}"),
                })?,
                None => DEFAULT_COMPARE_BOUND,
            };
            let comparison = compare(&PathBuf::from(&positional[0]), &target, bound)?;
            let csv = comparison.to_csv();
            match pairs.get("out") {
                Some(path) => std::fs::write(path, &csv).map_err(|e| ExperimentError::Io {
                    path: path.into(),
                    message: e.to_string(),
                })?,
                None => print!("{csv}"),
            }
            let verdict = if comparison.passed() { "PASS" } else { "FAIL" };
            eprintln!(
                "max |z| = {:.3} (bound {bound}): {verdict}",
                comparison.max_abs_z()
            );
            Ok(if comparison.passed() { 0 } else { 1 })
        }
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(0)
        }
        other => Err(unexpected(other)),
    }
}

fn unexpected(arg: &str) -> ExperimentError {
    ExperimentError::Config {
        field: "command".into(),
        message: format!("unexpected argument `{arg}`\n{USAGE}"),
    }
}
