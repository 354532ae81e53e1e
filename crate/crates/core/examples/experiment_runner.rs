//! Drives the experiment runner from code: two runs written to a temporary
//! directory and compared index by index, as the CLI would.
//!
//! cargo run --release --example experiment_runner

use wrs_smc::experiment::{compare, run, CompareTarget, ExperimentConfig, Pairs};

fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let pairs: Pairs = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::from_pairs(&pairs).expect("valid config")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("wrs-smc-example-{}", std::process::id()));
    let wrs_dir = dir.join("wrs");
    let sis_dir = dir.join("sis");
    let common = [
        ("model", "lg"),
        ("n", "10"),
        ("N", "20000"),
        ("data_seed", "3"),
    ];

    let mut wrs_cfg = vec![
        ("algo", "wrs"),
        ("w", "5"),
        ("hist", "7"),
        ("out", wrs_dir.to_str().unwrap()),
    ];
    wrs_cfg.extend(common);
    let mut sis_cfg = vec![
        ("algo", "sis"),
        ("seed", "1"),
        ("out", sis_dir.to_str().unwrap()),
    ];
    sis_cfg.extend(common);

    run(&config(&wrs_cfg))?;
    run(&config(&sis_cfg))?;

    for (name, target) in [
        ("sis", CompareTarget::Run(sis_dir.clone())),
        ("kalman", CompareTarget::Oracle),
    ] {
        let cmp = compare(&wrs_dir, &target, 4.0)?;
        println!(
            "wrs vs {name}: max |z| = {:.2} -> {}",
            cmp.max_abs_z(),
            if cmp.passed() { "agree" } else { "differ" }
        );
    }
    println!("outputs written under {}", dir.display());
    for entry in std::fs::read_dir(&wrs_dir)? {
        println!("  wrs/{}", entry?.file_name().to_string_lossy());
    }
    Ok(())
}
