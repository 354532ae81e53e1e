//! Per-run summaries and their CSV encodings.
//!
//! Floating-point values are written with 17 significant digits so they
//! parse back to the identical `f64`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hmm::{Coordinate, Ensemble};

/// Formats `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub distinct_fractions: Vec<f64>,
    /// Sample size behind the standard errors (`N`, or the ESS for weighted output).
    pub effective_size: f64,
    /// SIR/SIS only: ESS after each step's weight update.
    pub ess_trace: Vec<f64>,
    /// SIR/SIS only: steps at which resampling happened.
    pub resample_steps: Vec<usize>,
    /// Rejection samplers only: mean proposals per particle, per window.
    pub mean_attempts: Vec<f64>,
    pub wall_clock_seconds: f64,
    pub seed: u64,
}

impl RunReport {
    pub fn from_ensemble(e: &Ensemble, seed: u64) -> Result<Self> {
        let len = e.trajectory_len();
        Ok(Self {
            means: (0..len)
                .map(|i| e.marginal_mean(i))
                .collect::<Result<_>>()?,
            variances: (0..len)
                .map(|i| e.marginal_variance(i))
                .collect::<Result<_>>()?,
            distinct_fractions: (0..len)
                .map(|i| e.distinct_fraction(Coordinate::Index(i)))
                .collect::<Result<_>>()?,
            effective_size: e.effective_size(),
            ess_trace: Vec::new(),
            resample_steps: Vec::new(),
            mean_attempts: Vec::new(),
            wall_clock_seconds: 0.0,
            seed,
        })
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        self.variances
            .iter()
            .map(|v| (v / self.effective_size).sqrt())
            .collect()
    }

    /// `index,mean,variance,distinct_fraction`, one row per time index.
    pub fn marginals_csv(&self) -> String {
        let mut out = String::from("index,mean,variance,distinct_fraction\n");
        for i in 0..self.means.len() {
            let _ = writeln!(
                out,
                "{i},{},{},{}",
                fmt_f64(self.means[i]),
                fmt_f64(self.variances[i]),
                fmt_f64(self.distinct_fractions[i])
            );
        }
        out
    }

    /// `step,ess,resampled`.
    pub fn ess_csv(&self) -> String {
        let mut out = String::from("step,ess,resampled\n");
        for (k, ess) in self.ess_trace.iter().enumerate() {
            let step = k + 1;
            let resampled = self.resample_steps.contains(&step) as u8;
            let _ = writeln!(out, "{step},{},{resampled}", fmt_f64(*ess));
        }
        out
    }

    /// `window,mean_attempts`.
    pub fn attempts_csv(&self) -> String {
        let mut out = String::from("window,mean_attempts\n");
        for (m, a) in self.mean_attempts.iter().enumerate() {
            let _ = writeln!(out, "{m},{}", fmt_f64(*a));
        }
        out
    }
}

/// Marginal columns read back from a `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub distinct_fractions: Vec<f64>,
}

pub fn parse_marginals_csv(text: &str) -> std::result::Result<MarginalTable, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("index,mean,variance,distinct_fraction") => {}
        other => return Err(format!("unexpected report header {other:?}")),
    }
    let mut table = MarginalTable {
        means: Vec::new(),
        variances: Vec::new(),
        distinct_fractions: Vec::new(),
    };
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format!(
                "row {row}: expected 4 fields, got {}",
                fields.len()
            ));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("row {row}: {e}"))
        };
        if fields[0].trim().parse::<usize>().ok() != Some(row) {
            return Err(format!("row {row}: index column out of order"));
        }
        table.means.push(parse(fields[1])?);
        table.variances.push(parse(fields[2])?);
        table.distinct_fractions.push(parse(fields[3])?);
    }
    Ok(table)
}

/// Fixed-width histogram of one marginal over the sample range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Weighted counts, `N · Σ W` over each bin (plain counts for uniform ensembles).
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn of_marginal(e: &Ensemble, i: usize, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter {
                name: "bins",
                reason: "must be at least 1".into(),
            });
        }
        let values = e.marginal(i)?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0.0; bins];
        let scale = e.len() as f64;
        for (v, w) in values.iter().zip(e.normalized_weights()) {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += w * scale;
        }
        if e.is_uniform() {
            // exact integers for equally weighted ensembles
            for c in &mut counts {
                *c = c.round();
            }
        }
        Ok(Self { edges, counts })
    }

    /// `bin_left,bin_right,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_f64(self.edges[k]),
                fmt_f64(self.edges[k + 1]),
                fmt_f64(*c)
            );
        }
        out
    }
}
