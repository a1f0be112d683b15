//! CSV and JSON interchange for profiles, truth data and estimation results.
//!
//! CSV numbers are written with nine significant digits so outputs can be
//! diffed against recorded oracles without drowning in representation noise.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road::{ProfileSpec, RoadProfile};
use crate::scalar::{lit, Real};
use crate::sim::{EstimationResult, MonteCarloStats, SweepPoint, TruthData};

fn fmt<T: Real>(x: T) -> String {
    format!("{:.8e}", x.to_f64().unwrap())
}

/// `t,h,hdot` per sample.
pub fn write_profile_csv<T: Real, W: Write>(profile: &RoadProfile<T>, mut out: W) -> Result<()> {
    writeln!(out, "t,h,hdot")?;
    for k in 0..profile.len() {
        writeln!(
            out,
            "{},{},{}",
            fmt(profile.time_at(k)),
            fmt(profile.samples_h[k]),
            fmt(profile.samples_hdot[k])
        )?;
    }
    Ok(())
}

/// Read a profile exported with [`write_profile_csv`]. The time column is
/// used to recover `dt`; elevation rate is taken as-is.
pub fn read_profile_csv<T: Real, R: Read>(reader: R, velocity: T) -> Result<RoadProfile<T>> {
    let buf = BufReader::new(reader);
    let mut h = Vec::new();
    let mut hdot = Vec::new();
    let mut times = Vec::new();
    for (lineno, line) in buf.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed.starts_with('t')) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "profile csv line {}: expected 3 columns, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("profile csv line {}: {e}", lineno + 1)))
        };
        times.push(parse(fields[0])?);
        h.push(lit::<T>(parse(fields[1])?));
        hdot.push(lit::<T>(parse(fields[2])?));
    }
    if times.len() < 2 {
        return Err(Error::Parse("profile csv needs at least two samples".into()));
    }
    let dt = lit::<T>(times[1] - times[0]);
    Ok(RoadProfile {
        dt,
        samples_h: h,
        samples_hdot: hdot,
        velocity,
        spec: ProfileSpec::custom(T::zero(), lit(2.0), [lit(0.01), lit(10.0)], 0),
    })
}

/// Truth trajectory and noisy readings: `t,h,hdot,x1..xn,z1[,z2]`.
pub fn write_truth_csv<T: Real, W: Write>(truth: &TruthData<T>, mut out: W) -> Result<()> {
    let n = truth.states[0].len();
    let p = truth.measurements[0].len();
    let mut header = String::from("t,h,hdot");
    for i in 1..=n {
        let _ = write!(header, ",x{i}");
    }
    for i in 1..=p {
        let _ = write!(header, ",z{i}");
    }
    writeln!(out, "{header}")?;
    for k in 0..truth.states.len() {
        let mut row = format!(
            "{},{},{}",
            fmt(truth.profile.time_at(k)),
            fmt(truth.profile.samples_h[k]),
            fmt(truth.profile.samples_hdot[k])
        );
        for i in 0..n {
            let _ = write!(row, ",{}", fmt(truth.states[k][i]));
        }
        for i in 0..p {
            let _ = write!(row, ",{}", fmt(truth.measurements[k][i]));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Estimation timelines: truth vs estimate plus the relative error.
pub fn write_estimation_csv<T: Real, W: Write>(
    result: &EstimationResult<T>,
    mut out: W,
) -> Result<()> {
    let n = result.state_est[0].len();
    let mut header = String::from("t,ks_true,ks_est,k_tot_est,rel_error_pct");
    for i in 1..=n {
        let _ = write!(header, ",x{i}_est");
    }
    writeln!(out, "{header}")?;
    for k in 0..result.t.len() {
        let mut row = format!(
            "{},{},{},{},{}",
            fmt(result.t[k]),
            fmt(result.ks_true[k]),
            fmt(result.ks_est[k]),
            fmt(result.k_tot_est[k]),
            fmt(result.rel_error_pct[k])
        );
        for i in 0..n {
            let _ = write!(row, ",{}", fmt(result.state_est[k][i]));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Compact JSON summary of one estimation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimationSummary {
    pub rmse_pct: f64,
    pub adaptation_window_s: Option<f64>,
    pub diverged: bool,
    pub diverged_at_step: Option<usize>,
    pub final_ks_est: f64,
    pub final_rel_error_pct: f64,
}

impl EstimationSummary {
    pub fn from_result<T: Real>(result: &EstimationResult<T>) -> Self {
        EstimationSummary {
            rmse_pct: result.rmse_pct.to_f64().unwrap(),
            adaptation_window_s: result.adaptation_window_s.map(|w| w.to_f64().unwrap()),
            diverged: result.diverged,
            diverged_at_step: result.diverged_at,
            final_ks_est: result.ks_est.last().unwrap().to_f64().unwrap(),
            final_rel_error_pct: result.rel_error_pct.last().unwrap().to_f64().unwrap(),
        }
    }
}

/// JSON view of a Monte Carlo batch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mean_rmse_pct: f64,
    pub std_rmse_pct: f64,
    pub diverged_count: usize,
    pub per_run: Vec<RunRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub rmse_pct: f64,
    pub adaptation_window_s: Option<f64>,
    pub diverged: bool,
}

impl MonteCarloSummary {
    pub fn from_stats<T: Real>(stats: &MonteCarloStats<T>) -> Self {
        MonteCarloSummary {
            mean_rmse_pct: stats.mean_rmse_pct.to_f64().unwrap(),
            std_rmse_pct: stats.std_rmse_pct.to_f64().unwrap(),
            diverged_count: stats.diverged_count,
            per_run: stats
                .runs
                .iter()
                .map(|r| RunRecord {
                    seed: r.seed,
                    rmse_pct: r.rmse_pct.to_f64().unwrap(),
                    adaptation_window_s: r.adaptation_window_s.map(|w| w.to_f64().unwrap()),
                    diverged: r.diverged,
                })
                .collect(),
        }
    }
}

/// JSON view of one sensitivity-sweep row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub label: String,
    pub mean_error_pct: f64,
    pub std_error_pct: f64,
    pub mean_adaptation_s: Option<f64>,
    pub diverged_count: usize,
}

impl SweepRecord {
    pub fn from_point<T: Real>(point: &SweepPoint<T>) -> Self {
        SweepRecord {
            label: point.label.clone(),
            mean_error_pct: point.mean_error_pct.to_f64().unwrap(),
            std_error_pct: point.std_error_pct.to_f64().unwrap(),
            mean_adaptation_s: point.mean_adaptation_s.map(|w| w.to_f64().unwrap()),
            diverged_count: point.diverged_count,
        }
    }
}
