//! `terrakf`: scenario runner for vibration-based terrain estimation.
//!
//! Exit codes: 0 success, 1 analysis-negative (e.g. unobservable system),
//! 2 usage or configuration error.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use terrakf::io::{
    write_estimation_csv, write_profile_csv, write_truth_csv, EstimationSummary,
    MonteCarloSummary, SweepRecord,
};
use terrakf::observability::lie_observability;
use terrakf::road::{generate_profile, IsoClass};
use terrakf::sim::{
    monte_carlo, run_estimation, sensitivity_sweep, simulate_truth, FilterKind, SweepAxis,
};
use terrakf::vehicle::StateVector;

use config::RunConfig;

#[derive(Debug)]
pub struct CliError {
    message: String,
    exit: u8,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            exit: 2,
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            exit: 2,
        }
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "terrakf",
    about = "Simulate a quarter car on deformable terrain and estimate the soil stiffness from ride vibrations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON scenario configuration.
    config: PathBuf,
    /// Override the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the ground truth and write the noisy measurement stream.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the configured filter over one simulated scenario.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Estimator to run (overrides the configuration).
        #[arg(long)]
        filter: Option<String>,
    },
    /// Monte Carlo batch over consecutive seeds.
    Montecarlo {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        runs: usize,
        /// Worker threads (0 = rayon default). Never affects the numbers.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        filter: Option<String>,
    },
    /// Excitation sensitivity sweep over ISO classes or travel speeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// `iso-class` or `velocity`.
        #[arg(long)]
        axis: String,
        /// Comma-separated class letters or speeds in m/s.
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Rank test of the observability matrix at the configured operating point.
    Observability {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Synthesize a road profile and write it as CSV.
    GenProfile {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}

fn out_file(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut file = out_file(dir, name)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime(format!("serialize {name}: {e}")))?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

fn parse_filter(raw: &Option<String>) -> Result<Option<FilterKind>, CliError> {
    match raw {
        None => Ok(None),
        Some(s) => s
            .parse::<FilterKind>()
            .map(Some)
            .map_err(|e| CliError::config(e.to_string())),
    }
}

fn with_pool<R: Send>(
    threads: usize,
    job: impl FnOnce() -> Result<R, terrakf::Error> + Send,
) -> Result<R, CliError> {
    if threads == 0 {
        return job().map_err(|e| CliError::runtime(e.to_string()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    pool.install(job).map_err(|e| CliError::runtime(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Simulate { common } => {
            let config = RunConfig::from_file(&common.config)?;
            let scenario = config.build_scenario(common.seed, None)?;
            let truth = simulate_truth(&scenario)?;
            write_truth_csv(&truth, out_file(&common.out, "truth.csv")?)?;
            let accel_rms: Vec<f64> = (0..truth.measurements[0].len())
                .map(|i| {
                    let ss: f64 = truth.measurements.iter().map(|z| z[i] * z[i]).sum();
                    (ss / truth.measurements.len() as f64).sqrt()
                })
                .collect();
            println!(
                "simulated {} samples over {:.2} s; elevation rms {:.4} m; accel rms {:?} m/s^2",
                truth.states.len(),
                scenario.duration,
                truth.profile.rms_elevation(),
                accel_rms
                    .iter()
                    .map(|x| (x * 1e4).round() / 1e4)
                    .collect::<Vec<_>>()
            );
            println!("wrote {}", common.out.join("truth.csv").display());
            Ok(0)
        }
        Command::Estimate { common, filter } => {
            let config = RunConfig::from_file(&common.config)?;
            let scenario = config.build_scenario(common.seed, parse_filter(&filter)?)?;
            let result = run_estimation(&scenario)?;
            write_estimation_csv(&result, out_file(&common.out, "estimate.csv")?)?;
            let summary = EstimationSummary::from_result(&result);
            write_json(&common.out, "estimate_summary.json", &summary)?;
            println!(
                "filter {:?}: rmse {:.3}% | adaptation {} | diverged {}",
                scenario.filter,
                summary.rmse_pct,
                summary
                    .adaptation_window_s
                    .map(|w| format!("{w:.2} s"))
                    .unwrap_or_else(|| "never".into()),
                summary.diverged
            );
            println!(
                "wrote {} and {}",
                common.out.join("estimate.csv").display(),
                common.out.join("estimate_summary.json").display()
            );
            Ok(0)
        }
        Command::Montecarlo {
            common,
            runs,
            threads,
            filter,
        } => {
            if runs == 0 {
                return Err(CliError::config("--runs must be at least 1"));
            }
            let config = RunConfig::from_file(&common.config)?;
            let scenario = config.build_scenario(common.seed, parse_filter(&filter)?)?;
            let stats = with_pool(threads, || monte_carlo(&scenario, runs))?;
            let summary = MonteCarloSummary::from_stats(&stats);
            write_json(&common.out, "montecarlo.json", &summary)?;
            println!(
                "{} runs: mean rmse {:.3}% (std {:.3}%), {} diverged",
                runs, summary.mean_rmse_pct, summary.std_rmse_pct, summary.diverged_count
            );
            println!("wrote {}", common.out.join("montecarlo.json").display());
            Ok(0)
        }
        Command::Sweep {
            common,
            axis,
            values,
            runs,
            threads,
        } => {
            let config = RunConfig::from_file(&common.config)?;
            let scenario = config.build_scenario(common.seed, None)?;
            let axis = match axis.as_str() {
                "iso-class" => {
                    let classes: Result<Vec<IsoClass>, _> =
                        values.split(',').map(|v| v.parse::<IsoClass>()).collect();
                    SweepAxis::IsoClass(classes.map_err(|e| CliError::config(e.to_string()))?)
                }
                "velocity" => {
                    let speeds: Result<Vec<f64>, _> =
                        values.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    SweepAxis::Velocity(
                        speeds.map_err(|e| CliError::config(format!("--values: {e}")))?,
                    )
                }
                other => {
                    return Err(CliError::config(format!(
                        "unknown axis {other:?}; use iso-class or velocity"
                    )))
                }
            };
            let points = with_pool(threads, || sensitivity_sweep(&scenario, &axis, runs))?;
            let records: Vec<SweepRecord> = points.iter().map(SweepRecord::from_point).collect();
            write_json(&common.out, "sweep.json", &records)?;
            println!("{:<12} {:>12} {:>14} {:>10}", "value", "mean err %", "adaptation s", "diverged");
            for r in &records {
                println!(
                    "{:<12} {:>12.3} {:>14} {:>10}",
                    r.label,
                    r.mean_error_pct,
                    r.mean_adaptation_s
                        .map(|w| format!("{w:.2}"))
                        .unwrap_or_else(|| "never".into()),
                    r.diverged_count
                );
            }
            println!("wrote {}", common.out.join("sweep.json").display());
            Ok(0)
        }
        Command::Observability { common } => {
            let config = RunConfig::from_file(&common.config)?;
            let scenario = config.build_scenario(common.seed, None)?;
            // evaluate at a representative operating point: mild motion,
            // stiffness at the first segment's truth
            let k_tot = scenario.combined_truth()[0];
            let state = match scenario.vehicle.model_order {
                terrakf::vehicle::ModelOrder::TwoDof => {
                    StateVector::two_dof(0.01, -0.1, 0.005, 0.2, k_tot)
                }
                terrakf::vehicle::ModelOrder::OneDofLrv => {
                    StateVector::one_dof_lrv(0.01, -0.1, k_tot)
                }
            };
            let report = lie_observability(
                &scenario.vehicle,
                state.as_vector(),
                0.05,
                1e-8,
            )?;
            println!("singular values:");
            for (i, s) in report.singular_values.iter().enumerate() {
                println!("  sigma_{i} = {s:.6e}");
            }
            println!(
                "rank {} of {} -> {}",
                report.rank,
                scenario.vehicle.state_dim(),
                if report.observable {
                    "observable"
                } else {
                    "NOT observable"
                }
            );
            if report.nonphysical_state {
                println!("warning: stiffness state is nonpositive at the test point");
            }
            Ok(if report.observable { 0 } else { 1 })
        }
        Command::GenProfile { common } => {
            let config = RunConfig::from_file(&common.config)?;
            let scenario = config.build_scenario(common.seed, None)?;
            let profile = generate_profile(
                &scenario.profile.clone().with_seed(scenario.seed),
                scenario.velocity,
                scenario.duration,
                scenario.dt,
            )?;
            write_profile_csv(&profile, out_file(&common.out, "profile.csv")?)?;
            println!(
                "generated {} samples, elevation rms {:.4} m",
                profile.len(),
                profile.rms_elevation()
            );
            println!("wrote {}", common.out.join("profile.csv").display());
            Ok(0)
        }
    }
}
