use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use epsgood::bounds::{self, BoundsReport};
use epsgood::harness::{self, Algorithm, BudgetRun, Campaign, RunSettings};
use epsgood::oracle;
use epsgood::solver::{self, SolveConfig};
use epsgood::tracker;
use epsgood::{BanditInstance, Error, Mode, Result, SimplexWeights};

#[derive(Parser)]
#[command(
    name = "epsgood",
    version,
    about = "All epsilon-good arms identification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal allocation and characteristic time by mirror ascent.
    Solve {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, default_value_t = 1e-5)]
        accuracy: f64,
        #[arg(long = "max-iters", default_value_t = 2_000_000)]
        max_iters: u64,
    },
    /// Best response to a fixed allocation.
    Oracle {
        #[command(flatten)]
        instance: InstanceArg,
        /// Comma separated allocation, one weight per arm.
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
    },
    /// One Track-and-Stop run.
    Run {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Tas)]
        algorithm: AlgorithmArg,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Monte Carlo campaign over a delta grid, written as CSV.
    Mc {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, conflicts_with = "delta_grid")]
        delta: Option<f64>,
        #[arg(long = "delta-grid", value_delimiter = ',')]
        delta_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Tas)]
        algorithm: AlgorithmArg,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append a wall_ms column (not reproducible).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Fixed-budget run reporting F1 of the empirical good set.
    Budget {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        budget: u64,
        #[arg(long, default_value_t = 1000)]
        stride: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Tas)]
        algorithm: AlgorithmArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Lower bounds and diagnostics.
    Bounds {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1e-5)]
        accuracy: f64,
        #[arg(long = "max-iters", default_value_t = 2_000_000)]
        max_iters: u64,
    },
}

#[derive(Args)]
struct InstanceArg {
    /// Instance JSON: {"means": [...], "epsilon": .., "mode": "additive", "variance": 1.0}
    #[arg(long)]
    instance: PathBuf,
}

impl InstanceArg {
    fn load(&self) -> Result<BanditInstance> {
        BanditInstance::load(&self.instance)
    }
}

#[derive(Args)]
struct SettingsArgs {
    /// Steps between weight recomputations (default 100 * K).
    #[arg(long = "lazy-period")]
    lazy_period: Option<u64>,
    /// Iteration cap per weight recomputation.
    #[arg(long = "max-iters", default_value_t = 1_000_000)]
    max_iters: u64,
    #[arg(long = "tau-max", default_value_t = 100_000_000)]
    tau_max: u64,
}

impl SettingsArgs {
    fn settings(&self) -> RunSettings {
        RunSettings {
            lazy_period: self.lazy_period,
            max_solver_iterations: self.max_iters,
            tau_max: self.tau_max,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Tas,
    Uniform,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Tas => Algorithm::TrackAndStop,
            AlgorithmArg::Uniform => Algorithm::UniformSampling,
        }
    }
}

#[derive(Serialize)]
struct SolveOutput {
    weights: Vec<f64>,
    value: f64,
    t_star: Option<f64>,
    certified_gap: f64,
    value_upper: f64,
    iterations: u64,
    certified: bool,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            instance,
            accuracy,
            max_iters,
        } => {
            let instance = instance.load()?;
            let cfg = SolveConfig {
                target_accuracy: accuracy,
                max_iterations: max_iters,
                ..SolveConfig::default()
            };
            let res = solver::mirror_ascent(&instance, &cfg)?;
            let t_star =
                (res.value > solver::DEGENERATE_VALUE).then(|| instance.variance() / res.value);
            print_json(&SolveOutput {
                weights: res.weights.as_slice().to_vec(),
                value: res.value,
                t_star,
                certified_gap: res.certified_gap,
                value_upper: res.value_upper,
                iterations: res.iterations,
                certified: res.certified,
            })
        }
        Command::Oracle { instance, weights } => {
            let instance = instance.load()?;
            let w = SimplexWeights::new(weights)?;
            let br = oracle::best_response(&instance, &w)?;
            print_json(&br.report())
        }
        Command::Run {
            instance,
            delta,
            seed,
            algorithm,
            settings,
        } => {
            let instance = instance.load()?;
            let cfg = settings.settings().tracker_config(delta, algorithm.into());
            let rec = tracker::run(&instance, &cfg, seed)?;
            print_json(&rec.report())
        }
        Command::Mc {
            instance,
            delta,
            delta_grid,
            trials,
            seed,
            threads,
            algorithm,
            out,
            timing,
            settings,
        } => {
            let deltas = match (delta, delta_grid) {
                (Some(d), None) => vec![d],
                (None, Some(g)) => g,
                _ => {
                    return Err(Error::InvalidConfig(
                        "give exactly one of --delta or --delta-grid".into(),
                    ))
                }
            };
            let campaign = Campaign {
                instance: instance.load()?,
                deltas,
                trials,
                base_seed: seed,
                threads,
                algorithm: algorithm.into(),
                settings: settings.settings(),
            };
            campaign.validate()?;
            let sink = output(&out)?;
            let result = harness::run_campaign(&campaign)?;
            harness::write_campaign_csv(&result, timing, sink)
        }
        Command::Budget {
            instance,
            budget,
            stride,
            seed,
            algorithm,
            out,
            settings,
        } => {
            let run = BudgetRun {
                instance: instance.load()?,
                budget,
                stride,
                seed,
                algorithm: algorithm.into(),
                settings: settings.settings(),
            };
            let sink = output(&out)?;
            let points = harness::budget_run(&run)?;
            harness::write_budget_csv(&points, sink)
        }
        Command::Bounds {
            instance,
            delta,
            accuracy,
            max_iters,
        } => {
            let instance = instance.load()?;
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "delta must lie in (0, 1), got {delta}"
                )));
            }
            print_json(&bounds_report(&instance, delta, accuracy, max_iters)?)
        }
    }
}

fn bounds_report(
    instance: &BanditInstance,
    delta: f64,
    accuracy: f64,
    max_iters: u64,
) -> Result<BoundsReport> {
    let mut flags = Vec::new();
    let cfg = SolveConfig {
        target_accuracy: accuracy,
        max_iterations: max_iters,
        ..SolveConfig::default()
    };
    let t_star = match solver::solve_characteristic_time(instance, &cfg) {
        Ok(ct) => {
            if !ct.solve.certified {
                flags.push("t_star_not_certified".to_string());
            }
            Some(ct.t_star)
        }
        Err(Error::DegenerateInstance(_)) => {
            flags.push("degenerate_instance".to_string());
            None
        }
        Err(e) => return Err(e),
    };
    let asymptotic = t_star.map(|t| bounds::asymptotic_bound(t, delta));
    let moderate_confidence = match bounds::moderate_confidence_bound(instance) {
        Ok(v) => Some(v),
        Err(Error::NoBadArm) => {
            flags.push("moderate_confidence_no_bad_arm".to_string());
            None
        }
        Err(Error::UnsupportedMode) => None,
        Err(e) => return Err(e),
    };
    let (margin_bound, margin_as_printed) = if instance.mode() == Mode::Additive {
        let f = bounds::margin_bound(instance)?;
        if f.degenerate {
            flags.push("margin_bound_degenerate".to_string());
        }
        if f.interpretation_differs {
            flags.push("margin_bound_interpretation_differs".to_string());
        }
        (Some(f.value), Some(f.as_printed))
    } else {
        flags.push("additive_only_bounds_skipped".to_string());
        (None, None)
    };
    Ok(BoundsReport {
        t_star,
        asymptotic,
        moderate_confidence,
        margin_bound,
        margin_as_printed,
        flags,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
