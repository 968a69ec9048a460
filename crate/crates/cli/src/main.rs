use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use hmimo::experiments::{
    default_config, describe, mode_name, run_and_write, ExperimentConfig, ExperimentId, ExperimentOutput,
};
use hmimo::montecarlo::thread_pool;

/// Holographic MIMO downlink experiments.
///
/// The worker thread count can be set with HMIMO_THREADS.
#[derive(Parser)]
#[command(name = "hmimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Unit of the printed summary; CSV files are always in nats.
        #[arg(long, value_enum, default_value_t = Unit::Nats)]
        unit: Unit,
    },
    /// Run the oracle checks and print the report.
    Validate {
        /// Directory for the report file.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Describe a catalog experiment and print its shipped configuration.
    Describe { experiment: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Nats,
    Bits,
}

impl Unit {
    fn scale(self) -> f64 {
        match self {
            Unit::Nats => 1.0,
            Unit::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }
}

fn print_rows(out: &ExperimentOutput, unit: Unit) {
    let s = unit.scale();
    let show = |x: Option<f64>| x.map(|v| format!("{:.4}", v * s)).unwrap_or_else(|| "-".into());
    println!(
        "{:<8} {:>4} {:>3} {:>8} {:>12} {:>10} {:>10} {:>9}   ({}/s/Hz per user)",
        "mode",
        "M",
        "K",
        "snr_db",
        "x",
        "analytic",
        "mc",
        "ci95",
        unit.label()
    );
    for r in &out.rows {
        println!(
            "{:<8} {:>4} {:>3} {:>8.2} {:>12} {:>10} {:>10} {:>9}",
            mode_name(r.mode),
            r.m,
            r.k,
            r.snr_db,
            format!("{}={}", r.x_name, r.x_value),
            show(r.analytic_nats),
            show(r.mc_mean_nats),
            show(r.mc_ci95),
        );
    }
}

fn execute(cfg: &ExperimentConfig, unit: Unit) -> anyhow::Result<ExitCode> {
    let pool = thread_pool()?;
    let (out, path) = run_and_write(cfg, &pool)?;
    let code = match &out.report {
        Some(report) => {
            print!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        None => {
            print_rows(&out, unit);
            ExitCode::SUCCESS
        }
    };
    eprintln!("wrote {}", path.display());
    Ok(code)
}

fn main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, unit } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            execute(&cfg, unit)
        }
        Command::Validate { output_dir } => {
            let mut cfg = default_config(ExperimentId::Validate)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            execute(&cfg, Unit::Nats)
        }
        Command::Describe { experiment } => {
            println!("{}", describe(ExperimentId::parse(&experiment)?));
            Ok(ExitCode::SUCCESS)
        }
    }
}
