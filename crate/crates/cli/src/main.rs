mod commands;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser)]
#[command(name = "bite", version, about = "Simulated bite acquisition: calibrate tools, run experiments, report results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampling {
    Stratified,
    Independent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    TableText,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run the calibration protocol for one tool.
    Calibrate {
        #[arg(long)]
        tool: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per food and skill.
        #[arg(long, default_value_t = 5)]
        trials: u32,
        #[arg(long, value_enum, default_value_t = Sampling::Stratified)]
        sampling: Sampling,
        /// Dataset path; the summary text goes next to it with a .txt extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config and write the attempt ledger.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Restrict to these policies (repeatable).
        #[arg(long = "policy")]
        policies: Vec<String>,
    },
    /// Summarize a run directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::TableText)]
        format: Format,
        /// Bootstrap resamples for the p-values.
        #[arg(long, default_value_t = 2000)]
        resamples: usize,
    },
    /// Rerun a config once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of theta_th, blend_w, theta_feas, tau, alpha.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long = "policy")]
        policies: Vec<String>,
    },
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Calibrate { tool, seed, trials, sampling, out } => {
            let sampling = match sampling {
                Sampling::Stratified => bite_core::calibration::TrialSampling::Stratified,
                Sampling::Independent => bite_core::calibration::TrialSampling::Independent,
            };
            commands::calibrate(&tool, seed, trials, sampling, out)
        }
        Command::Run { config, seed, out, jobs, policies } => {
            commands::run(&commands::RunArgs { config, seed, out, jobs, policies }, None)
        }
        Command::Report { input, format, resamples } => {
            report::report(&input, matches!(format, Format::Csv), resamples)
        }
        Command::Sweep { config, param, values, seed, out, jobs, policies } => {
            commands::sweep(&commands::RunArgs { config, seed, out, jobs, policies }, &param, &values)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
