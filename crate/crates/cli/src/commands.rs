use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bite_core::calibration::{render_summary, run_calibration, CalibrationDataset, CalibrationProtocol, TrialSampling};
use bite_core::model::FoodRegistry;
use bite_core::runner::{run_experiment, write_ledger, ExperimentConfig, ExperimentInputs, MetricsReport, Policy};
use bite_core::sim::SimModel;
use bite_core::{digest_hex, Error};

use crate::manifest::{RunManifest, LEDGER_FILE, MANIFEST_FILE, MANIFEST_SCHEMA_VERSION};

pub const USAGE: u8 = 2;
pub const RUNTIME: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: RUNTIME, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Argument(_)
            | Error::Config(_)
            | Error::Parse(_)
            | Error::Schema { .. }
            | Error::Toml(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::UnknownLabel(_)
            | Error::UnknownTool(_)
            | Error::UnknownSkill(_)
            | Error::UnknownPolicy(_) => USAGE,
            _ => RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn calibrate(
    tool: &str,
    seed: u64,
    trials: u32,
    sampling: TrialSampling,
    out: Option<PathBuf>,
) -> Result<String, CliError> {
    let registry = FoodRegistry::default();
    let tool_spec = registry.tool(tool)?;
    let protocol = CalibrationProtocol { trials_per_skill: trials, sampling, ..CalibrationProtocol::default() };
    let dataset = run_calibration(seed, &SimModel::default(), &registry, tool_spec, &protocol)?;
    let out = out.unwrap_or_else(|| PathBuf::from(format!("calibration_{tool}.json")));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    let summary_path = out.with_extension("txt");
    write_file(&out, dataset.to_json()?.as_bytes())?;
    write_file(&summary_path, render_summary(&dataset).as_bytes())?;
    Ok(format!("wrote {} and {}\n", out.display(), summary_path.display()))
}

pub struct RunArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub jobs: usize,
    pub policies: Vec<String>,
}

/// Loads the config and the calibration it points at, applying CLI overrides.
fn prepare(
    args: &RunArgs,
    overrides: &BTreeMap<String, f64>,
) -> Result<(ExperimentConfig, String, Option<(CalibrationDataset, String)>), CliError> {
    let bytes = fs::read(&args.config)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", args.config.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::usage(format!("{} is not UTF-8", args.config.display())))?;
    let mut config = ExperimentConfig::from_toml_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if !args.policies.is_empty() {
        config.policies = args.policies.iter().map(|p| p.parse::<Policy>()).collect::<Result<_, _>>()?;
    }
    for (name, value) in overrides {
        config.params.set(name, *value)?;
    }
    config.validate()?;

    let calibration = if config.needs_calibration() {
        let Some(relative) = &config.calibration else {
            return Err(CliError::usage(format!(
                "{}: calibrated policies are listed but no `calibration` dataset is configured",
                args.config.display()
            )));
        };
        let path = args.config.parent().unwrap_or(Path::new(".")).join(relative);
        if !path.is_file() {
            return Err(CliError::usage(format!(
                "missing calibration dataset {} (create it with `bite calibrate`)",
                path.display()
            )));
        }
        let raw = fs::read(&path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let dataset = CalibrationDataset::from_json(&String::from_utf8_lossy(&raw))
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Some((dataset, digest_hex(&raw)))
    } else {
        None
    };
    Ok((config, digest_hex(&bytes), calibration))
}

/// Runs one experiment and writes its output directory.
pub fn execute(args: &RunArgs, overrides: &BTreeMap<String, f64>) -> Result<Vec<MetricsReport>, CliError> {
    let (config, config_digest, calibration) = prepare(args, overrides)?;
    let calibration_digest = calibration.as_ref().map(|(_, d)| d.clone());
    let inputs = ExperimentInputs::prepare(&config, calibration.map(|(d, _)| d))?;
    let result = run_experiment(&config, &inputs, args.jobs)?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", args.out.display())))?;
    let mut ledger = Vec::new();
    write_ledger(&result.logs, &mut ledger)?;
    write_file(&args.out.join(LEDGER_FILE), &ledger)?;
    let mut summaries = BTreeMap::new();
    for report in &result.reports {
        let name = format!("summary_{}.json", report.policy);
        let json = serde_json::to_string_pretty(report).map_err(|e| CliError::runtime(e.to_string()))?;
        write_file(&args.out.join(&name), json.as_bytes())?;
        summaries.insert(report.policy.clone(), name);
    }
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        config_digest,
        config_path: args.config.display().to_string(),
        calibration_digest,
        master_seed: config.master_seed,
        tool: config.tool.clone(),
        policies: config.policies.iter().map(|p| p.name().to_string()).collect(),
        seeds_per_plate: config.seeds_per_plate,
        budget: config.budget,
        overrides: overrides.clone(),
        ledger: LEDGER_FILE.into(),
        summaries,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::runtime(e.to_string()))?;
    write_file(&args.out.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(result.reports)
}

fn summary_line(report: &MetricsReport) -> String {
    format!(
        "{:<22} SR {:5.1} ± {:4.1}%  pooled {:5.1}%  SR1 {:5.1}%  SR2 {:5.1}%  SR3 {:5.1}%\n",
        report.policy,
        100.0 * report.sr.mean,
        100.0 * report.sr.std,
        100.0 * report.sr.pooled,
        100.0 * report.sr_k[0].mean,
        100.0 * report.sr_k[1].mean,
        100.0 * report.sr_k[2].mean
    )
}

pub fn run(args: &RunArgs, overrides: Option<(&str, f64)>) -> Result<String, CliError> {
    let overrides: BTreeMap<String, f64> = overrides.map(|(k, v)| (k.to_string(), v)).into_iter().collect();
    let reports = execute(args, &overrides)?;
    let mut text = format!("wrote {}\n", args.out.display());
    for report in &reports {
        text.push_str(&summary_line(report));
    }
    Ok(text)
}

pub const SWEEP_COLUMNS: &str = "param,value,policy,sr_mean,sr_std,sr_pooled,sr1,sr2,sr3";

/// One run per value, all on the same seed schedule.
pub fn sweep(args: &RunArgs, param: &str, values: &[f64]) -> Result<String, CliError> {
    let mut csv = format!("{SWEEP_COLUMNS}\n");
    for &value in values {
        let sub = RunArgs {
            config: args.config.clone(),
            seed: args.seed,
            out: args.out.join(format!("{param}={value}")),
            jobs: args.jobs,
            policies: args.policies.clone(),
        };
        let overrides = BTreeMap::from([(param.to_string(), value)]);
        for r in execute(&sub, &overrides)? {
            writeln!(
                csv,
                "{param},{value},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.policy, r.sr.mean, r.sr.std, r.sr.pooled, r.sr_k[0].mean, r.sr_k[1].mean, r.sr_k[2].mean
            )
            .expect("writing to a String");
        }
    }
    write_file(&args.out.join("sweep.csv"), csv.as_bytes())?;
    Ok(csv)
}
