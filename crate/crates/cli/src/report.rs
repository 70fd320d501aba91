use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use bite_core::runner::{bootstrap_compare, compute_metrics, read_ledger, EpisodeLog, MetricsReport, Policy};

use crate::commands::CliError;
use crate::manifest::RunManifest;

const SIGNIFICANCE: f64 = 0.05;

struct Comparison {
    a: String,
    b: String,
    p: f64,
}

/// Metrics for every policy of a run directory, in manifest order.
fn load(dir: &Path, resamples: usize) -> Result<(Vec<MetricsReport>, Vec<Comparison>), CliError> {
    if !dir.is_dir() {
        return Err(CliError::usage(format!("{} is not a directory", dir.display())));
    }
    let manifest = RunManifest::load(dir)?;
    let ledger_path = dir.join(&manifest.ledger);
    let file = File::open(&ledger_path)
        .map_err(|e| CliError::usage(format!("cannot open ledger {}: {e}", ledger_path.display())))?;
    let logs = read_ledger(file)?;
    let mut reports = Vec::new();
    for name in &manifest.policies {
        let policy: Policy = name.parse()?;
        let mine: Vec<EpisodeLog> = logs.iter().filter(|l| l.policy == policy).cloned().collect();
        if mine.is_empty() {
            return Err(CliError::usage(format!("ledger has no rows for policy {name}")));
        }
        reports.push(compute_metrics(&mine)?);
    }
    let mut comparisons = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            let p = bootstrap_compare(&reports[i], &reports[j], resamples, manifest.master_seed)?;
            comparisons.push(Comparison { a: reports[i].policy.clone(), b: reports[j].policy.clone(), p });
        }
    }
    Ok((reports, comparisons))
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

/// Rows of the results table: plate rows with `acquired/attempts` cells,
/// then aggregate rows.
fn rows(reports: &[MetricsReport], csv: bool) -> Vec<(String, Vec<String>)> {
    let mut out = Vec::new();
    for plate in &reports[0].plates {
        let cells = reports
            .iter()
            .map(|r| r.plate(&plate.plate_id).map_or("-".to_string(), |p| format!("{}/{}", p.acquired, p.attempts)))
            .collect();
        out.push((plate.plate_id.clone(), cells));
    }
    let agg = |label: &str, f: &dyn Fn(&MetricsReport) -> (f64, f64)| {
        let cells = reports
            .iter()
            .map(|r| {
                let (mean, std) = f(r);
                if csv {
                    format!("{}±{}", pct(mean), pct(std))
                } else {
                    format!("{} ± {}", pct(mean), pct(std))
                }
            })
            .collect();
        (label.to_string(), cells)
    };
    out.push(agg("Average Success Rate (%)", &|r| (r.sr.mean, r.sr.std)));
    out.push(("Pooled Success Rate (%)".into(), reports.iter().map(|r| pct(r.sr.pooled)).collect()));
    for k in 0..3 {
        out.push(agg(&format!("SR{} (%)", k + 1), &|r| (r.sr_k[k].mean, r.sr_k[k].std)));
    }
    out
}

fn render_text(reports: &[MetricsReport], comparisons: &[Comparison], resamples: usize) -> String {
    let table = rows(reports, false);
    let first = table.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max("Plate".len());
    let widths: Vec<usize> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| table.iter().map(|(_, c)| c[i].len()).max().unwrap_or(0).max(r.policy.len()))
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, label: &str, cells: &[String]| {
        write!(out, "{label:<first$}").unwrap();
        for (cell, w) in cells.iter().zip(&widths) {
            write!(out, " | {cell:>w$}").unwrap();
        }
        out.push('\n');
    };
    line(&mut out, "Plate", &reports.iter().map(|r| r.policy.clone()).collect::<Vec<_>>());
    let rule = first + widths.iter().map(|w| w + 3).sum::<usize>();
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    let plates = reports[0].plates.len();
    for (i, (label, cells)) in table.iter().enumerate() {
        if i == plates {
            out.push_str(&"-".repeat(rule));
            out.push('\n');
        }
        line(&mut out, label, cells);
    }
    if !comparisons.is_empty() {
        writeln!(out, "\nPaired bootstrap p-values on per-plate SR ({resamples} resamples, * p < {SIGNIFICANCE}):").unwrap();
        for c in comparisons {
            let mark = if c.p < SIGNIFICANCE { " *" } else { "" };
            writeln!(out, "  {} vs {}: {:.4}{mark}", c.a, c.b, c.p).unwrap();
        }
    }
    out
}

fn render_csv(reports: &[MetricsReport], comparisons: &[Comparison]) -> String {
    let mut out = String::from("row");
    for r in reports {
        write!(out, ",{}", r.policy).unwrap();
    }
    out.push('\n');
    for (label, cells) in rows(reports, true) {
        writeln!(out, "{label},{}", cells.join(",")).unwrap();
    }
    for c in comparisons {
        writeln!(out, "p-value {} vs {},{:.4}", c.a, c.b, c.p).unwrap();
    }
    out
}

pub fn report(dir: &Path, csv: bool, resamples: usize) -> Result<String, CliError> {
    let (reports, comparisons) = load(dir, resamples)?;
    Ok(if csv { render_csv(&reports, &comparisons) } else { render_text(&reports, &comparisons, resamples) })
}
