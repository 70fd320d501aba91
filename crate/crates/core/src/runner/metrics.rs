use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::runner::EpisodeLog;

pub const MIN_RESAMPLES: usize = 1000;

/// One plate's counts pooled over all its runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateMetrics {
    pub plate_id: String,
    pub runs: usize,
    pub items: usize,
    pub acquired: usize,
    pub attempts: usize,
    /// Acquired items over attempts.
    pub sr: f64,
    /// Items acquired within 1, 2, 3 attempts over items.
    pub sr_k: [f64; 3],
}

/// Summary of a per-plate quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Mean over plates.
    pub mean: f64,
    /// Population standard deviation over plates.
    pub std: f64,
    /// Ratio of totals over all plates.
    pub pooled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: String,
    pub plates: Vec<PlateMetrics>,
    pub sr: Aggregate,
    pub sr_k: [Aggregate; 3],
    /// Logs dropped for having no attempts.
    pub excluded: usize,
}

impl MetricsReport {
    pub fn plate(&self, plate_id: &str) -> Option<&PlateMetrics> {
        self.plates.iter().find(|p| p.plate_id == plate_id)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-plate and aggregate success rates. Logs of one plate are pooled;
/// plates keep first-appearance order.
pub fn compute_metrics(logs: &[EpisodeLog]) -> Result<MetricsReport> {
    if logs.is_empty() {
        return Err(Error::Argument("no episode logs to summarize".into()));
    }
    let policy = logs[0].policy;
    if logs.iter().any(|l| l.policy != policy) {
        return Err(Error::Argument("logs mix several policies".into()));
    }
    let mut plates: Vec<PlateMetrics> = Vec::new();
    let mut within: Vec<[usize; 3]> = Vec::new();
    let mut excluded = 0;
    for log in logs {
        if log.attempts.is_empty() {
            excluded += 1;
            continue;
        }
        let slot = match plates.iter().position(|p| p.plate_id == log.plate_id) {
            Some(i) => i,
            None => {
                plates.push(PlateMetrics {
                    plate_id: log.plate_id.clone(),
                    runs: 0,
                    items: 0,
                    acquired: 0,
                    attempts: 0,
                    sr: 0.0,
                    sr_k: [0.0; 3],
                });
                within.push([0; 3]);
                plates.len() - 1
            }
        };
        let p = &mut plates[slot];
        p.runs += 1;
        p.items += log.items.len();
        p.acquired += log.acquired();
        p.attempts += log.attempts.len();
        for k in 0..3 {
            within[slot][k] += log.acquired_within(k as u32 + 1);
        }
    }
    if plates.is_empty() {
        return Err(Error::Argument("every log has zero attempts".into()));
    }
    for (p, w) in plates.iter_mut().zip(&within) {
        p.sr = p.acquired as f64 / p.attempts as f64;
        p.sr_k = w.map(|c| if p.items == 0 { 0.0 } else { c as f64 / p.items as f64 });
    }
    let total_items: usize = plates.iter().map(|p| p.items).sum();
    let aggregate = |values: Vec<f64>, pooled: f64| {
        let (mean, std) = mean_std(&values);
        Aggregate { mean, std, pooled }
    };
    let sr = aggregate(
        plates.iter().map(|p| p.sr).collect(),
        plates.iter().map(|p| p.acquired).sum::<usize>() as f64 / plates.iter().map(|p| p.attempts).sum::<usize>() as f64,
    );
    let sr_k = [0, 1, 2].map(|k| {
        let hits: usize = within.iter().map(|w| w[k]).sum();
        aggregate(plates.iter().map(|p| p.sr_k[k]).collect(), hits as f64 / total_items.max(1) as f64)
    });
    Ok(MetricsReport { policy: policy.name().to_string(), plates, sr, sr_k, excluded })
}

/// Two-sided paired bootstrap p-value for the mean per-plate SR difference.
///
/// Differences are centered to impose the null, resampled with replacement
/// over plates, and `p = (count + 1) / (resamples + 1)` where `count` is the
/// number of resampled means at least as extreme as the observed one.
pub fn bootstrap_compare(a: &MetricsReport, b: &MetricsReport, resamples: usize, seed: u64) -> Result<f64> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::Argument(format!("need at least {MIN_RESAMPLES} resamples, got {resamples}")));
    }
    let mut ids_a: Vec<&str> = a.plates.iter().map(|p| p.plate_id.as_str()).collect();
    let mut ids_b: Vec<&str> = b.plates.iter().map(|p| p.plate_id.as_str()).collect();
    ids_a.sort_unstable();
    ids_b.sort_unstable();
    if ids_a != ids_b || ids_a.is_empty() {
        return Err(Error::Argument("reports cover different plate sets".into()));
    }
    let diffs: Vec<f64> = a
        .plates
        .iter()
        .map(|pa| pa.sr - b.plate(&pa.plate_id).expect("plate sets match").sr)
        .collect();
    let n = diffs.len();
    let observed = diffs.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = diffs.iter().map(|d| d - observed).collect();
    let mut stream = rng::stream(seed, 0);
    let tol = 1e-12;
    let mut count = 0usize;
    for _ in 0..resamples {
        let total: f64 = (0..n).map(|_| centered[stream.gen_range(0..n)]).sum();
        if (total / n as f64).abs() >= observed.abs() - tol {
            count += 1;
        }
    }
    Ok((count + 1) as f64 / (resamples + 1) as f64)
}
