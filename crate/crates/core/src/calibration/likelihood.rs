use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationDataset;
use crate::error::{Error, Result};
use crate::model::{Property, PropertyLevel, LEVELS};
use crate::sim::Channel;

/// Minimum standard deviation of a fitted cell.
pub const DEFAULT_STD_FLOOR: f64 = 0.02;

const PROPERTIES: usize = 3;
const CELLS: usize = Channel::COUNT * PROPERTIES * LEVELS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian {
    pub fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * z * z - self.std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodCell {
    /// `None` until fitted or filled.
    pub gaussian: Option<Gaussian>,
    /// Estimated from rollouts at this level rather than interpolated.
    pub fitted: bool,
    pub count: u32,
}

/// Per `(channel, property, level)` Gaussian feature likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodModel {
    pub std_floor: f64,
    cells: Vec<LikelihoodCell>,
}

fn cell_index(channel: Channel, property: Property, level: PropertyLevel) -> usize {
    (channel.index() * PROPERTIES + property.index()) * LEVELS + level.index()
}

impl LikelihoodModel {
    /// Model with no cell filled.
    pub fn unfitted(std_floor: f64) -> Self {
        Self { std_floor, cells: vec![LikelihoodCell { gaussian: None, fitted: false, count: 0 }; CELLS] }
    }

    pub fn cell(&self, channel: Channel, property: Property, level: PropertyLevel) -> &LikelihoodCell {
        &self.cells[cell_index(channel, property, level)]
    }

    /// Overwrites one cell; `std` is floored.
    pub fn set(&mut self, channel: Channel, property: Property, level: PropertyLevel, mean: f64, std: f64) {
        let std = std.max(self.std_floor);
        self.cells[cell_index(channel, property, level)] =
            LikelihoodCell { gaussian: Some(Gaussian { mean, std }), fitted: true, count: 1 };
    }

    /// Every cell has a usable Gaussian.
    pub fn is_complete(&self) -> bool {
        self.cells.len() == CELLS
            && self.cells.iter().all(|c| c.gaussian.is_some_and(|g| g.std > 0.0 && g.mean.is_finite()))
    }

    pub fn gaussian(&self, channel: Channel, property: Property, level: PropertyLevel) -> Result<Gaussian> {
        self.cells
            .get(cell_index(channel, property, level))
            .and_then(|c| c.gaussian)
            .ok_or_else(|| Error::Model(format!("likelihood cell {}/{}/{level} is unfitted", channel.name(), property.name())))
    }

    pub fn log_likelihood(&self, channel: Channel, property: Property, level: PropertyLevel, x: f64) -> Result<f64> {
        Ok(self.gaussian(channel, property, level)?.log_density(x))
    }
}

/// Mean and sample standard deviation of sorted values.
fn moments(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// Fits per-level Gaussians from the dataset's rollouts, pooling skills.
pub fn fit_likelihoods(dataset: &CalibrationDataset, std_floor: f64) -> Result<LikelihoodModel> {
    if dataset.rollouts.is_empty() {
        return Err(Error::Fitting("no rollouts to fit".into()));
    }
    if !(std_floor > 0.0) {
        return Err(Error::Fitting(format!("std floor must be positive, got {std_floor}")));
    }
    let mut model = LikelihoodModel::unfitted(std_floor);
    for channel in Channel::ALL {
        for property in Property::ALL {
            let mut by_level: [Vec<f64>; LEVELS] = Default::default();
            for rollout in &dataset.rollouts {
                by_level[rollout.props.get(property).index()].push(rollout.observation.feature(channel));
            }
            let mut fitted: Vec<(usize, Gaussian)> = Vec::new();
            for (index, values) in by_level.iter_mut().enumerate() {
                if values.is_empty() {
                    continue;
                }
                let count = values.len() as u32;
                let (mean, std) = moments(values);
                let g = Gaussian { mean, std: std.max(std_floor) };
                model.cells[cell_index(channel, property, PropertyLevel::from_index(index))] =
                    LikelihoodCell { gaussian: Some(g), fitted: true, count };
                fitted.push((index, g));
            }
            if fitted.is_empty() {
                return Err(Error::Fitting(format!("{} has no fitted level for {}", property.name(), channel.name())));
            }
            for index in 0..LEVELS {
                let slot = cell_index(channel, property, PropertyLevel::from_index(index));
                if model.cells[slot].fitted {
                    continue;
                }
                let below = fitted.iter().rev().find(|(i, _)| *i < index);
                let above = fitted.iter().find(|(i, _)| *i > index);
                let g = match (below, above) {
                    (Some((i0, g0)), Some((i1, g1))) => {
                        let t = (index - i0) as f64 / (i1 - i0) as f64;
                        Gaussian { mean: g0.mean + t * (g1.mean - g0.mean), std: g0.std + t * (g1.std - g0.std) }
                    }
                    (Some((_, g)), None) | (None, Some((_, g))) => *g,
                    (None, None) => unreachable!("at least one level is fitted"),
                };
                model.cells[slot] = LikelihoodCell { gaussian: Some(g), fitted: false, count: 0 };
            }
        }
    }
    Ok(model)
}
