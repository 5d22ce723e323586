use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{FirmYearRecord, CATEGORICAL_NAMES, CONTINUOUS_NAMES, NUM_CATEGORICAL, NUM_CONTINUOUS};
use crate::error::{Error, Result};

pub const ENCODER_FORMAT_VERSION: u32 = 1;

/// Lower and upper winsorization quantiles.
pub const WINSOR_LOW_Q: f64 = 0.05;
pub const WINSOR_HIGH_Q: f64 = 0.95;

const DEGENERATE_STD: f64 = 1e-12;

/// Quantile of an ascending-sorted slice by linear interpolation between
/// order statistics (position `(n - 1) * q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Per-feature statistics fitted on training rows: winsorization bounds,
/// standardization moments and categorical one-hot maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureEncoder {
    pub format_version: u32,
    pub winsor_low: Vec<f64>,
    pub winsor_high: Vec<f64>,
    pub standardize: bool,
    pub standardize_mean: Vec<f64>,
    pub standardize_std: Vec<f64>,
    /// Observed values per categorical feature, in one-hot order. Each
    /// feature also owns a trailing "unseen" slot.
    pub category_maps: Vec<BTreeMap<String, usize>>,
}

impl FeatureEncoder {
    /// Fits the encoder. Order of `records` does not matter.
    pub fn fit(records: &[FirmYearRecord], standardize: bool) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Data("no training rows".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if r.continuous.len() != NUM_CONTINUOUS {
                return Err(Error::Data(format!(
                    "row {i}: expected {NUM_CONTINUOUS} continuous features, found {}",
                    r.continuous.len()
                )));
            }
            if r.categorical.len() != NUM_CATEGORICAL {
                return Err(Error::Data(format!(
                    "row {i}: expected {NUM_CATEGORICAL} categorical features, found {}",
                    r.categorical.len()
                )));
            }
            if let Some(j) = r.continuous.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "row {i}, column {j} ({}): non-finite value {}",
                    CONTINUOUS_NAMES[j], r.continuous[j]
                )));
            }
        }

        let n = records.len() as f64;
        let mut winsor_low = Vec::with_capacity(NUM_CONTINUOUS);
        let mut winsor_high = Vec::with_capacity(NUM_CONTINUOUS);
        let mut means = Vec::with_capacity(NUM_CONTINUOUS);
        let mut stds = Vec::with_capacity(NUM_CONTINUOUS);
        let mut column = Vec::with_capacity(records.len());
        for j in 0..NUM_CONTINUOUS {
            column.clear();
            column.extend(records.iter().map(|r| r.continuous[j]));
            column.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&column, WINSOR_LOW_Q);
            let hi = quantile_sorted(&column, WINSOR_HIGH_Q);
            // Sorted order makes the moments independent of row order.
            let clamped = column.iter().map(|v| v.clamp(lo, hi));
            let mean = clamped.clone().sum::<f64>() / n;
            let var = clamped.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            winsor_low.push(lo);
            winsor_high.push(hi);
            means.push(mean);
            stds.push(if std > DEGENERATE_STD { std } else { 1.0 });
        }

        let category_maps = (0..NUM_CATEGORICAL)
            .map(|j| {
                let mut values: Vec<&str> =
                    records.iter().map(|r| r.categorical[j].as_str()).collect();
                values.sort_unstable();
                values.dedup();
                values
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (v.to_string(), i))
                    .collect()
            })
            .collect();

        Ok(FeatureEncoder {
            format_version: ENCODER_FORMAT_VERSION,
            winsor_low,
            winsor_high,
            standardize,
            standardize_mean: means,
            standardize_std: stds,
            category_maps,
        })
    }

    /// Length of every encoded vector.
    pub fn dim(&self) -> usize {
        NUM_CONTINUOUS + self.category_maps.iter().map(|m| m.len() + 1).sum::<usize>()
    }

    /// Clamps a continuous value of column `j` to its winsorization bounds.
    pub fn winsorize(&self, j: usize, value: f64) -> f64 {
        value.clamp(self.winsor_low[j], self.winsor_high[j])
    }

    /// Encodes one record: winsorized (and optionally standardized)
    /// continuous features followed by one-hot categoricals.
    pub fn encode(&self, record: &FirmYearRecord) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for (j, &value) in record.continuous.iter().enumerate() {
            let clamped = self.winsorize(j, value);
            out.push(if self.standardize {
                (clamped - self.standardize_mean[j]) / self.standardize_std[j]
            } else {
                clamped
            });
        }
        for (j, map) in self.category_maps.iter().enumerate() {
            let start = out.len();
            out.resize(start + map.len() + 1, 0.0);
            let slot = map.get(&record.categorical[j]).copied().unwrap_or(map.len());
            out[start + slot] = 1.0;
        }
        out
    }

    /// Names of the encoded coordinates, aligned with [`FeatureEncoder::encode`].
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = CONTINUOUS_NAMES.iter().map(|s| s.to_string()).collect();
        for (j, map) in self.category_maps.iter().enumerate() {
            let mut ordered: Vec<(&String, &usize)> = map.iter().collect();
            ordered.sort_by_key(|(_, &i)| i);
            for (value, _) in ordered {
                names.push(format!("{}={}", CATEGORICAL_NAMES[j], value));
            }
            names.push(format!("{}=<unseen>", CATEGORICAL_NAMES[j]));
        }
        names
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("encoder serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let enc: FeatureEncoder =
            serde_json::from_str(text).map_err(|e| Error::json("feature encoder", e))?;
        if enc.format_version != ENCODER_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported encoder format_version {}",
                enc.format_version
            )));
        }
        Ok(enc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::io(format!("write {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        Self::from_json(&text)
    }
}
