//! Prediction-exchange CSV (`record_id,fold_id,p_hat`) for scoring models
//! trained elsewhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub record_id: String,
    pub fold_id: i64,
    pub p_hat: f64,
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let ctx = || path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(ctx(), e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(ctx(), e))?;
    }
    w.flush().map_err(|e| Error::io(ctx(), e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let ctx = || path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(ctx(), e))?;
    let mut rows = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, row) in r.deserialize::<PredictionRow>().enumerate() {
        let row = row.map_err(|e| Error::csv(ctx(), e))?;
        if !(row.p_hat >= 0.0 && row.p_hat <= 1.0) {
            return Err(Error::Data(format!("{}: row {}: p_hat {} outside [0, 1]", ctx(), i + 1, row.p_hat)));
        }
        if !seen.insert(row.record_id.clone()) {
            return Err(Error::Data(format!("{}: duplicate record_id {}", ctx(), row.record_id)));
        }
        rows.push(row);
    }
    Ok(rows)
}
