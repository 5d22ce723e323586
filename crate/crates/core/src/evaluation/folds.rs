use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data_model::FirmYearRecord;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FoldStrategy {
    /// Firms shuffled and dealt round-robin into this many folds.
    ByFirm(usize),
    /// One fold per publication year.
    ByYear,
}

impl Default for FoldStrategy {
    fn default() -> Self {
        FoldStrategy::ByFirm(10)
    }
}

impl fmt::Display for FoldStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldStrategy::ByFirm(k) => write!(f, "by_firm_k{k}"),
            FoldStrategy::ByYear => f.write_str("by_year"),
        }
    }
}

impl FromStr for FoldStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "by_year" {
            return Ok(FoldStrategy::ByYear);
        }
        s.strip_prefix("by_firm_k")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 2)
            .map(FoldStrategy::ByFirm)
            .ok_or_else(|| Error::Config(format!("unknown fold strategy {s:?} (expected by_firm_k10 or by_year)")))
    }
}

impl Serialize for FoldStrategy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FoldStrategy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fold id of every record. Firm folds are numbered from 0; year folds use
/// the year itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub strategy: FoldStrategy,
    pub seed: u64,
    pub assignments: Vec<i64>,
}

impl FoldPlan {
    /// Distinct fold ids, ascending.
    pub fn folds(&self) -> Vec<i64> {
        self.assignments.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn test_indices(&self, fold: i64) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: i64) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

pub fn make_folds(records: &[FirmYearRecord], strategy: FoldStrategy, seed: u64) -> Result<FoldPlan> {
    if records.is_empty() {
        return Err(Error::Data("cannot build folds for an empty corpus".into()));
    }
    let assignments = match strategy {
        FoldStrategy::ByYear => records.iter().map(|r| i64::from(r.year)).collect(),
        FoldStrategy::ByFirm(k) => {
            let mut firms: Vec<&str> = records
                .iter()
                .map(|r| r.firm_id.as_str())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if firms.len() < k {
                return Err(Error::Data(format!("{} firms cannot fill {k} folds", firms.len())));
            }
            firms.shuffle(&mut stream_rng(seed, "folds"));
            let fold_of: BTreeMap<&str, i64> = firms.iter().enumerate().map(|(i, f)| (*f, (i % k) as i64)).collect();
            records.iter().map(|r| fold_of[r.firm_id.as_str()]).collect()
        }
    };
    Ok(FoldPlan { strategy, seed, assignments })
}
