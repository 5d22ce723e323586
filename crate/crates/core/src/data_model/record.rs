use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_CONTINUOUS: usize = 44;
pub const NUM_CATEGORICAL: usize = 6;

/// Continuous variable names. The published variable table lists 43 names
/// for 44 continuous slots; the last slot carries a placeholder name.
pub const CONTINUOUS_NAMES: [&str; NUM_CONTINUOUS] = [
    "accounts_payable",
    "accounts_receivable",
    "change_in_log_size",
    "corporation_tax",
    "current_assets",
    "deferred_tax",
    "depreciation",
    "ebit",
    "equity_to_invested_capital",
    "equity",
    "expected_dividends",
    "financial_assets",
    "financial_income",
    "financing_costs",
    "fixed_costs",
    "industry_avg_net_profit",
    "interest_coverage_ratio",
    "inventory",
    "invested_capital",
    "land_and_buildings",
    "liquid_assets",
    "log_age",
    "log_size",
    "long_term_bank_debt",
    "long_term_debt",
    "long_term_mortgage_debt",
    "net_profit",
    "other_operating_expenses",
    "other_receivables",
    "other_short_debts",
    "personnel_costs",
    "prepayments",
    "provisions",
    "quick_ratio",
    "receivables_from_related_parties",
    "relative_debt_change",
    "retained_earnings",
    "return_on_equity",
    "short_term_bank_debt",
    "short_term_mortgage_debt",
    "tangible_fixed_assets",
    "tax_expenses",
    "total_receivables",
    "unlisted_continuous_44",
];

pub const CATEGORICAL_NAMES: [&str; NUM_CATEGORICAL] = [
    "has_prior_distress",
    "is_private_limited",
    "large_debt_change",
    "negative_equity",
    "region",
    "sector",
];

/// One annual report: a firm-year observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmYearRecord {
    pub firm_id: String,
    /// Publication year of the annual report.
    pub year: i32,
    pub continuous: Vec<f64>,
    pub categorical: Vec<String>,
    pub auditor_text: String,
    pub management_text: String,
    /// Distress within two years of publication.
    pub distressed: bool,
    /// Total debt when equity is negative, otherwise total assets.
    pub firm_size: f64,
}

impl FirmYearRecord {
    /// Stable identifier of the observation (`<firm_id>-<year>`).
    pub fn record_id(&self) -> String {
        format!("{}-{}", self.firm_id, self.year)
    }

    pub fn label(&self) -> f64 {
        if self.distressed {
            1.0
        } else {
            0.0
        }
    }

    /// Checks the schema invariants. `index` is used in error messages only.
    pub fn validate(&self, index: usize) -> Result<()> {
        let id = self.record_id();
        if self.continuous.len() != NUM_CONTINUOUS {
            return Err(Error::Data(format!(
                "record {index} ({id}): expected {NUM_CONTINUOUS} continuous features, found {}",
                self.continuous.len()
            )));
        }
        if self.categorical.len() != NUM_CATEGORICAL {
            return Err(Error::Data(format!(
                "record {index} ({id}): expected {NUM_CATEGORICAL} categorical features, found {}",
                self.categorical.len()
            )));
        }
        if !(self.firm_size.is_finite() && self.firm_size > 0.0) {
            return Err(Error::Data(format!(
                "record {index} ({id}): firm_size must be positive, found {}",
                self.firm_size
            )));
        }
        if self.auditor_text.trim().is_empty() || self.management_text.trim().is_empty() {
            return Err(Error::Data(format!(
                "record {index} ({id}): both auditor_text and management_text are required"
            )));
        }
        Ok(())
    }
}

/// Reads a JSONL corpus, validating every record and rejecting duplicate ids.
pub fn read_corpus(path: &Path) -> Result<Vec<FirmYearRecord>> {
    let file = File::open(path).map_err(|e| Error::io(format!("open {}", path.display()), e))?;
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FirmYearRecord = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{} line {}", path.display(), lineno + 1), e))?;
        record.validate(records.len())?;
        if !seen.insert(record.record_id()) {
            return Err(Error::Data(format!(
                "{} line {}: duplicate record id {}",
                path.display(),
                lineno + 1,
                record.record_id()
            )));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Data(format!("{} contains no records", path.display())));
    }
    Ok(records)
}

pub fn write_corpus(path: &Path, records: &[FirmYearRecord]) -> Result<()> {
    let file =
        File::create(path).map_err(|e| Error::io(format!("create {}", path.display()), e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| Error::json("record", e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(format!("write {}", path.display()), e))?;
    }
    out.flush()
        .map_err(|e| Error::io(format!("write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FirmYearRecord {
        FirmYearRecord {
            firm_id: "f1".into(),
            year: 2014,
            continuous: vec![0.0; NUM_CONTINUOUS],
            categorical: vec!["a".into(); NUM_CATEGORICAL],
            auditor_text: "audit".into(),
            management_text: "mgmt".into(),
            distressed: false,
            firm_size: 1.0,
        }
    }

    #[test]
    fn rejects_unknown_fields() {
        let mut value = serde_json::to_value(sample()).unwrap();
        value["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<FirmYearRecord>(value).is_err());
    }

    #[test]
    fn validation() {
        assert!(sample().validate(0).is_ok());
        let mut r = sample();
        r.firm_size = 0.0;
        assert!(r.validate(0).is_err());
        let mut r = sample();
        r.continuous.pop();
        assert!(r.validate(0).is_err());
        let mut r = sample();
        r.management_text = "  ".into();
        assert!(r.validate(0).is_err());
    }

    #[test]
    fn corpus_round_trip_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        write_corpus(&path, &[sample()]).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), vec![sample()]);
        write_corpus(&path, &[sample(), sample()]).unwrap();
        let err = read_corpus(&path).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }
}
