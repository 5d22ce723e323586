use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::folds::{FoldPlan, FoldStrategy};
use super::metrics::{auc, log_score};
use super::ttest::paired_t_test;
use crate::error::{Error, Result};

/// What the scorer needs to know about a record.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub record_id: String,
    pub label: f64,
    pub firm_size: f64,
}

/// Out-of-fold predictions of one model keyed by record id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelPredictions {
    pub name: String,
    pub p_hat: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalOptions {
    /// Only records with `firm_size` strictly above this are scored.
    pub size_threshold: Option<f64>,
    /// Models every other model is tested against.
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub name: String,
    pub auc: Vec<f64>,
    pub log_score: Vec<f64>,
    pub mean_auc: f64,
    pub se_auc: f64,
    pub mean_log_score: f64,
    pub se_log_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model: String,
    pub reference: String,
    pub auc_p: f64,
    pub log_score_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: FoldStrategy,
    pub seed: u64,
    pub size_threshold: Option<f64>,
    pub folds: Vec<i64>,
    /// Records scored per fold after the size filter.
    pub scored: Vec<usize>,
    pub models: Vec<ModelScores>,
    pub references: Vec<String>,
    pub comparisons: Vec<Comparison>,
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Scores every model per fold on the held-out records passing the size
/// filter and tests each model against the reference models.
pub fn evaluate(
    models: &[ModelPredictions],
    records: &[ScoredRecord],
    plan: &FoldPlan,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if plan.assignments.len() != records.len() {
        return Err(Error::Shape(format!(
            "fold plan covers {} records, corpus has {}",
            plan.assignments.len(),
            records.len()
        )));
    }
    if models.is_empty() {
        return Err(Error::Config("no models to evaluate".into()));
    }
    for m in models {
        let missing: Vec<&str> = records
            .iter()
            .filter(|r| !m.p_hat.contains_key(&r.record_id))
            .map(|r| r.record_id.as_str())
            .collect();
        if !missing.is_empty() {
            let shown: Vec<&str> = missing.iter().take(10).copied().collect();
            return Err(Error::Data(format!(
                "model {} lacks predictions for {} records: {}{}",
                m.name,
                missing.len(),
                shown.join(", "),
                if missing.len() > shown.len() { ", ..." } else { "" }
            )));
        }
    }
    for r in &opts.references {
        if !models.iter().any(|m| &m.name == r) {
            return Err(Error::Config(format!("reference model {r} is not among the evaluated models")));
        }
    }
    let folds = plan.folds();
    if folds.len() < 2 {
        return Err(Error::Data(format!("{} fold(s); at least two are needed", folds.len())));
    }
    let mut per_fold: Vec<Vec<usize>> = Vec::with_capacity(folds.len());
    for &f in &folds {
        let idx: Vec<usize> = plan
            .test_indices(f)
            .into_iter()
            .filter(|&i| opts.size_threshold.is_none_or(|t| records[i].firm_size > t))
            .collect();
        if idx.is_empty() {
            return Err(Error::Data(format!("fold {f} has no records above the size threshold")));
        }
        per_fold.push(idx);
    }
    let mut scores = Vec::with_capacity(models.len());
    for m in models {
        let mut aucs = Vec::with_capacity(folds.len());
        let mut logs = Vec::with_capacity(folds.len());
        for (f, idx) in folds.iter().zip(&per_fold) {
            let p: Vec<f64> = idx.iter().map(|&i| m.p_hat[&records[i].record_id]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| records[i].label).collect();
            aucs.push(auc(&p, &y).map_err(|e| Error::Data(format!("model {}, fold {f}: {e}", m.name)))?);
            logs.push(log_score(&p, &y)?);
        }
        let (mean_auc, se_auc) = mean_se(&aucs);
        let (mean_log_score, se_log_score) = mean_se(&logs);
        scores.push(ModelScores { name: m.name.clone(), auc: aucs, log_score: logs, mean_auc, se_auc, mean_log_score, se_log_score });
    }
    let mut comparisons = Vec::new();
    for s in &scores {
        for r in &opts.references {
            if &s.name == r {
                continue;
            }
            let rs = scores.iter().find(|x| &x.name == r).expect("checked above");
            comparisons.push(Comparison {
                model: s.name.clone(),
                reference: r.clone(),
                auc_p: paired_t_test(&s.auc, &rs.auc)?.p_value,
                log_score_p: paired_t_test(&s.log_score, &rs.log_score)?.p_value,
            });
        }
    }
    Ok(EvalReport {
        strategy: plan.strategy,
        seed: plan.seed,
        size_threshold: opts.size_threshold,
        folds,
        scored: per_fold.iter().map(Vec::len).collect(),
        models: scores,
        references: opts.references.clone(),
        comparisons,
    })
}

impl EvalReport {
    pub fn model(&self, name: &str) -> Option<&ModelScores> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn p_value(&self, model: &str, reference: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.model == model && c.reference == reference)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("evaluation report", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// A cell is blank when the row model is itself a reference at or before
    /// the column's position, which gives the triangular layout.
    fn blank(&self, model: &str, col: usize) -> bool {
        self.references.iter().position(|r| r == model).is_some_and(|i| i <= col)
    }

    /// Two plain-text tables: mean AUC and mean log score, each with the
    /// p-values against every reference model.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let width = self.models.iter().map(|m| m.name.len()).max().unwrap_or(5).max(5);
        let sections: [(&str, fn(&ModelScores) -> (f64, f64), fn(&Comparison) -> f64, usize); 2] = [
            ("<AUC>", |m| (m.mean_auc, m.se_auc), |c| c.auc_p, 3),
            ("<L>", |m| (m.mean_log_score, m.se_log_score), |c| c.log_score_p, 4),
        ];
        let filter = match self.size_threshold {
            Some(t) => format!(", firm size > {t}"),
            None => String::new(),
        };
        let _ = writeln!(out, "{} folds ({}{filter})", self.folds.len(), self.strategy);
        for (title, stat, pval, prec) in sections {
            let _ = writeln!(out);
            let mut header = format!("{:<width$}  {:>18}", "Model", title);
            for r in &self.references {
                let _ = write!(header, "  {:>12}", format!("p_{r}"));
            }
            let _ = writeln!(out, "{header}");
            let _ = writeln!(out, "{}", "-".repeat(header.chars().count()));
            for m in &self.models {
                let (mean, se) = stat(m);
                let _ = write!(out, "{:<width$}  {:>18}", m.name, format!("{mean:.prec$} ({se:.prec$})"));
                for (col, r) in self.references.iter().enumerate() {
                    let cell = if self.blank(&m.name, col) {
                        "--".to_string()
                    } else {
                        self.p_value(&m.name, r).map_or("--".to_string(), |c| format!("{:.prec$}", pval(c)))
                    };
                    let _ = write!(out, "  {cell:>12}");
                }
                let _ = writeln!(out);
            }
        }
        out
    }
}
