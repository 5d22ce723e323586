use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::heatmap::{escape, heatmap_fragment, render_heatmap, HeatmapDoc};
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::network::TrainingLog;

pub const REPORT_HTML: &str = "report.html";
pub const METRICS_JSON: &str = "metrics.json";
pub const HEATMAP_DIR: &str = "heatmaps";

/// Everything a run report is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    /// Resolved configuration, echoed verbatim.
    pub config: String,
    pub eval: EvalReport,
    /// Training logs labelled e.g. `NN_aud fold 3`.
    pub training_logs: Vec<(String, TrainingLog)>,
    pub heatmaps: Vec<HeatmapDoc>,
}

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::Data(format!("missing artifact: {}", path.display())));
    }
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

impl RunArtifacts {
    /// Loads `config`, evaluation JSON, the listed training-log CSVs and a
    /// JSON list of heatmap documents; any missing file is named in the error.
    pub fn load(config: &Path, eval: &Path, logs: &[(String, PathBuf)], heatmaps: Option<&Path>) -> Result<Self> {
        let config_text = read(config)?;
        let eval_report: EvalReport =
            serde_json::from_str(&read(eval)?).map_err(|e| Error::json(eval.display().to_string(), e))?;
        let mut training_logs = Vec::with_capacity(logs.len());
        for (name, path) in logs {
            if !path.exists() {
                return Err(Error::Data(format!("missing artifact: {}", path.display())));
            }
            training_logs.push((name.clone(), TrainingLog::read_csv(path)?));
        }
        let heatmaps = match heatmaps {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::json(p.display().to_string(), e))?,
            None => Vec::new(),
        };
        Ok(Self { config: config_text, eval: eval_report, training_logs, heatmaps })
    }
}

fn loss_svg(log: &TrainingLog) -> String {
    let (w, h, pad) = (320.0, 160.0, 28.0);
    let points: Vec<(f64, f64, Option<f64>)> = log.epochs.iter().map(|e| (e.epoch as f64, e.train_loss, e.val_loss)).collect();
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">");
    let _ = write!(out, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\" stroke=\"#ccc\"/>");
    if points.is_empty() {
        out.push_str("<text x=\"10\" y=\"20\" font-size=\"12\">no epochs</text></svg>");
        return out;
    }
    let values: Vec<f64> = points.iter().flat_map(|p| std::iter::once(p.1).chain(p.2)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let max_epoch = points.last().map_or(1.0, |p| p.0).max(2.0);
    let x = |e: f64| pad + (e - 1.0) / (max_epoch - 1.0) * (w - 2.0 * pad);
    let y = |v: f64| h - pad - (v - lo) / span * (h - 2.0 * pad);
    let line = |vals: Vec<(f64, f64)>, color: &str| {
        let pts: Vec<String> = vals.iter().map(|&(e, v)| format!("{:.2},{:.2}", x(e), y(v))).collect();
        format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>", pts.join(" "))
    };
    out.push_str(&line(points.iter().map(|p| (p.0, p.1)).collect(), "#1f77b4"));
    let val: Vec<(f64, f64)> = points.iter().filter_map(|p| p.2.map(|v| (p.0, v))).collect();
    if !val.is_empty() {
        out.push_str(&line(val, "#d62728"));
    }
    let _ = write!(
        out,
        "<text x=\"{pad}\" y=\"14\" font-size=\"11\">loss {lo:.4} to {hi:.4}; blue train, red validation</text></svg>"
    );
    out
}

fn metrics_table(eval: &EvalReport) -> String {
    let mut out = String::from("<table>\n<tr><th>Model</th><th>&lt;AUC&gt;</th><th>SE</th><th>&lt;L&gt;</th><th>SE</th>");
    for r in &eval.references {
        let _ = write!(out, "<th>p_{0} (AUC)</th><th>p_{0} (L)</th>", escape(r));
    }
    out.push_str("</tr>\n");
    for m in &eval.models {
        let _ = write!(
            out,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td>",
            escape(&m.name),
            m.mean_auc,
            m.se_auc,
            m.mean_log_score,
            m.se_log_score
        );
        for r in &eval.references {
            match eval.p_value(&m.name, r) {
                Some(c) => {
                    let _ = write!(out, "<td>{}</td><td>{}</td>", c.auc_p, c.log_score_p);
                }
                None => out.push_str("<td>--</td><td>--</td>"),
            }
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");
    out
}

/// File name of a record's heatmap page, `<record_id>.html` with unsafe
/// characters replaced by `_`.
pub fn heatmap_file(record_id: &str) -> String {
    let safe: String = record_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{safe}.html")
}

/// Writes `heatmaps/<record_id>.html` under `dir`, one page per record in
/// order of first appearance.
pub fn write_heatmap_pages(dir: &Path, docs: &[HeatmapDoc]) -> Result<()> {
    let hdir = dir.join(HEATMAP_DIR);
    std::fs::create_dir_all(&hdir).map_err(|e| Error::io(hdir.display().to_string(), e))?;
    let mut order: Vec<&str> = Vec::new();
    for d in docs {
        if !order.contains(&d.record_id.as_str()) {
            order.push(&d.record_id);
        }
    }
    for id in order {
        let page: Vec<HeatmapDoc> = docs.iter().filter(|d| d.record_id == id).cloned().collect();
        let p = hdir.join(heatmap_file(id));
        std::fs::write(&p, render_heatmap(&page)).map_err(|e| Error::io(p.display().to_string(), e))?;
    }
    Ok(())
}

/// Writes `report.html`, `metrics.json` and `heatmaps/<record_id>.html`
/// into `dir`. Output bytes depend only on the artifacts.
pub fn emit_run_report(dir: &Path, art: &RunArtifacts) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let metrics = dir.join(METRICS_JSON);
    std::fs::write(&metrics, art.eval.to_json()?).map_err(|e| Error::io(metrics.display().to_string(), e))?;
    write_heatmap_pages(dir, &art.heatmaps)?;
    let html = render_run_report(art);
    let p = dir.join(REPORT_HTML);
    std::fs::write(&p, html).map_err(|e| Error::io(p.display().to_string(), e))
}

pub fn render_run_report(art: &RunArtifacts) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Run report</title>\n\
         <style>body { font-family: sans-serif; margin: 2em; } table { border-collapse: collapse; }\
         td, th { border: 1px solid #ccc; padding: 4px 8px; text-align: right; }\
         figure { display: inline-block; margin: 0 1em 1em 0; } pre { background: #f6f6f6; padding: 1em; }</style>\n\
         </head>\n<body>\n<h1>Run report</h1>\n",
    );
    let _ = writeln!(out, "<h2>Metrics</h2>\n<p>{} folds ({}).</p>", art.eval.folds.len(), art.eval.strategy);
    out.push_str(&metrics_table(&art.eval));
    let _ = writeln!(out, "<pre>{}</pre>", escape(&art.eval.text_table()));
    out.push_str("<h2>Training</h2>\n");
    for (name, log) in &art.training_logs {
        let _ = writeln!(out, "<figure>{}<figcaption>{}</figcaption></figure>", loss_svg(log), escape(name));
    }
    out.push_str("<h2>Attention heatmaps</h2>\n");
    if art.heatmaps.is_empty() {
        out.push_str("<p>No heatmaps.</p>\n");
    }
    for doc in &art.heatmaps {
        let _ = writeln!(
            out,
            "<h3><a href=\"{}/{}\">{}</a> ({})</h3>",
            HEATMAP_DIR,
            escape(&heatmap_file(&doc.record_id)),
            escape(&doc.record_id),
            escape(&doc.segment)
        );
        out.push_str(&heatmap_fragment(doc));
    }
    let _ = writeln!(out, "<h2>Configuration</h2>\n<pre>{}</pre>", escape(&art.config));
    out.push_str("</body>\n</html>\n");
    out
}
