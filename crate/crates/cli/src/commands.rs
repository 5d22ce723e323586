//! Subcommands and exit statuses.

use std::path::{Path, PathBuf};

use anyhow::Context;
use textrisk::data_model::{generate_synthetic, write_corpus};
use textrisk::evaluation::EvalReport;
use textrisk::reporting::{emit_run_report, RunArtifacts, METRICS_JSON};
use textrisk::rng::derive_seed;
use textrisk::Error;

use crate::config::{model_name, Overrides, RunConfig, RESOLVED_CONFIG};
use crate::pipeline::{Pipeline, HEATMAPS_JSON, VECTORS_FILE, VOCAB_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Writes a synthetic corpus to `out` (default: the configured corpus path).
    SynthData { out: Option<PathBuf> },
    Preprocess,
    TrainEmbeddings,
    Train,
    Evaluate,
    GridSearch,
    Heatmap,
    /// Assembles `report.html` from artifacts already in the output directory.
    Report,
    EndToEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub overrides: Overrides,
    pub command: Command,
}

/// Status for an error: the first library error in the chain decides.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) => EXIT_CONFIG,
                Error::Data(_) | Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } | Error::Checkpoint { .. } => {
                    EXIT_DATA
                }
                Error::NonFinite(_) => EXIT_NUMERIC,
                Error::Shape(_) => EXIT_INTERNAL,
            };
        }
    }
    EXIT_INTERNAL
}

pub fn resolve_config(inv: &Invocation) -> anyhow::Result<RunConfig> {
    let mut cfg = match &inv.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&inv.overrides);
    Ok(cfg.resolve()?)
}

fn copy_into(src: &Path, dst: &Path) -> anyhow::Result<()> {
    if let Some(parent) = dst.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("create {}", parent.display()))?;
    }
    std::fs::copy(src, dst)
        .map_err(|e| Error::Io { context: dst.display().to_string(), source: e })?;
    Ok(())
}

fn print_eval(eval: &EvalReport) {
    println!("{}", eval.text_table());
}

/// Loads `metrics.json`, the training logs and `heatmaps.json` from the
/// output directory and writes `report.html`.
fn report_from_artifacts(p: &Pipeline) -> anyhow::Result<()> {
    let out = &p.cfg.output_dir;
    let folds = p.fold_plan()?.folds();
    let mut logs = Vec::new();
    for &mode in &p.cfg.text_modes {
        for f in &folds {
            let path = out.join("models").join(mode.as_str()).join(format!("fold{f}.log.csv"));
            logs.push((format!("{} fold {f}", model_name(mode)), path));
        }
    }
    let heatmaps = out.join(HEATMAPS_JSON);
    let art = RunArtifacts::load(
        &out.join(RESOLVED_CONFIG),
        &out.join(METRICS_JSON),
        &logs,
        heatmaps.exists().then_some(heatmaps.as_path()),
    )
    .context("stage report")?;
    emit_run_report(out, &art).context("stage report")?;
    Ok(())
}

pub fn run(inv: &Invocation) -> anyhow::Result<()> {
    let cfg = resolve_config(inv)?;
    if cfg.deterministic {
        // Fails only if a pool already exists, e.g. when called twice in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    if let Command::SynthData { out } = &inv.command {
        let path = out.clone().unwrap_or_else(|| cfg.corpus.clone());
        let spec = cfg.synthetic.spec(derive_seed(cfg.seed, "synthetic"));
        let records = generate_synthetic(&spec).context("stage synth-data")?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).with_context(|| format!("create {}", parent.display()))?;
        }
        write_corpus(&path, &records).context("stage synth-data")?;
        cfg.write_resolved(&cfg.output_dir)?;
        let positives = records.iter().filter(|r| r.distressed).count();
        println!("wrote {} records ({positives} distressed) to {}", records.len(), path.display());
        return Ok(());
    }
    let p = Pipeline::open(cfg)?;
    let out = p.cfg.output_dir.clone();
    match &inv.command {
        Command::SynthData { .. } => unreachable!(),
        Command::Preprocess => {
            let pre = p.preprocess()?;
            copy_into(&pre.dir.join(VOCAB_FILE), &out.join("preprocess").join(VOCAB_FILE))?;
            println!("vocabulary of {} tokens", pre.vocab.len());
        }
        Command::TrainEmbeddings => {
            let pre = p.preprocess()?;
            let emb = p.embeddings(&pre)?;
            match &emb.dir {
                Some(dir) => {
                    copy_into(&dir.join(VECTORS_FILE), &out.join("embeddings").join(VECTORS_FILE))?;
                    println!("word vectors in {}", out.join("embeddings").display());
                }
                None => println!("embeddings.source = \"random\": nothing to train"),
            }
        }
        Command::Train => {
            for run in p.train_all()? {
                println!("{}: {} out-of-fold predictions", run.name, run.rows.len());
            }
        }
        Command::Evaluate => {
            let runs = p.train_all()?;
            print_eval(&p.evaluate(&runs)?);
        }
        Command::GridSearch => {
            let rows = p.grid_search()?;
            println!("rank  k  gamma  m  tau  d  lr  auc  se");
            for r in rows {
                println!(
                    "{} {} {} {} {} {} {} {:.4} {:.4}",
                    r.rank, r.block_size, r.filter_width, r.filters, r.pool_size, r.cell_size, r.learning_rate, r.mean_auc, r.se_auc
                );
            }
        }
        Command::Heatmap => {
            let runs = p.train_all()?;
            let docs = p.heatmaps(&runs)?;
            println!("{} heatmaps in {}", docs.len(), out.join("heatmaps").display());
        }
        Command::Report => {
            report_from_artifacts(&p)?;
            println!("report in {}", out.join("report.html").display());
        }
        Command::EndToEnd => {
            print_eval(&p.end_to_end()?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let wrap = |e: Error| anyhow::Error::new(e).context("stage x");
        assert_eq!(exit_code(&wrap(Error::Config("c".into()))), EXIT_CONFIG);
        assert_eq!(exit_code(&wrap(Error::Data("d".into()))), EXIT_DATA);
        assert_eq!(exit_code(&wrap(Error::NonFinite("n".into()))), EXIT_NUMERIC);
        assert_eq!(exit_code(&wrap(Error::Shape("s".into()))), EXIT_INTERNAL);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), EXIT_INTERNAL);
    }
}
