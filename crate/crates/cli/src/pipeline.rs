//! Cached pipeline stages: preprocess, embeddings, cross-validated
//! training, evaluation, heatmaps and the run report.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::json;
use textrisk::baselines::{fit_logit, predict_logit};
use textrisk::data_model::{read_corpus, FeatureEncoder, FirmYearRecord};
use textrisk::embeddings::{load_pretrained, save_word_vectors, train_skipgram, EmbeddingMatrix};
use textrisk::evaluation::{
    evaluate, make_folds, read_predictions, write_predictions, EvalOptions, EvalReport, FoldPlan,
    ModelPredictions, PredictionRow, ScoredRecord,
};
use textrisk::network::{
    build_example, load_checkpoint, save_checkpoint, train, EncodedText, Example, ModelMeta, NetworkConfig,
    TextMode, TrainingLog,
};
use textrisk::reporting::{
    emit_run_report, heatmap_from_text, word_intensities, write_heatmap_pages, HeatmapDoc, RunArtifacts,
    METRICS_JSON,
};
use textrisk::rng::{derive_seed, stream_rng};
use textrisk::text_pipeline::Vocabulary;
use textrisk::{Error, Result};

use crate::cache::{sha256_hex, stage_key, Cache};
use crate::config::{model_name, EmbeddingSource, RunConfig, LOGIT_NAME, RESOLVED_CONFIG};

pub const VOCAB_FILE: &str = "vocab.json";
pub const ENCODED_FILE: &str = "encoded.jsonl";
pub const VECTORS_FILE: &str = "vectors.txt";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const HEATMAPS_JSON: &str = "heatmaps.json";
pub const METRICS_TXT: &str = "metrics.txt";
pub const GRID_CSV: &str = "grid.csv";

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { context: path.display().to_string(), source: e }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn copy_dir(src: &Path, dst: &Path) -> Result<()> {
    std::fs::create_dir_all(dst).map_err(|e| io_err(dst, e))?;
    let mut entries: Vec<_> = std::fs::read_dir(src)
        .map_err(|e| io_err(src, e))?
        .collect::<std::io::Result<_>>()
        .map_err(|e| io_err(src, e))?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let from = entry.path();
        let to = dst.join(entry.file_name());
        if from.is_dir() {
            copy_dir(&from, &to)?;
        } else {
            std::fs::copy(&from, &to).map_err(|e| io_err(&to, e))?;
        }
    }
    Ok(())
}

fn file_hash(path: &Option<PathBuf>) -> Result<Option<String>> {
    path.as_ref()
        .map(|p| std::fs::read(p).map(|b| sha256_hex(&b)).map_err(|e| io_err(p, e)))
        .transpose()
}

fn fold_tag(f: i64) -> String {
    format!("fold{f}")
}

/// One line of the encoded corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EncodedLine {
    record_id: String,
    #[serde(flatten)]
    text: EncodedText,
}

/// Vocabulary and token ids of every record, in corpus order.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub key: String,
    pub dir: PathBuf,
    pub vocab: Vocabulary,
    pub encoded: Vec<EncodedText>,
}

/// Word vectors for the text branch; `None` means random initialization.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub key: String,
    pub dir: Option<PathBuf>,
    pub matrix: Option<EmbeddingMatrix>,
}

/// Out-of-fold predictions of one cross-validated model.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub name: String,
    pub key: String,
    pub dir: PathBuf,
    pub rows: Vec<PredictionRow>,
    pub logs: Vec<(i64, TrainingLog)>,
}

impl ModelRun {
    pub fn predictions(&self) -> ModelPredictions {
        ModelPredictions {
            name: self.name.clone(),
            p_hat: self.rows.iter().map(|r| (r.record_id.clone(), r.p_hat)).collect(),
        }
    }

    pub fn checkpoint(&self, fold: i64) -> PathBuf {
        self.dir.join(format!("{}.ckpt", fold_tag(fold)))
    }
}

/// Ranked outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub rank: usize,
    pub block_size: usize,
    pub filter_width: usize,
    pub filters: usize,
    pub pool_size: usize,
    pub cell_size: usize,
    pub learning_rate: f64,
    pub mean_auc: f64,
    pub se_auc: f64,
    pub mean_log_score: f64,
    pub se_log_score: f64,
}

pub struct Pipeline {
    pub cfg: RunConfig,
    pub cache: Cache,
    pub records: Vec<FirmYearRecord>,
    corpus_hash: String,
}

impl Pipeline {
    /// Reads the corpus and prepares the cache. The resolved config is
    /// written to the output directory first.
    pub fn open(cfg: RunConfig) -> anyhow::Result<Self> {
        cfg.write_resolved(&cfg.output_dir)?;
        let bytes = std::fs::read(&cfg.corpus)
            .map_err(|e| Error::Data(format!("cannot read corpus {}: {e}", cfg.corpus.display())))?;
        let records = read_corpus(&cfg.corpus).context("stage load")?;
        let cache = Cache::for_output(&cfg.output_dir);
        Ok(Pipeline { corpus_hash: sha256_hex(&bytes), cfg, cache, records })
    }

    fn out(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.cfg.output_dir.join(rel)
    }

    pub fn fold_plan(&self) -> Result<FoldPlan> {
        make_folds(&self.records, self.cfg.folds, self.cfg.seed)
    }

    fn preprocess_key(&self) -> Result<String> {
        stage_key(
            "preprocess",
            &json!({
                "corpus": self.corpus_hash,
                "text": self.cfg.text,
                "stopword_file": file_hash(&self.cfg.text.stopword_file)?,
                "entity_file": file_hash(&self.cfg.text.entity_file)?,
            }),
        )
    }

    pub fn preprocess(&self) -> anyhow::Result<Preprocessed> {
        self.preprocess_inner().context("stage preprocess")
    }

    fn preprocess_inner(&self) -> Result<Preprocessed> {
        let key = self.preprocess_key()?;
        let stage = self.cache.stage("preprocess", &key, |dir| {
            let pipeline = self.cfg.text.pipeline()?;
            let processed: Vec<(Vec<String>, Vec<String>)> = self
                .records
                .iter()
                .map(|r| (pipeline.tokens(&r.auditor_text), pipeline.tokens(&r.management_text)))
                .collect();
            let vocab = Vocabulary::build(
                processed.iter().flat_map(|(a, m)| [a, m]),
                self.cfg.text.min_count,
            );
            vocab.save(&dir.join(VOCAB_FILE))?;
            let path = dir.join(ENCODED_FILE);
            let mut w = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
            for (r, (a, m)) in self.records.iter().zip(&processed) {
                let line = EncodedLine {
                    record_id: r.record_id(),
                    text: EncodedText { auditor: vocab.encode(a), management: vocab.encode(m) },
                };
                let s = serde_json::to_string(&line).map_err(|e| Error::Json { context: path.display().to_string(), source: e })?;
                writeln!(w, "{s}").map_err(|e| io_err(&path, e))?;
            }
            w.flush().map_err(|e| io_err(&path, e))?;
            log::info!("preprocess: {} records, vocabulary of {}", self.records.len(), vocab.len());
            Ok(())
        })?;
        let vocab = Vocabulary::load(&stage.path.join(VOCAB_FILE))?;
        let path = stage.path.join(ENCODED_FILE);
        let file = File::open(&path).map_err(|e| io_err(&path, e))?;
        let mut encoded = Vec::with_capacity(self.records.len());
        for (line, r) in BufReader::new(file).lines().zip(&self.records) {
            let line = line.map_err(|e| io_err(&path, e))?;
            let e: EncodedLine =
                serde_json::from_str(&line).map_err(|e| Error::Json { context: path.display().to_string(), source: e })?;
            if e.record_id != r.record_id() {
                return Err(Error::Data(format!("{}: record {} out of order", path.display(), e.record_id)));
            }
            encoded.push(e.text);
        }
        if encoded.len() != self.records.len() {
            return Err(Error::Data(format!("{}: {} of {} records", path.display(), encoded.len(), self.records.len())));
        }
        Ok(Preprocessed { key, dir: stage.path, vocab, encoded })
    }

    pub fn embeddings(&self, pre: &Preprocessed) -> anyhow::Result<Embeddings> {
        self.embeddings_inner(pre).context("stage train-embeddings")
    }

    fn embeddings_inner(&self, pre: &Preprocessed) -> Result<Embeddings> {
        let es = &self.cfg.embeddings;
        let dim = self.cfg.network.embedding_dim;
        let key = stage_key(
            "embeddings",
            &json!({
                "preprocess": pre.key,
                "embeddings": es,
                "dim": dim,
                "seed": self.cfg.seed,
                "pretrained": file_hash(&es.pretrained_path)?,
            }),
        )?;
        if es.source == EmbeddingSource::Random {
            return Ok(Embeddings { key, dir: None, matrix: None });
        }
        let stage = self.cache.stage("embeddings", &key, |dir| {
            let matrix = match es.source {
                EmbeddingSource::Skipgram => {
                    let corpus: Vec<Vec<u32>> =
                        pre.encoded.iter().flat_map(|e| [e.auditor.clone(), e.management.clone()]).collect();
                    let sg = es.skipgram(dim, derive_seed(self.cfg.seed, "skipgram"));
                    let out = train_skipgram(&corpus, pre.vocab.len(), &sg)?;
                    log::info!("train-embeddings: epoch losses {:?}", out.epoch_losses);
                    out.embedding
                }
                EmbeddingSource::Pretrained => {
                    let path = es.pretrained_path.as_ref().expect("checked at resolution");
                    let load = load_pretrained(path, &pre.vocab, dim, &mut stream_rng(self.cfg.seed, "pretrained-fill"))?;
                    log::info!("train-embeddings: pretrained coverage {:.3}", load.coverage);
                    load.embedding
                }
                EmbeddingSource::Random => unreachable!(),
            };
            save_word_vectors(&dir.join(VECTORS_FILE), &pre.vocab, &matrix)
        })?;
        let load = load_pretrained(&stage.path.join(VECTORS_FILE), &pre.vocab, dim, &mut stream_rng(0, "unused"))?;
        Ok(Embeddings { key, dir: Some(stage.path), matrix: Some(load.embedding) })
    }

    fn network_key(&self, net: &NetworkConfig, text: Option<(&Preprocessed, &Embeddings)>) -> Result<String> {
        stage_key(
            "network",
            &json!({
                "corpus": self.corpus_hash,
                "preprocess": text.map(|t| &t.0.key),
                "embeddings": text.map(|t| &t.1.key),
                "features": self.cfg.features,
                "network": net,
                "folds": self.cfg.folds,
                "seed": self.cfg.seed,
            }),
        )
    }

    fn encoders(&self, plan: &FoldPlan, f: i64) -> Result<(FeatureEncoder, Vec<usize>, Vec<usize>)> {
        let train_idx = plan.train_indices(f);
        let test_idx = plan.test_indices(f);
        let train_records: Vec<FirmYearRecord> = train_idx.iter().map(|&i| self.records[i].clone()).collect();
        Ok((FeatureEncoder::fit(&train_records, self.cfg.features.standardize)?, train_idx, test_idx))
    }

    /// Cross-validates the network `net` (its `text_mode` picks the
    /// segments). Each fold trains with seed `derive_seed(seed, "network/fold<f>")`
    /// so all text modes share validation splits and batch order.
    pub fn train_network(
        &self,
        net: &NetworkConfig,
        text: Option<(&Preprocessed, &Embeddings)>,
    ) -> anyhow::Result<ModelRun> {
        let name = model_name(net.text_mode);
        self.train_network_inner(net, text).with_context(|| format!("stage train ({name})"))
    }

    fn train_network_inner(&self, net: &NetworkConfig, text: Option<(&Preprocessed, &Embeddings)>) -> Result<ModelRun> {
        let mode = net.text_mode;
        let name = model_name(mode);
        if mode.has_text() && text.is_none() {
            return Err(Error::Config(format!("{name} needs preprocessed text")));
        }
        let text = if mode.has_text() { text } else { None };
        let key = self.network_key(net, text)?;
        let plan = self.fold_plan()?;
        let folds = plan.folds();
        let empty = EncodedText::default();
        let stage = self.cache.stage("network", &key, |dir| {
            let mut rows = Vec::with_capacity(self.records.len());
            for &f in &folds {
                let (enc, train_idx, test_idx) = self.encoders(&plan, f)?;
                let example = |i: usize| -> Result<Example> {
                    let r = &self.records[i];
                    let t = text.map_or(&empty, |(p, _)| &p.encoded[i]);
                    build_example(t, enc.encode(r), r.label(), mode, net.block_size)
                };
                let train_ex = train_idx.iter().map(|&i| example(i)).collect::<Result<Vec<_>>>()?;
                let test_ex = test_idx.iter().map(|&i| example(i)).collect::<Result<Vec<_>>>()?;
                let groups: Vec<String> = train_idx.iter().map(|&i| self.records[i].firm_id.clone()).collect();
                let mut config = net.clone();
                config.seed = derive_seed(self.cfg.seed, &format!("network/{}", fold_tag(f)));
                let meta = ModelMeta {
                    config,
                    vocab_size: text.map_or(0, |(p, _)| p.vocab.len()),
                    n_features: enc.dim(),
                    vocab_hash: text.map_or(String::new(), |(p, _)| p.vocab.content_hash()),
                };
                let start = std::time::Instant::now();
                let (params, log) = train(&train_ex, &groups, meta, text.and_then(|(_, e)| e.matrix.as_ref()))?;
                log::info!(
                    "{name} {}: {} epochs, best {:?}, {:.1}s",
                    fold_tag(f),
                    log.epochs.len(),
                    log.best_epoch,
                    start.elapsed().as_secs_f64()
                );
                let p = params.predict(&test_ex)?;
                for (&i, p) in test_idx.iter().zip(p) {
                    rows.push((i, PredictionRow { record_id: self.records[i].record_id(), fold_id: f, p_hat: p }));
                }
                save_checkpoint(&params, &dir.join(format!("{}.ckpt", fold_tag(f))))?;
                log.write_csv(&dir.join(format!("{}.log.csv", fold_tag(f))))?;
                enc.save(&dir.join(format!("{}.encoder.json", fold_tag(f))))?;
            }
            rows.sort_by_key(|(i, _)| *i);
            let rows: Vec<PredictionRow> = rows.into_iter().map(|(_, r)| r).collect();
            write_predictions(&dir.join(PREDICTIONS_FILE), &rows)
        })?;
        let rows = read_predictions(&stage.path.join(PREDICTIONS_FILE))?;
        let logs = folds
            .iter()
            .map(|&f| Ok((f, TrainingLog::read_csv(&stage.path.join(format!("{}.log.csv", fold_tag(f))))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelRun { name, key, dir: stage.path, rows, logs })
    }

    pub fn train_logit(&self) -> anyhow::Result<ModelRun> {
        self.train_logit_inner().context("stage train (Logit)")
    }

    fn train_logit_inner(&self) -> Result<ModelRun> {
        let key = stage_key(
            "logit",
            &json!({
                "corpus": self.corpus_hash,
                "features": self.cfg.features,
                "logit": self.cfg.logit,
                "folds": self.cfg.folds,
                "seed": self.cfg.seed,
            }),
        )?;
        let plan = self.fold_plan()?;
        let stage = self.cache.stage("logit", &key, |dir| {
            let mut rows = Vec::with_capacity(self.records.len());
            for f in plan.folds() {
                let (enc, train_idx, test_idx) = self.encoders(&plan, f)?;
                let x: Vec<Vec<f64>> = train_idx.iter().map(|&i| enc.encode(&self.records[i])).collect();
                let y: Vec<f64> = train_idx.iter().map(|&i| self.records[i].label()).collect();
                let model = fit_logit(&x, &y, self.cfg.logit.l2, enc.feature_names())?;
                let xt: Vec<Vec<f64>> = test_idx.iter().map(|&i| enc.encode(&self.records[i])).collect();
                for (&i, p) in test_idx.iter().zip(predict_logit(&model, &xt)?) {
                    rows.push((i, PredictionRow { record_id: self.records[i].record_id(), fold_id: f, p_hat: p }));
                }
                model.save(&dir.join(format!("{}.json", fold_tag(f))))?;
                enc.save(&dir.join(format!("{}.encoder.json", fold_tag(f))))?;
            }
            rows.sort_by_key(|(i, _)| *i);
            let rows: Vec<PredictionRow> = rows.into_iter().map(|(_, r)| r).collect();
            write_predictions(&dir.join(PREDICTIONS_FILE), &rows)
        })?;
        let rows = read_predictions(&stage.path.join(PREDICTIONS_FILE))?;
        Ok(ModelRun { name: LOGIT_NAME.to_string(), key, dir: stage.path, rows, logs: Vec::new() })
    }

    /// Trains every requested model, copying its artifacts to
    /// `models/<mode>/` (or `models/logit/`) and `predictions/<name>.csv`.
    pub fn train_all(&self) -> anyhow::Result<Vec<ModelRun>> {
        let needs_text = self.cfg.text_modes.iter().any(|m| m.has_text());
        let pre = if needs_text { Some(self.preprocess()?) } else { None };
        let emb = pre.as_ref().map(|p| self.embeddings(p)).transpose()?;
        let mut runs = Vec::new();
        for &mode in &self.cfg.text_modes {
            let net = NetworkConfig { text_mode: mode, ..self.cfg.network.clone() };
            let run = self.train_network(&net, pre.as_ref().zip(emb.as_ref()))?;
            self.publish(&run, &self.out(Path::new("models").join(mode.as_str())))?;
            runs.push(run);
        }
        if self.cfg.logit.enabled {
            let run = self.train_logit()?;
            self.publish(&run, &self.out("models/logit"))?;
            runs.push(run);
        }
        Ok(runs)
    }

    fn publish(&self, run: &ModelRun, dst: &Path) -> anyhow::Result<()> {
        copy_dir(&run.dir, dst)?;
        let p = self.out(Path::new("predictions").join(format!("{}.csv", run.name)));
        write_file(&p, std::fs::read(run.dir.join(PREDICTIONS_FILE)).map_err(|e| io_err(&run.dir, e))?)?;
        Ok(())
    }

    /// Scores all runs on the same folds; every model is tested against
    /// every other. Writes `metrics.json` and `metrics.txt`.
    pub fn evaluate(&self, runs: &[ModelRun]) -> anyhow::Result<EvalReport> {
        self.evaluate_inner(runs).context("stage evaluate")
    }

    fn evaluate_inner(&self, runs: &[ModelRun]) -> Result<EvalReport> {
        let report = self.score(runs)?;
        report.save(&self.out(METRICS_JSON))?;
        write_file(&self.out(METRICS_TXT), report.text_table())?;
        Ok(report)
    }

    fn score(&self, runs: &[ModelRun]) -> Result<EvalReport> {
        let plan = self.fold_plan()?;
        let records: Vec<ScoredRecord> = self
            .records
            .iter()
            .map(|r| ScoredRecord { record_id: r.record_id(), label: r.label(), firm_size: r.firm_size })
            .collect();
        let models: Vec<ModelPredictions> = runs.iter().map(ModelRun::predictions).collect();
        let opts = EvalOptions {
            size_threshold: self.cfg.size_threshold,
            references: runs.iter().map(|r| r.name.clone()).collect(),
        };
        evaluate(&models, &records, &plan, &opts)
    }

    /// Attention heatmaps of the `heatmap.count` records with the highest
    /// out-of-fold PD under the first text model, each scored by the model
    /// of the fold that held it out.
    pub fn heatmaps(&self, runs: &[ModelRun]) -> anyhow::Result<Vec<HeatmapDoc>> {
        self.heatmaps_inner(runs).context("stage heatmap")
    }

    fn heatmaps_inner(&self, runs: &[ModelRun]) -> Result<Vec<HeatmapDoc>> {
        let Some(mode) = self.cfg.text_modes.iter().copied().find(|m| m.has_text()) else {
            return Ok(Vec::new());
        };
        let name = model_name(mode);
        let run = runs
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Config(format!("heatmaps need the {name} model")))?;
        let pre = self.preprocess_inner()?;
        let pipeline = self.cfg.text.pipeline()?;
        let index: BTreeMap<String, usize> =
            self.records.iter().enumerate().map(|(i, r)| (r.record_id(), i)).collect();
        let mut ranked: Vec<&PredictionRow> = run.rows.iter().collect();
        ranked.sort_by(|a, b| b.p_hat.total_cmp(&a.p_hat).then_with(|| index[&a.record_id].cmp(&index[&b.record_id])));
        let mut docs = Vec::new();
        let mut loaded = BTreeMap::new();
        for row in ranked.into_iter().take(self.cfg.heatmap.count) {
            let i = index[&row.record_id];
            if !loaded.contains_key(&row.fold_id) {
                loaded.insert(row.fold_id, load_checkpoint(&run.checkpoint(row.fold_id))?);
            }
            let params = &loaded[&row.fold_id];
            params.check_vocab(&pre.vocab.content_hash())?;
            let r = &self.records[i];
            let t = &pre.encoded[i];
            let ex = build_example(t, vec![0.0; params.meta.n_features], r.label(), mode, params.config().block_size)?;
            let blocks = params.extract_attention(&ex)?;
            let n = t.select(mode).map_or(0, |ids| ids.len());
            let intensity = word_intensities(n, &blocks);
            let id = r.record_id();
            let mut push = |segment: &str, text: &str, range: std::ops::Range<usize>| {
                let processed = pipeline.process(text);
                docs.push(heatmap_from_text(&id, segment, text, &processed.spans, &intensity[range]));
            };
            match mode {
                TextMode::Aud => push("auditor", &r.auditor_text, 0..n),
                TextMode::Man => push("management", &r.management_text, 0..n),
                TextMode::AudMan => {
                    let a = t.auditor.len();
                    push("auditor", &r.auditor_text, 0..a);
                    push("management", &r.management_text, a + 1..n);
                }
                TextMode::None => unreachable!(),
            }
        }
        write_file(
            &self.out(HEATMAPS_JSON),
            serde_json::to_string_pretty(&docs).map_err(|e| Error::Json { context: HEATMAPS_JSON.into(), source: e })?,
        )?;
        write_heatmap_pages(&self.cfg.output_dir, &docs)?;
        Ok(docs)
    }

    /// Writes `report.html` (and refreshes `metrics.json`).
    pub fn report(&self, eval: &EvalReport, runs: &[ModelRun], heatmaps: Vec<HeatmapDoc>) -> anyhow::Result<()> {
        let config = std::fs::read_to_string(self.out(RESOLVED_CONFIG)).context("stage report")?;
        let training_logs = runs
            .iter()
            .flat_map(|r| r.logs.iter().map(move |(f, l)| (format!("{} fold {f}", r.name), l.clone())))
            .collect();
        let art = RunArtifacts { config, eval: eval.clone(), training_logs, heatmaps };
        emit_run_report(&self.cfg.output_dir, &art).context("stage report")?;
        Ok(())
    }

    /// All stages in order.
    pub fn end_to_end(&self) -> anyhow::Result<EvalReport> {
        let runs = self.train_all()?;
        let eval = self.evaluate(&runs)?;
        let heatmaps = self.heatmaps(&runs)?;
        self.report(&eval, &runs, heatmaps)?;
        Ok(eval)
    }

    /// Cross-validates every grid cell for the first requested text mode and
    /// ranks cells by mean AUC. Invalid cells are skipped with a warning.
    pub fn grid_search(&self) -> anyhow::Result<Vec<GridRow>> {
        let mode = *self
            .cfg
            .text_modes
            .first()
            .ok_or_else(|| Error::Config("grid search needs a text mode".into()))?;
        let pre = if mode.has_text() { Some(self.preprocess()?) } else { None };
        let emb = pre.as_ref().map(|p| self.embeddings(p)).transpose()?;
        let base = NetworkConfig { text_mode: mode, ..self.cfg.network.clone() };
        let mut rows = Vec::new();
        for cell in self.cfg.grid.cells(&base) {
            if let Err(e) = cell.validate() {
                log::warn!("grid-search: skipping cell k={} m={} tau={}: {e}", cell.block_size, cell.filters, cell.pool_size);
                continue;
            }
            let run = self.train_network(&cell, pre.as_ref().zip(emb.as_ref()))?;
            let eval = self.score(std::slice::from_ref(&run))?;
            let s = &eval.models[0];
            rows.push(GridRow {
                rank: 0,
                block_size: cell.block_size,
                filter_width: cell.filter_width,
                filters: cell.filters,
                pool_size: cell.pool_size,
                cell_size: cell.cell_size,
                learning_rate: cell.learning_rate,
                mean_auc: s.mean_auc,
                se_auc: s.se_auc,
                mean_log_score: s.mean_log_score,
                se_log_score: s.se_log_score,
            });
        }
        rows.sort_by(|a, b| b.mean_auc.total_cmp(&a.mean_auc));
        for (i, r) in rows.iter_mut().enumerate() {
            r.rank = i + 1;
        }
        let path = self.out(GRID_CSV);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Csv { context: path.display().to_string(), source: e })?;
        for r in &rows {
            w.serialize(r).map_err(|e| Error::Csv { context: path.display().to_string(), source: e })?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(rows)
    }
}
