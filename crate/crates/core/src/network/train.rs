use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::model::Example;
use super::params::{ModelMeta, NetworkParams};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Batches are formed by sorting windows of this many batches by sequence
/// length, which keeps padding low without fixing the batch composition.
pub const BUCKET_WINDOW: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Empty when no validation split is used.
    pub val_loss: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.epochs {
            w.serialize(e).map_err(|e| Error::csv("training log", e))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(format!("training log: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        f.write_all(self.to_csv()?.as_bytes()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
        let epochs = r
            .deserialize()
            .collect::<std::result::Result<Vec<EpochRecord>, _>>()
            .map_err(|e| Error::csv(path.display().to_string(), e))?;
        Ok(Self { epochs, best_epoch: None })
    }

    /// Loss columns only, for comparisons that must ignore timing.
    pub fn losses(&self) -> Vec<(usize, f64, Option<f64>)> {
        self.epochs.iter().map(|e| (e.epoch, e.train_loss, e.val_loss)).collect()
    }
}

/// Holds out whole firms until at least `fraction` of the rows are in the
/// validation set. Returns `(train, validation)` row indices, each ascending.
pub fn split_validation(groups: &[String], fraction: f64, rng: &mut impl Rng) -> (Vec<usize>, Vec<usize>) {
    let target = (fraction * groups.len() as f64).round() as usize;
    let mut firms: Vec<&String> = groups.iter().collect::<BTreeSet<_>>().into_iter().collect();
    if target == 0 || firms.len() < 2 {
        return ((0..groups.len()).collect(), Vec::new());
    }
    firms.shuffle(rng);
    let mut held = BTreeSet::new();
    let mut count = 0;
    for f in firms.iter().take(firms.len() - 1) {
        if count >= target {
            break;
        }
        held.insert(*f);
        count += groups.iter().filter(|g| g == f).count();
    }
    (0..groups.len()).partition(|&i| !held.contains(&groups[i]))
}

/// Shuffled batches of similar sequence length.
pub fn make_batches(indices: &[usize], examples: &[Example], batch_size: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut order = indices.to_vec();
    order.shuffle(rng);
    let mut batches = Vec::new();
    for window in order.chunks_mut(batch_size * BUCKET_WINDOW) {
        window.sort_by_key(|&i| examples[i].steps());
        batches.extend(window.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

/// Parameters, optimizer state and a reusable gradient buffer.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub params: NetworkParams,
    pub adam: AdamState,
    grads: Vec<f64>,
}

impl Trainer {
    pub fn new(params: NetworkParams) -> Self {
        let c = params.config();
        let adam = AdamState::new(params.values.len(), c.adam_beta1, c.adam_beta2, c.adam_epsilon);
        let grads = vec![0.0; params.values.len()];
        Self { params, adam, grads }
    }

    /// One Adam step on `batch`; returns the batch loss before the update.
    pub fn step(&mut self, batch: &[&Example]) -> Result<f64> {
        let loss = self.params.batch_gradient(batch, &mut self.grads)?;
        let lr = self.params.config().learning_rate;
        adam_step(&mut self.params.values, &self.grads, &mut self.adam, lr, Some(&self.params.layout))?;
        Ok(loss)
    }

    pub fn last_gradient(&self) -> &[f64] {
        &self.grads
    }
}

/// Mini-batch Adam with early stopping on a by-firm validation split.
/// `groups[i]` is the firm of `examples[i]`. Returns the parameters of the
/// best validation epoch (the last epoch without validation).
pub fn train(
    examples: &[Example],
    groups: &[String],
    meta: ModelMeta,
    pretrained: Option<&EmbeddingMatrix>,
) -> Result<(NetworkParams, TrainingLog)> {
    let cfg = meta.config.clone();
    cfg.validate()?;
    if examples.len() != groups.len() {
        return Err(Error::Shape(format!("{} examples but {} group labels", examples.len(), groups.len())));
    }
    if examples.len() < cfg.batch_size {
        return Err(Error::Data(format!(
            "corpus of {} examples is smaller than one batch of {}",
            examples.len(),
            cfg.batch_size
        )));
    }
    let mut params = NetworkParams::init(meta, &mut stream_rng(cfg.seed, "network-init"))?;
    if let (Some(emb), true) = (pretrained, cfg.text_mode.has_text()) {
        params.set_embedding(emb)?;
    }
    let (train_idx, val_idx) = split_validation(groups, cfg.validation_fraction, &mut stream_rng(cfg.seed, "validation-split"));
    let val: Vec<Example> = val_idx.iter().map(|&i| examples[i].clone()).collect();

    let mut trainer = Trainer::new(params);
    let mut best = trainer.params.clone();
    let mut best_val = f64::INFINITY;
    let mut log = TrainingLog::default();
    let mut stale = 0;
    let mut batch_rng = stream_rng(cfg.seed, "batches");
    let start = Instant::now();
    for epoch in 1..=cfg.max_epochs {
        let batches = make_batches(&train_idx, examples, cfg.batch_size, &mut batch_rng);
        let mut total = 0.0;
        for b in &batches {
            let batch: Vec<&Example> = b.iter().map(|&i| &examples[i]).collect();
            total += trainer.step(&batch)? * batch.len() as f64;
        }
        let train_loss = total / train_idx.len() as f64;
        let val_loss = if val.is_empty() { None } else { Some(trainer.params.mean_loss(&val)?) };
        log.epochs.push(EpochRecord { epoch, train_loss, val_loss, wall_seconds: start.elapsed().as_secs_f64() });
        match val_loss {
            Some(v) if v < best_val => {
                best_val = v;
                best = trainer.params.clone();
                log.best_epoch = Some(epoch);
                stale = 0;
            }
            Some(_) => {
                stale += 1;
                if stale >= cfg.patience.max(1) {
                    break;
                }
            }
            None => {
                best = trainer.params.clone();
                log.best_epoch = Some(epoch);
            }
        }
    }
    Ok((best, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_split_keeps_firms_whole() {
        let groups: Vec<String> = (0..200).map(|i| format!("f{}", i / 3)).collect();
        let (tr, va) = split_validation(&groups, 0.1, &mut stream_rng(1, "v"));
        assert_eq!(tr.len() + va.len(), 200);
        assert!(va.len() >= 20 && va.len() <= 23);
        let held: BTreeSet<_> = va.iter().map(|&i| &groups[i]).collect();
        assert!(tr.iter().all(|&i| !held.contains(&groups[i])));
    }

    #[test]
    fn zero_fraction_keeps_everything() {
        let groups: Vec<String> = (0..10).map(|i| i.to_string()).collect();
        let (tr, va) = split_validation(&groups, 0.0, &mut stream_rng(1, "v"));
        assert_eq!(tr.len(), 10);
        assert!(va.is_empty());
    }

    #[test]
    fn log_csv_round_trip() {
        let log = TrainingLog {
            epochs: vec![
                EpochRecord { epoch: 1, train_loss: 0.5, val_loss: Some(0.25), wall_seconds: 1.5 },
                EpochRecord { epoch: 2, train_loss: 0.125, val_loss: None, wall_seconds: 3.0 },
            ],
            best_epoch: None,
        };
        let csv = log.to_csv().unwrap();
        assert!(csv.starts_with("epoch,train_loss,val_loss,wall_seconds\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        log.write_csv(&p).unwrap();
        assert_eq!(TrainingLog::read_csv(&p).unwrap(), log);
    }
}
