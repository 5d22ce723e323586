//! Run configuration: one TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use textrisk::baselines::DEFAULT_L2;
use textrisk::data_model::SyntheticCorpusSpec;
use textrisk::embeddings::SkipGramConfig;
use textrisk::evaluation::FoldStrategy;
use textrisk::network::{GridSpec, NetworkConfig, TextMode};
use textrisk::text_pipeline::{
    read_word_list, IdentityStemmer, PorterStemmer, Scrubber, Stemmer, StopwordLanguage, TextPipeline,
    DEFAULT_MIN_COUNT,
};
use textrisk::{Error, Result};

/// File name of the resolved configuration written beside every run.
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSettings {
    pub n_firms: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub signal_strength: f64,
    pub tabular_signal_strength: f64,
    pub management_signal_ratio: f64,
    pub base_rate: f64,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        let d = SyntheticCorpusSpec::default();
        SyntheticSettings {
            n_firms: d.n_firms,
            first_year: d.first_year,
            last_year: d.last_year,
            signal_strength: d.signal_strength,
            tabular_signal_strength: d.tabular_signal_strength,
            management_signal_ratio: d.management_signal_ratio,
            base_rate: d.base_rate,
        }
    }
}

impl SyntheticSettings {
    /// Generator spec with the built-in word pools.
    pub fn spec(&self, seed: u64) -> SyntheticCorpusSpec {
        SyntheticCorpusSpec {
            n_firms: self.n_firms,
            first_year: self.first_year,
            last_year: self.last_year,
            signal_strength: self.signal_strength,
            tabular_signal_strength: self.tabular_signal_strength,
            management_signal_ratio: self.management_signal_ratio,
            base_rate: self.base_rate,
            seed,
            ..SyntheticCorpusSpec::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stopwords {
    English,
    Danish,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StemmerKind {
    Porter,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextSettings {
    pub min_count: usize,
    pub stopwords: Stopwords,
    /// Extra stop words, one per line.
    pub stopword_file: Option<PathBuf>,
    /// Entity dictionary, one entry per line.
    pub entity_file: Option<PathBuf>,
    pub capitalization_entities: bool,
    pub stemmer: StemmerKind,
}

impl Default for TextSettings {
    fn default() -> Self {
        TextSettings {
            min_count: DEFAULT_MIN_COUNT,
            stopwords: Stopwords::English,
            stopword_file: None,
            entity_file: None,
            capitalization_entities: true,
            stemmer: StemmerKind::Porter,
        }
    }
}

impl TextSettings {
    pub fn pipeline(&self) -> Result<TextPipeline> {
        let lang = match self.stopwords {
            Stopwords::English => StopwordLanguage::English,
            Stopwords::Danish => StopwordLanguage::Danish,
            Stopwords::None => StopwordLanguage::None,
        };
        let mut stop = lang.words();
        if let Some(p) = &self.stopword_file {
            stop.extend(read_word_list(p)?);
        }
        let entities = match &self.entity_file {
            Some(p) => read_word_list(p)?,
            None => Vec::new(),
        };
        let stemmer: Box<dyn Stemmer> = match self.stemmer {
            StemmerKind::Porter => Box::new(PorterStemmer),
            StemmerKind::None => Box::new(IdentityStemmer),
        };
        Ok(TextPipeline::new(stemmer, Scrubber::new(stop, entities), self.capitalization_entities))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    /// Skip-gram vectors trained on the corpus.
    Skipgram,
    /// Uniform random initialization, no pretraining.
    Random,
    /// A text word-vector file.
    Pretrained,
}

/// Word-vector settings; the dimension is `network.embedding_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub source: EmbeddingSource,
    pub pretrained_path: Option<PathBuf>,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub subsample_threshold: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        let d = SkipGramConfig::default();
        EmbeddingSettings {
            source: EmbeddingSource::Skipgram,
            pretrained_path: None,
            window: d.window,
            negatives_per_positive: d.negatives_per_positive,
            subsample_threshold: d.subsample_threshold,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
        }
    }
}

impl EmbeddingSettings {
    pub fn skipgram(&self, dim: usize, seed: u64) -> SkipGramConfig {
        SkipGramConfig {
            window: self.window,
            dim,
            negatives_per_positive: self.negatives_per_positive,
            subsample_threshold: self.subsample_threshold,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    /// Standardize continuous features after winsorization.
    pub standardize: bool,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings { standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogitSettings {
    pub enabled: bool,
    pub l2: f64,
}

impl Default for LogitSettings {
    fn default() -> Self {
        LogitSettings { enabled: true, l2: DEFAULT_L2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapSettings {
    /// Number of documents rendered, highest predicted distress first.
    pub count: usize,
}

impl Default for HeatmapSettings {
    fn default() -> Self {
        HeatmapSettings { count: 10 }
    }
}

/// Everything a run depends on. `network.seed` is ignored on input; the
/// resolved config records the top-level seed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    pub text_modes: Vec<TextMode>,
    pub folds: FoldStrategy,
    pub size_threshold: Option<f64>,
    pub deterministic: bool,
    pub synthetic: SyntheticSettings,
    pub text: TextSettings,
    pub embeddings: EmbeddingSettings,
    pub features: FeatureSettings,
    pub network: NetworkConfig,
    pub logit: LogitSettings,
    pub grid: GridSpec,
    pub heatmap: HeatmapSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            corpus: PathBuf::from("corpus.jsonl"),
            output_dir: PathBuf::from("out"),
            text_modes: TextMode::ALL.to_vec(),
            folds: FoldStrategy::default(),
            size_threshold: None,
            deterministic: false,
            synthetic: SyntheticSettings::default(),
            text: TextSettings::default(),
            embeddings: EmbeddingSettings::default(),
            features: FeatureSettings::default(),
            network: NetworkConfig::default(),
            logit: LogitSettings::default(),
            grid: GridSpec::default(),
            heatmap: HeatmapSettings::default(),
        }
    }
}

/// Fold flag values accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldFlag {
    ByFirm,
    ByYear,
}

impl std::str::FromStr for FoldFlag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "by-firm" => Ok(FoldFlag::ByFirm),
            "by-year" => Ok(FoldFlag::ByYear),
            _ => Err(format!("expected by-firm or by-year, found {s:?}")),
        }
    }
}

/// Values given on the command line; each replaces its config key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub text_mode: Option<TextMode>,
    pub size_threshold: Option<f64>,
    pub folds: Option<FoldFlag>,
    pub deterministic: bool,
    pub corpus: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {}", e.message())))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.corpus);
        rebase(&mut cfg.output_dir);
        for p in [&mut cfg.text.stopword_file, &mut cfg.text.entity_file, &mut cfg.embeddings.pretrained_path]
            .into_iter()
            .flatten()
        {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.text_mode {
            self.text_modes = vec![m];
        }
        if let Some(t) = o.size_threshold {
            self.size_threshold = Some(t);
        }
        match o.folds {
            Some(FoldFlag::ByYear) => self.folds = FoldStrategy::ByYear,
            Some(FoldFlag::ByFirm) if self.folds == FoldStrategy::ByYear => self.folds = FoldStrategy::default(),
            _ => {}
        }
        if o.deterministic {
            self.deterministic = true;
        }
        if let Some(p) = &o.corpus {
            self.corpus = p.clone();
        }
        if let Some(p) = &o.output_dir {
            self.output_dir = p.clone();
        }
    }

    /// Fills derived values and checks consistency.
    pub fn resolve(mut self) -> Result<Self> {
        self.network.seed = self.seed;
        self.network.validate()?;
        if self.text_modes.is_empty() && !self.logit.enabled {
            return Err(Error::Config("no models requested: text_modes is empty and logit is disabled".into()));
        }
        let mut seen = Vec::new();
        for m in &self.text_modes {
            if seen.contains(m) {
                return Err(Error::Config(format!("text mode {m} listed twice")));
            }
            seen.push(*m);
        }
        if self.embeddings.source == EmbeddingSource::Pretrained && self.embeddings.pretrained_path.is_none() {
            return Err(Error::Config("embeddings.source = \"pretrained\" needs embeddings.pretrained_path".into()));
        }
        if let Some(t) = self.size_threshold {
            if !t.is_finite() {
                return Err(Error::Config(format!("size_threshold must be finite, found {t}")));
            }
        }
        Ok(self)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(RESOLVED_CONFIG);
        std::fs::write(&path, self.to_toml()?)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Display name of the network trained in `mode`.
pub fn model_name(mode: TextMode) -> String {
    match mode {
        TextMode::None => "NN".to_string(),
        m => format!("NN_{m}"),
    }
}

pub const LOGIT_NAME: &str = "Logit";
