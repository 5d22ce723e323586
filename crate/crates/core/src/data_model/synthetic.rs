//! Synthetic firm-year corpora with controllable text and tabular signal.
//!
//! Distressed records carry a short phrase of distress-pool words inside the
//! auditor's report with probability `signal_strength` (and inside the
//! management statement with probability `signal_strength *
//! management_signal_ratio`), and have a subset of continuous variables
//! shifted by `tabular_signal_strength` standard deviations. Texts mix
//! stop words, numbers, capitalized entity names and Zipf-distributed
//! neutral words, with lengths drawn to match the quartiles of real filings.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::record::{FirmYearRecord, NUM_CONTINUOUS};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const CONSONANTS: &[u8] = b"bdfgkmnprtvz";
const VOWELS: &[u8] = b"ao";

/// English stop words sprinkled through generated text.
const FILLER_STOPWORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "that", "for", "it", "as", "was", "with", "be", "by",
    "on", "not", "this", "are", "or", "from", "at", "which", "have", "an", "we", "our", "has",
    "been", "its", "their", "there", "all", "such", "these", "other",
];

/// Continuous columns shifted for distressed records, with direction.
const SIGNAL_COLUMNS: &[(usize, f64)] = &[
    (9, -1.0),  // equity
    (26, -1.0), // net profit
    (7, -1.0),  // ebit
    (20, -1.0), // liquid assets
    (33, -1.0), // quick ratio
    (16, -1.0), // interest coverage
    (36, -1.0), // retained earnings
    (37, -1.0), // return on equity
    (38, 1.0),  // short-term bank debt
    (29, 1.0),  // other short debts
    (35, 1.0),  // relative debt change
    (0, 1.0),   // accounts payable
];

const REGIONS: &[&str] = &["capital", "zealand", "south", "central", "north"];
const SECTORS: &[&str] = &[
    "agriculture", "manufacturing", "energy", "construction", "trade", "transport", "hospitality",
    "information", "real_estate", "services",
];

/// Builds a pronounceable word from `syllables` consonant-vowel pairs. Words
/// built this way end in a vowel from {a, o} and are fixed points of the
/// Porter stemmer.
pub fn pseudo_word(rng: &mut impl Rng, syllables: usize) -> String {
    let mut w = String::with_capacity(2 * syllables);
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(rng).unwrap() as char);
        w.push(*VOWELS.choose(rng).unwrap() as char);
    }
    w
}

fn default_pools() -> (Vec<String>, Vec<String>) {
    let mut rng = stream_rng(0x5eed, "synthetic-vocabulary");
    let mut seen = HashSet::new();
    let mut draw = |n: usize, rng: &mut ChaCha8Rng| {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let w = pseudo_word(rng, 3);
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
        out
    };
    let neutral = draw(400, &mut rng);
    let distress = draw(24, &mut rng);
    (neutral, distress)
}

/// Parameters of a synthetic corpus. Identical specs produce identical corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    pub n_firms: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub neutral_pool: Vec<String>,
    pub distress_pool: Vec<String>,
    pub signal_strength: f64,
    pub tabular_signal_strength: f64,
    /// Management-statement signal relative to the auditor's report.
    pub management_signal_ratio: f64,
    /// Probability that a firm-year is followed by distress.
    pub base_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        let (neutral_pool, distress_pool) = default_pools();
        SyntheticCorpusSpec {
            n_firms: 1000,
            first_year: 2013,
            last_year: 2016,
            neutral_pool,
            distress_pool,
            signal_strength: 0.9,
            tabular_signal_strength: 0.3,
            management_signal_ratio: 0.5,
            base_rate: 0.03,
            seed: 0,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn new(n_firms: usize, signal_strength: f64, tabular_signal_strength: f64, seed: u64) -> Self {
        SyntheticCorpusSpec {
            n_firms,
            signal_strength,
            tabular_signal_strength,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], found {v}")))
            }
        };
        unit("signal_strength", self.signal_strength)?;
        unit("tabular_signal_strength", self.tabular_signal_strength)?;
        unit("management_signal_ratio", self.management_signal_ratio)?;
        unit("base_rate", self.base_rate)?;
        if self.first_year > self.last_year {
            return Err(Error::Config("first_year after last_year".into()));
        }
        if self.neutral_pool.is_empty() || self.distress_pool.is_empty() {
            return Err(Error::Config("token pools must be non-empty".into()));
        }
        let neutral: HashSet<&String> = self.neutral_pool.iter().collect();
        if let Some(w) = self.distress_pool.iter().find(|w| neutral.contains(w)) {
            return Err(Error::Config(format!(
                "distress and neutral pools overlap (token {w:?})"
            )));
        }
        Ok(())
    }
}

/// Draws from a two-piece normal with separate spreads below and above the median.
fn split_normal(rng: &mut impl Rng, median: f64, sigma_low: f64, sigma_high: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    if z < 0.0 {
        median + z * sigma_low
    } else {
        median + z * sigma_high
    }
}

// Quartiles: auditor 187/205/219 words, management 37/54/83 words. The
// spreads map the quartile gaps through the standard normal quartile 0.6745.
const Z_Q3: f64 = 0.674_489_750_196_081_7;

pub(crate) fn auditor_length(rng: &mut impl Rng) -> usize {
    let w = split_normal(rng, 205.0, 18.0 / Z_Q3, 14.0 / Z_Q3);
    w.round().max(20.0) as usize
}

pub(crate) fn management_length(rng: &mut impl Rng) -> usize {
    let (lo, med, hi) = (37f64.ln(), 54f64.ln(), 83f64.ln());
    let w = split_normal(rng, med, (med - lo) / Z_Q3, (hi - med) / Z_Q3).exp();
    w.round().max(5.0) as usize
}

enum Word {
    Plain(String),
    Entity(String),
}

struct TextGen<'a> {
    spec: &'a SyntheticCorpusSpec,
    zipf_cdf: Vec<f64>,
}

impl<'a> TextGen<'a> {
    fn new(spec: &'a SyntheticCorpusSpec) -> Self {
        let mut acc = 0.0;
        let mut zipf_cdf: Vec<f64> = (1..=spec.neutral_pool.len())
            .map(|r| {
                acc += 1.0 / r as f64;
                acc
            })
            .collect();
        for c in zipf_cdf.iter_mut() {
            *c /= acc;
        }
        TextGen { spec, zipf_cdf }
    }

    fn neutral(&self, rng: &mut impl Rng) -> String {
        let u: f64 = rng.gen();
        let i = self.zipf_cdf.partition_point(|&c| c < u).min(self.zipf_cdf.len() - 1);
        self.spec.neutral_pool[i].clone()
    }

    fn number(rng: &mut impl Rng) -> String {
        match rng.gen_range(0..3) {
            0 => format!("{}", rng.gen_range(2005..2020)),
            1 => format!("{}.{:02}.{}", rng.gen_range(1..29), rng.gen_range(1..13), rng.gen_range(2010..2018)),
            _ => {
                let n: u32 = rng.gen_range(1_000..9_999_999);
                let s = n.to_string();
                let mut grouped = String::new();
                for (i, ch) in s.chars().enumerate() {
                    if i > 0 && (s.len() - i) % 3 == 0 {
                        grouped.push(',');
                    }
                    grouped.push(ch);
                }
                grouped
            }
        }
    }

    /// Generates `len` words, optionally overwriting a random run with a
    /// distress phrase.
    fn words(&self, rng: &mut impl Rng, len: usize, entities: &[String], phrase: bool) -> Vec<Word> {
        let mut words: Vec<Word> = (0..len)
            .map(|_| {
                let u: f64 = rng.gen();
                if u < 0.36 {
                    Word::Plain(FILLER_STOPWORDS.choose(rng).unwrap().to_string())
                } else if u < 0.40 {
                    Word::Plain(Self::number(rng))
                } else if u < 0.42 {
                    Word::Entity(entities.choose(rng).unwrap().clone())
                } else {
                    Word::Plain(self.neutral(rng))
                }
            })
            .collect();
        if phrase {
            let plen = rng.gen_range(4..=7).min(len);
            let start = rng.gen_range(0..=len - plen);
            for w in &mut words[start..start + plen] {
                *w = Word::Plain(self.spec.distress_pool.choose(rng).unwrap().clone());
            }
        }
        words
    }

    fn render(rng: &mut impl Rng, words: Vec<Word>) -> String {
        let mut out = String::new();
        let mut sentence_left = 0usize;
        let total = words.len();
        for (i, word) in words.into_iter().enumerate() {
            let starts_sentence = sentence_left == 0;
            if starts_sentence {
                sentence_left = rng.gen_range(6..=14);
                if i > 0 {
                    out.push_str(if rng.gen_bool(0.1) { ".\n" } else { ". " });
                }
            } else {
                out.push(' ');
            }
            let text = match word {
                Word::Entity(name) => name,
                Word::Plain(w) if starts_sentence => capitalize(&w),
                Word::Plain(w) => w,
            };
            out.push_str(&text);
            sentence_left -= 1;
            if sentence_left > 2 && i + 1 < total && rng.gen_bool(0.06) {
                out.push(',');
            }
        }
        out.push('.');
        out
    }
}

fn capitalize(w: &str) -> String {
    let mut chars = w.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Generates the corpus described by `spec`.
pub fn generate_synthetic(spec: &SyntheticCorpusSpec) -> Result<Vec<FirmYearRecord>> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, "synthetic-corpus");
    let textgen = TextGen::new(spec);
    let auditor_firms: Vec<String> = (0..25)
        .map(|_| format!("{}{}", capitalize(&pseudo_word(&mut rng, 2)), "revision"))
        .collect();
    let year_span = (spec.last_year - spec.first_year + 1) as usize;
    let mut records = Vec::new();

    for f in 0..spec.n_firms {
        let firm_id = format!("firm{f:06}");
        let firm_name = format!("{}k", capitalize(&pseudo_word(&mut rng, 2)));
        let suffix = if rng.gen_bool(0.7) { "ApS" } else { "A/S" };
        let entities = vec![
            firm_name.clone(),
            format!("{firm_name} {suffix}"),
            auditor_firms.choose(&mut rng).unwrap().clone(),
        ];
        let firm_effect: Vec<f64> = (0..NUM_CONTINUOUS).map(|_| rng.sample(StandardNormal)).collect();
        let log_size_mean = 5e6f64.ln() - 0.374 * 1.5;
        let mut log_size: f64 = log_size_mean + 1.5 * rng.sample::<f64, _>(StandardNormal);
        let founded = spec.first_year - rng.gen_range(1..40);
        let private_limited = rng.gen_bool(0.7);
        let region = REGIONS.choose(&mut rng).unwrap();
        let sector = SECTORS.choose(&mut rng).unwrap();
        let start = spec.first_year + rng.gen_range(0..year_span) as i32;

        for year in start..=spec.last_year {
            let distressed = rng.gen_bool(spec.base_rate);
            let prev_log_size = log_size;
            log_size += 0.1 * rng.sample::<f64, _>(StandardNormal);
            let firm_size = log_size.exp();

            let mut continuous: Vec<f64> = firm_effect
                .iter()
                .map(|&u| {
                    let noise: f64 = rng.sample(StandardNormal);
                    let mut v = 0.8 * u + 0.6 * noise;
                    if rng.gen_bool(0.02) {
                        v += 10.0 * rng.sample::<f64, _>(StandardNormal);
                    }
                    v
                })
                .collect();
            if distressed {
                for &(j, dir) in SIGNAL_COLUMNS {
                    continuous[j] += dir * spec.tabular_signal_strength;
                }
            }
            continuous[2] = log_size - prev_log_size;
            continuous[21] = ((year - founded) as f64).ln();
            continuous[22] = log_size;

            let categorical = vec![
                if rng.gen_bool(0.01) { "yes" } else { "no" }.to_string(),
                if private_limited { "yes" } else { "no" }.to_string(),
                if continuous[35] > 1.5 { "yes" } else { "no" }.to_string(),
                if continuous[9] < -1.0 { "yes" } else { "no" }.to_string(),
                region.to_string(),
                sector.to_string(),
            ];

            let aud_phrase = distressed && rng.gen_bool(spec.signal_strength);
            let man_phrase =
                distressed && rng.gen_bool(spec.signal_strength * spec.management_signal_ratio);
            let aud_len = auditor_length(&mut rng);
            let man_len = management_length(&mut rng);
            let aud_words = textgen.words(&mut rng, aud_len, &entities, aud_phrase);
            let auditor_text = TextGen::render(&mut rng, aud_words);
            let man_words = textgen.words(&mut rng, man_len, &entities, man_phrase);
            let management_text = TextGen::render(&mut rng, man_words);

            records.push(FirmYearRecord {
                firm_id: firm_id.clone(),
                year,
                continuous,
                categorical,
                auditor_text,
                management_text,
                distressed,
                firm_size,
            });
            if distressed {
                // A distressed firm files no further reports.
                break;
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_fixed_seed() {
        let spec = SyntheticCorpusSpec::new(30, 0.9, 0.3, 11);
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticCorpusSpec::new(30, 0.9, 0.3, 12);
        assert_ne!(generate_synthetic(&spec).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn rejects_overlapping_pools() {
        let mut spec = SyntheticCorpusSpec::new(5, 0.5, 0.5, 0);
        spec.distress_pool.push(spec.neutral_pool[0].clone());
        assert!(matches!(generate_synthetic(&spec), Err(Error::Config(_))));
        let spec = SyntheticCorpusSpec::new(5, 1.5, 0.5, 0);
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn records_validate_and_firms_stop_after_distress() {
        let mut spec = SyntheticCorpusSpec::new(300, 0.9, 0.3, 3);
        spec.base_rate = 0.2;
        let records = generate_synthetic(&spec).unwrap();
        for (i, r) in records.iter().enumerate() {
            r.validate(i).unwrap();
            assert!((spec.first_year..=spec.last_year).contains(&r.year));
        }
        for pair in records.windows(2) {
            if pair[0].firm_id == pair[1].firm_id {
                assert!(!pair[0].distressed);
                assert_eq!(pair[1].year, pair[0].year + 1);
            }
        }
    }

    #[test]
    fn full_signal_separates_by_pool_membership() {
        let mut spec = SyntheticCorpusSpec::new(400, 1.0, 0.0, 5);
        spec.base_rate = 0.1;
        let pool: HashSet<String> = spec.distress_pool.iter().cloned().collect();
        let records = generate_synthetic(&spec).unwrap();
        assert!(records.iter().any(|r| r.distressed));
        for r in &records {
            let has = r
                .auditor_text
                .split(|c: char| !c.is_alphanumeric())
                .any(|w| pool.contains(&w.to_lowercase()));
            assert_eq!(has, r.distressed, "{}", r.record_id());
        }
    }

    #[test]
    fn text_lengths_follow_reported_quartiles() {
        let mut rng = stream_rng(1, "lengths");
        let quartiles = |mut v: Vec<usize>| {
            v.sort_unstable();
            let n = v.len();
            (v[n / 4] as f64, v[n / 2] as f64, v[3 * n / 4] as f64)
        };
        let aud = quartiles((0..20_000).map(|_| auditor_length(&mut rng)).collect());
        let man = quartiles((0..20_000).map(|_| management_length(&mut rng)).collect());
        for (got, want) in [(aud.0, 187.0), (aud.1, 205.0), (aud.2, 219.0), (man.0, 37.0), (man.1, 54.0), (man.2, 83.0)] {
            assert!((got - want).abs() <= 2.0, "quartile {got} vs {want}");
        }
    }
}
