use textrisk::embeddings::{
    drop_probability, load_pretrained, positive_pairs, save_word_vectors, train_skipgram, EmbeddingMatrix, SkipGramConfig,
};
use textrisk::rng::stream_rng;
use textrisk::text_pipeline::{Vocabulary, SPECIAL_TOKENS};
use textrisk::Error;

#[test]
fn drop_probability_matches_the_subsampling_formula() {
    for &(f, t) in &[(0.1, 1e-3), (0.5, 1e-5), (1e-3, 1e-3), (1e-4, 1e-3)] {
        let expected = f64::max(0.0, 1.0 - (t / f as f64).sqrt());
        assert!((drop_probability(f, t) - expected).abs() < 1e-15);
    }
}

#[test]
fn positive_pairs_respect_the_window() {
    let seq = [5, 6, 7, 8, 9];
    let pairs = positive_pairs(&seq, 2);
    // Each position pairs with up to two neighbours per side: 2+3+4+3+2.
    assert_eq!(pairs.len(), 14);
    assert!(pairs.contains(&(5, 7)));
    assert!(!pairs.contains(&(5, 8)));
}

fn topic_corpus() -> Vec<Vec<u32>> {
    let mut rng = stream_rng(4, "topics");
    use rand::Rng;
    let base = SPECIAL_TOKENS.len() as u32;
    (0..400)
        .map(|i| {
            let topic = (i % 2) as u32 * 6;
            (0..12).map(|_| base + topic + rng.gen_range(0..6)).collect()
        })
        .collect()
}

fn config() -> SkipGramConfig {
    SkipGramConfig { window: 3, dim: 16, epochs: 5, subsample_threshold: 0.0, seed: 1, ..SkipGramConfig::default() }
}

#[test]
fn words_sharing_contexts_end_up_closer() {
    let corpus = topic_corpus();
    let vocab_size = SPECIAL_TOKENS.len() + 12;
    let out = train_skipgram(&corpus, vocab_size, &config()).unwrap();
    assert!(out.epoch_losses.first() > out.epoch_losses.last());
    let base = SPECIAL_TOKENS.len() as u32;
    let mut within = 0.0;
    let mut across = 0.0;
    for a in 0..6 {
        for b in 0..6 {
            if a != b {
                within += out.embedding.cosine(base + a, base + b);
            }
            across += out.embedding.cosine(base + a, base + 6 + b);
        }
    }
    assert!(within / 30.0 > across / 36.0 + 0.2, "within {} across {}", within / 30.0, across / 36.0);
}

#[test]
fn training_is_reproducible_for_a_seed() {
    let corpus = topic_corpus();
    let n = SPECIAL_TOKENS.len() + 12;
    let a = train_skipgram(&corpus, n, &config()).unwrap();
    let b = train_skipgram(&corpus, n, &config()).unwrap();
    assert_eq!(a.epoch_losses, b.epoch_losses);
    assert_eq!(a.embedding, b.embedding);
}

#[test]
fn word_vectors_round_trip_through_text_files() {
    let docs = vec![vec!["loss".to_string(), "debt".to_string(), "cash".to_string()]];
    let vocab = Vocabulary::build(docs.iter(), 1);
    let emb = EmbeddingMatrix::random(vocab.len(), 4, &mut stream_rng(2, "vectors"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.txt");
    save_word_vectors(&path, &vocab, &emb).unwrap();
    let loaded = load_pretrained(&path, &vocab, 4, &mut stream_rng(3, "fill")).unwrap();
    assert_eq!(loaded.coverage, 1.0);
    for t in ["loss", "debt", "cash"] {
        let id = vocab.lookup(t);
        assert_eq!(loaded.embedding.row(id), emb.row(id));
    }
    assert!(matches!(load_pretrained(&path, &vocab, 5, &mut stream_rng(3, "fill")), Err(Error::Config(_))));
}
