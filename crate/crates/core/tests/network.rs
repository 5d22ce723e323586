use rand::Rng;
use textrisk::network::{
    attention_forward, from_bytes, gradient_check, head_forward, to_bytes, train, AttentionHead,
    ConvShape, DenseHead, Example, GridSpec, HeadShape, ModelMeta, NetworkConfig, NetworkParams, TextMode, Trainer,
};
use textrisk::rng::stream_rng;
use textrisk::text_pipeline::blockify;

const VOCAB: usize = 12;
const FEATURES: usize = 3;

fn tiny_config(mode: TextMode, seed: u64) -> NetworkConfig {
    NetworkConfig {
        block_size: 6,
        filter_width: 3,
        pool_size: 2,
        filters: 2,
        cell_size: 3,
        embedding_dim: 4,
        text_mode: mode,
        seed,
        ..Default::default()
    }
}

fn tiny_params(mode: TextMode, seed: u64) -> NetworkParams {
    let meta = ModelMeta { config: tiny_config(mode, seed), vocab_size: VOCAB, n_features: FEATURES, vocab_hash: "tiny".into() };
    let mut p = NetworkParams::init(meta, &mut stream_rng(seed, "init")).unwrap();
    // Spread the embedding so that the text path carries real signal.
    let mut rng = stream_rng(seed, "spread");
    let v = p.config().embedding_dim;
    for i in p.layout.embedding.start + v..p.layout.embedding.end {
        p.values[i] = rng.gen_range(-1.0..1.0);
    }
    p
}

fn random_example(rng: &mut impl Rng, n_tokens: usize, k: usize) -> Example {
    let ids: Vec<u32> = (0..n_tokens).map(|_| rng.gen_range(1..VOCAB as u32)).collect();
    Example {
        blocks: Some(blockify(&ids, k).unwrap()),
        features: (0..FEATURES).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        label: f64::from(rng.gen_bool(0.5)),
    }
}

/// Two T=2 documents and one T=1 document padded by the batch.
fn tiny_batch(seed: u64) -> Vec<Example> {
    let mut rng = stream_rng(seed, "batch");
    vec![random_example(&mut rng, 8, 6), random_example(&mut rng, 9, 6), random_example(&mut rng, 5, 6)]
}

#[test]
fn analytic_gradient_matches_finite_differences_over_20_seeds() {
    for seed in 0..20 {
        let p = tiny_params(TextMode::Aud, seed);
        let batch = tiny_batch(seed);
        let refs: Vec<&Example> = batch.iter().collect();
        assert_eq!(refs[0].steps(), 2);
        let report = gradient_check(&p, &refs, 1e-5).unwrap();
        for (name, b) in &report.blocks {
            assert!(b.max_rel_error < 1e-4, "seed {seed} block {name}: {}", b.max_rel_error);
            assert!(b.checked > 0, "seed {seed} block {name} never checked");
        }
        assert!(report.skipped() * 100 <= report.checked(), "seed {seed}: {} skipped", report.skipped());
    }
}

#[test]
fn gradient_check_without_text_and_with_frozen_embeddings() {
    for seed in 0..3 {
        let batch = tiny_batch(seed);
        let refs: Vec<&Example> = batch.iter().collect();
        let p = tiny_params(TextMode::None, seed);
        assert!(gradient_check(&p, &refs, 1e-5).unwrap().max_rel_error() < 1e-4);
        let mut p = tiny_params(TextMode::Aud, seed);
        p.meta.config.fine_tune_embeddings = false;
        let mut g = vec![0.0; p.values.len()];
        p.batch_gradient(&refs, &mut g).unwrap();
        assert!(g[p.layout.embedding.clone()].iter().all(|&x| x == 0.0));
        assert!(gradient_check(&p, &refs, 1e-5).unwrap().max_rel_error() < 1e-4);
    }
}

#[test]
fn duplicated_sample_doubles_the_summed_gradient() {
    let p = tiny_params(TextMode::Aud, 3);
    let batch = tiny_batch(3);
    let mut single = vec![0.0; p.values.len()];
    let mut double = vec![0.0; p.values.len()];
    p.batch_gradient(&[&batch[0]], &mut single).unwrap();
    p.batch_gradient(&[&batch[0], &batch[0]], &mut double).unwrap();
    // Summed gradients are exactly 2x; the means therefore coincide.
    for (a, b) in single.iter().zip(&double) {
        assert_eq!(2.0 * a, 2.0 * b);
    }
}

#[test]
fn saturated_correct_predictions_give_zero_output_gradient() {
    let mut p = tiny_params(TextMode::Aud, 4);
    let b3 = p.layout.block("output.b").unwrap().offset;
    p.values[b3] = 800.0;
    let mut batch = tiny_batch(4);
    batch.iter_mut().for_each(|e| e.label = 1.0);
    let refs: Vec<&Example> = batch.iter().collect();
    let mut g = vec![0.0; p.values.len()];
    p.batch_gradient(&refs, &mut g).unwrap();
    for name in ["output.w", "output.b"] {
        let b = p.layout.block(name).unwrap();
        assert!(g[b.range()].iter().all(|&x| x == 0.0), "{name}");
    }
}

#[test]
fn pad_row_stays_zero_through_training_steps() {
    let p = tiny_params(TextMode::Aud, 5);
    let batch = tiny_batch(5);
    let refs: Vec<&Example> = batch.iter().collect();
    let mut t = Trainer::new(p);
    for _ in 0..20 {
        t.step(&refs).unwrap();
    }
    assert!(t.params.embedding_row(0).iter().all(|&x| x == 0.0));
}

#[test]
fn shape_law_over_the_default_grid() {
    for c in GridSpec::default().cells(&NetworkConfig::default()) {
        let s: ConvShape = c.conv_shape();
        let (k, g, tau, m) = (c.block_size, c.filter_width, c.pool_size, c.filters);
        assert_eq!(s.conv_len(), k - g + 1);
        assert_eq!(s.pooled_len(), k + 2 - g - tau);
        assert_eq!(s.output_len(), (k + 2 - g - tau) * m);
    }
}

#[test]
fn attention_softmax_oracle_and_trivial_cases() {
    let hs = vec![vec![1.0f64.ln()], vec![2.0f64.ln()], vec![3.0f64.ln()]];
    let params = [1.0, 0.0];
    let out = attention_forward(&hs, &[true; 3], &AttentionHead { dim: 1, params: &params }).unwrap();
    for (a, e) in out.alphas.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
        assert!((a - e).abs() < 1e-15);
    }
    let same = vec![vec![0.2, -0.4]; 4];
    let params = [0.7, -1.3, 0.1];
    let out = attention_forward(&same, &[true; 4], &AttentionHead { dim: 2, params: &params }).unwrap();
    assert!(out.alphas.iter().all(|&a| (a - 0.25).abs() < 1e-15));
    let out = attention_forward(&same[..1], &[true], &AttentionHead { dim: 2, params: &params }).unwrap();
    assert_eq!(out.alphas, vec![1.0]);
    assert_eq!(out.h_final, same[0]);
}

#[test]
fn head_matches_straight_line_oracle() {
    let shape = HeadShape { input: 4, hidden1: 5, hidden2: 3 };
    let mut rng = stream_rng(9, "head");
    let params: Vec<f64> = (0..shape.param_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = [0.5, -1.0, 2.0, 0.25];
    let (pd, _) = head_forward(&x, &DenseHead { shape, params: &params }).unwrap();

    let (w1, rest) = params.split_at(20);
    let (b1, rest) = rest.split_at(5);
    let (w2, rest) = rest.split_at(15);
    let (b2, rest) = rest.split_at(3);
    let (w3, b3) = rest.split_at(3);
    let l1: Vec<f64> = (0..5).map(|r| (b1[r] + (0..4).map(|c| w1[r * 4 + c] * x[c]).sum::<f64>()).max(0.0)).collect();
    let l2: Vec<f64> = (0..3).map(|r| (b2[r] + (0..5).map(|c| w2[r * 5 + c] * l1[c]).sum::<f64>()).max(0.0)).collect();
    let s = b3[0] + (0..3).map(|c| w3[c] * l2[c]).sum::<f64>();
    assert!((pd - 1.0 / (1.0 + (-s).exp())).abs() < 1e-12);

    let mut zero = vec![0.0; shape.param_len()];
    assert_eq!(head_forward(&x, &DenseHead { shape, params: &zero }).unwrap().0, 0.5);
    let b3 = shape.offsets()[5];
    zero[b3] = 3.0f64.ln();
    assert!((head_forward(&x, &DenseHead { shape, params: &zero }).unwrap().0 - 0.75).abs() < 1e-15);
}

#[test]
fn no_text_model_ignores_text() {
    let p = tiny_params(TextMode::None, 6);
    let mut rng = stream_rng(6, "ex");
    let a = random_example(&mut rng, 8, 6);
    let mut b = a.clone();
    b.blocks = Some(blockify(&[5, 6, 7, 8, 9, 10, 11, 1, 2, 3, 4, 5, 6, 7], 6).unwrap());
    let mut c = a.clone();
    c.blocks = None;
    let pa = p.forward(&a).unwrap();
    assert_eq!(pa, p.forward(&b).unwrap());
    assert_eq!(pa, p.forward(&c).unwrap());
}

#[test]
fn prediction_is_pure_and_batch_consistent() {
    let p = tiny_params(TextMode::Aud, 7);
    let mut rng = stream_rng(7, "ex");
    let mut examples: Vec<Example> = (0..10).map(|i| random_example(&mut rng, 3 + 2 * i, 6)).collect();
    examples.push(Example { blocks: Some(blockify(&[], 6).unwrap()), features: vec![0.0; FEATURES], label: 0.0 });
    let batch = p.predict(&examples).unwrap();
    for (ex, &pd) in examples.iter().zip(&batch) {
        assert_eq!(p.forward(ex).unwrap(), pd);
        assert!(pd > 0.0 && pd < 1.0);
    }
    assert_eq!(p.predict(&examples).unwrap(), batch);
    assert!(p.check_vocab("tiny").is_ok());
    assert!(p.check_vocab("other").is_err());
}

#[test]
fn attention_over_one_block_is_one() {
    let p = tiny_params(TextMode::Aud, 8);
    let ex = Example { blocks: Some(blockify(&[3, 4], 6).unwrap()), features: vec![0.0; FEATURES], label: 0.0 };
    let att = p.extract_attention(&ex).unwrap();
    assert_eq!(att.len(), 1);
    assert_eq!(att[0].alpha, 1.0);
    assert_eq!(att[0].ids, vec![3, 4]);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let p = tiny_params(TextMode::AudMan, 10);
    let bytes = to_bytes(&p).unwrap();
    let q = from_bytes(&bytes).unwrap();
    assert_eq!(p, q);
    let batch = tiny_batch(10);
    for ex in &batch {
        assert_eq!(p.forward(ex).unwrap().to_bits(), q.forward(ex).unwrap().to_bits());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    textrisk::network::save_checkpoint(&p, &path).unwrap();
    assert_eq!(textrisk::network::load_checkpoint(&path).unwrap(), p);

    let mut corrupt = bytes.clone();
    corrupt[40] ^= 1;
    assert!(from_bytes(&corrupt).is_err());
    assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
}

#[test]
fn loss_decreases_over_first_five_adam_steps_in_most_seeds() {
    let mut good = 0;
    for seed in 0..20 {
        let p = tiny_params(TextMode::Aud, 100 + seed);
        let mut rng = stream_rng(seed, "frozen");
        let batch: Vec<Example> = (0..16).map(|_| random_example(&mut rng, 8, 6)).collect();
        let refs: Vec<&Example> = batch.iter().collect();
        let mut t = Trainer::new(p);
        let mut losses = Vec::new();
        for _ in 0..6 {
            losses.push(t.step(&refs).unwrap());
        }
        if losses.windows(2).all(|w| w[1] < w[0]) {
            good += 1;
        }
    }
    assert!(good >= 18, "{good}/20");
}

#[test]
fn zero_epochs_return_initial_parameters() {
    let mut rng = stream_rng(11, "ex");
    let examples: Vec<Example> = (0..80).map(|_| random_example(&mut rng, 8, 6)).collect();
    let groups: Vec<String> = (0..80).map(|i| format!("firm{}", i / 2)).collect();
    let mut cfg = tiny_config(TextMode::Aud, 11);
    cfg.max_epochs = 0;
    let meta = ModelMeta { config: cfg, vocab_size: VOCAB, n_features: FEATURES, vocab_hash: "tiny".into() };
    let (p, log) = train(&examples, &groups, meta.clone(), None).unwrap();
    let init = NetworkParams::init(meta.clone(), &mut stream_rng(11, "network-init")).unwrap();
    assert_eq!(p.values, init.values);
    assert!(log.epochs.is_empty());

    let small = &examples[..10];
    assert!(train(small, &groups[..10], meta, None).is_err());
}

#[test]
fn training_is_deterministic() {
    let mut rng = stream_rng(12, "ex");
    let examples: Vec<Example> = (0..150).map(|_| { let n = 4 + rng.gen_range(0..12); random_example(&mut rng, n, 6) }).collect();
    let groups: Vec<String> = (0..150).map(|i| format!("firm{}", i / 3)).collect();
    let mut cfg = tiny_config(TextMode::Aud, 12);
    cfg.max_epochs = 3;
    cfg.batch_size = 16;
    let meta = ModelMeta { config: cfg, vocab_size: VOCAB, n_features: FEATURES, vocab_hash: "tiny".into() };
    let (a, la) = train(&examples, &groups, meta.clone(), None).unwrap();
    let (b, lb) = train(&examples, &groups, meta, None).unwrap();
    assert_eq!(la.losses(), lb.losses());
    assert_eq!(to_bytes(&a).unwrap(), to_bytes(&b).unwrap());
    assert!(!la.epochs.is_empty());
}
