use proptest::prelude::*;
use rand::Rng;
use textrisk::data_model::{
    generate_synthetic, read_corpus, write_corpus, FeatureEncoder, FirmYearRecord, SyntheticCorpusSpec,
    NUM_CATEGORICAL, NUM_CONTINUOUS, WINSOR_HIGH_Q, WINSOR_LOW_Q,
};
use textrisk::rng::stream_rng;
use textrisk::Error;

fn record(firm: usize, year: i32, x: f64, cat: &str) -> FirmYearRecord {
    FirmYearRecord {
        firm_id: format!("f{firm}"),
        year,
        continuous: vec![x; NUM_CONTINUOUS],
        categorical: vec![cat.to_string(); NUM_CATEGORICAL],
        auditor_text: "ok".into(),
        management_text: "ok".into(),
        distressed: false,
        firm_size: 1.0,
    }
}

#[test]
fn winsor_quantiles_are_five_and_ninety_five_percent() {
    assert_eq!(WINSOR_LOW_Q, 0.05);
    assert_eq!(WINSOR_HIGH_Q, 0.95);
}

#[test]
fn bounds_follow_linear_interpolation_of_training_values() {
    // 0..=100: the 5% and 95% quantiles are exactly 5 and 95.
    let train: Vec<FirmYearRecord> = (0..=100).map(|i| record(i, 2015, i as f64, "a")).collect();
    let enc = FeatureEncoder::fit(&train, false).unwrap();
    for j in 0..NUM_CONTINUOUS {
        assert_eq!(enc.winsor_low[j], 5.0);
        assert_eq!(enc.winsor_high[j], 95.0);
    }
    let x = enc.encode(&record(0, 2016, 1e9, "a"));
    assert_eq!(x[0], 95.0);
    let x = enc.encode(&record(0, 2016, -3.0, "a"));
    assert_eq!(x[0], 5.0);
}

#[test]
fn unseen_category_gets_its_own_slot() {
    let train: Vec<FirmYearRecord> = (0..10).map(|i| record(i, 2015, i as f64, if i % 2 == 0 { "a" } else { "b" })).collect();
    let enc = FeatureEncoder::fit(&train, true).unwrap();
    assert_eq!(enc.dim(), NUM_CONTINUOUS + NUM_CATEGORICAL * 3);
    assert_eq!(enc.feature_names().len(), enc.dim());
    let seen = enc.encode(&record(0, 2016, 1.0, "b"));
    let unseen = enc.encode(&record(0, 2016, 1.0, "zzz"));
    assert_eq!(&seen[NUM_CONTINUOUS..NUM_CONTINUOUS + 3], &[0.0, 1.0, 0.0]);
    assert_eq!(&unseen[NUM_CONTINUOUS..NUM_CONTINUOUS + 3], &[0.0, 0.0, 1.0]);
}

#[test]
fn standardized_training_features_have_zero_mean() {
    let records = generate_synthetic(&SyntheticCorpusSpec::new(80, 0.5, 0.5, 2)).unwrap();
    let enc = FeatureEncoder::fit(&records, true).unwrap();
    let rows: Vec<Vec<f64>> = records.iter().map(|r| enc.encode(r)).collect();
    for j in 0..NUM_CONTINUOUS {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
        assert!(mean.abs() < 1e-9, "feature {j}: mean {mean}");
    }
}

#[test]
fn encoder_survives_a_json_round_trip() {
    let records = generate_synthetic(&SyntheticCorpusSpec::new(30, 0.5, 0.5, 3)).unwrap();
    let enc = FeatureEncoder::fit(&records, true).unwrap();
    let back = FeatureEncoder::from_json(&enc.to_json()).unwrap();
    assert_eq!(back, enc);
    assert_eq!(back.encode(&records[0]), enc.encode(&records[0]));
}

#[test]
fn synthetic_corpus_is_reproducible_and_round_trips_through_jsonl() {
    let spec = SyntheticCorpusSpec::new(40, 0.8, 0.2, 9);
    let a = generate_synthetic(&spec).unwrap();
    assert_eq!(a, generate_synthetic(&spec).unwrap());
    assert_ne!(a, generate_synthetic(&SyntheticCorpusSpec { seed: 10, ..spec }).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    write_corpus(&path, &a).unwrap();
    assert_eq!(read_corpus(&path).unwrap(), a);
}

#[test]
fn malformed_records_are_rejected_with_their_id() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let mut bad = record(7, 2014, 0.0, "a");
    bad.continuous.pop();
    write_corpus(&path, &[bad]).unwrap();
    match read_corpus(&path) {
        Err(Error::Data(msg)) => assert!(msg.contains("f7-2014"), "{msg}"),
        other => panic!("expected a data error, got {other:?}"),
    }
    let dup = [record(1, 2014, 0.0, "a"), record(1, 2014, 0.0, "a")];
    write_corpus(&path, &dup).unwrap();
    assert!(matches!(read_corpus(&path), Err(Error::Data(_))));
}

proptest! {
    #[test]
    fn encoded_continuous_values_stay_within_training_bounds(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = stream_rng(seed, "prop-encoder");
        let train: Vec<FirmYearRecord> = (0..n).map(|i| {
            let mut r = record(i, 2015, 0.0, "a");
            for v in r.continuous.iter_mut() {
                *v = rng.gen_range(-1e3..1e3);
            }
            r
        }).collect();
        let enc = FeatureEncoder::fit(&train, false).unwrap();
        let mut probe = record(0, 2016, 0.0, "b");
        for v in probe.continuous.iter_mut() {
            *v = rng.gen_range(-1e6..1e6);
        }
        let x = enc.encode(&probe);
        prop_assert_eq!(x.len(), enc.dim());
        for j in 0..NUM_CONTINUOUS {
            prop_assert!(x[j] >= enc.winsor_low[j] && x[j] <= enc.winsor_high[j]);
        }
        let one_hot_sum: f64 = x[NUM_CONTINUOUS..].iter().sum();
        prop_assert_eq!(one_hot_sum, NUM_CATEGORICAL as f64);
    }
}
