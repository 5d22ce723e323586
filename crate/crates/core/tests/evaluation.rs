use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use textrisk::data_model::{FirmYearRecord, NUM_CATEGORICAL, NUM_CONTINUOUS};
use textrisk::evaluation::{
    auc, evaluate, log_score, make_folds, paired_t_test, EvalOptions, FoldStrategy, ModelPredictions, ScoredRecord,
};
use textrisk::network::bce_loss;
use textrisk_oracles::{pairwise_auc, t_two_tailed_p};

fn record(firm: &str, year: i32, distressed: bool, size: f64) -> FirmYearRecord {
    FirmYearRecord {
        firm_id: firm.to_string(),
        year,
        continuous: vec![0.0; NUM_CONTINUOUS],
        categorical: vec!["x".to_string(); NUM_CATEGORICAL],
        auditor_text: String::new(),
        management_text: String::new(),
        distressed,
        firm_size: size,
    }
}

/// Scores drawn from a small grid so that ties are common.
fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=200).prop_flat_map(|n| {
        (prop::collection::vec(0u8..20, n), prop::collection::vec(any::<bool>(), n)).prop_map(|(s, mut y)| {
            y[0] = true;
            y[1] = false;
            (s.into_iter().map(|v| f64::from(v) / 20.0).collect(), y.into_iter().map(f64::from).collect())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rank_auc_equals_pairwise_oracle((s, y) in instance()) {
        prop_assert!((auc(&s, &y).unwrap() - pairwise_auc(&s, &y)).abs() < 1e-12);
    }

    #[test]
    fn auc_invariant_under_increasing_maps((s, y) in instance(), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        let mapped: Vec<f64> = s.iter().map(|x| (a * x + b).exp() + x.powi(3)).collect();
        prop_assert_eq!(auc(&s, &y).unwrap(), auc(&mapped, &y).unwrap());
    }

    #[test]
    fn auc_of_negated_tie_free_scores_complements(n in 2usize..150, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = textrisk::rng::stream_rng(seed, "auc");
        let s: Vec<f64> = (0..n).map(|i| i as f64 + rng.gen_range(0.0..0.5)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.4))).collect();
        y[0] = 1.0;
        y[1] = 0.0;
        let neg: Vec<f64> = s.iter().map(|x| -x).collect();
        prop_assert!((auc(&s, &y).unwrap() + auc(&neg, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_score_equals_bce_loss(p in prop::collection::vec(0.0f64..=1.0, 1..100), bits in prop::collection::vec(any::<bool>(), 100)) {
        let y: Vec<f64> = bits[..p.len()].iter().map(|&b| f64::from(b)).collect();
        prop_assert!((log_score(&p, &y).unwrap() - bce_loss(&p, &y)).abs() < 1e-12);
    }
}

#[test]
fn t_test_matches_quadrature_oracle() {
    let r = paired_t_test(&[0.5, 0.6, 0.7], &[0.0; 3]).unwrap();
    assert!((r.t - 10.392304845413264).abs() < 1e-9);
    assert!((r.p_value - t_two_tailed_p(r.t, 2.0)).abs() < 1e-8);

    use rand::Rng;
    let mut rng = textrisk::rng::stream_rng(3, "ttest");
    for _ in 0..200 {
        let n = rng.gen_range(2..15);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.7..0.9)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.7..0.9)).collect();
        let r = paired_t_test(&a, &b).unwrap();
        let oracle = t_two_tailed_p(r.t, r.df);
        assert!((r.p_value - oracle).abs() < 1e-8, "t={} df={} {} vs {oracle}", r.t, r.df, r.p_value);
    }
}

#[test]
fn firm_folds_keep_firms_whole() {
    let mut records = Vec::new();
    for f in 0..57 {
        for y in 0..(1 + f % 4) {
            records.push(record(&format!("firm{f}"), 2013 + y, false, 1.0));
        }
    }
    let plan = make_folds(&records, FoldStrategy::ByFirm(10), 5).unwrap();
    assert_eq!(plan.folds(), (0..10).collect::<Vec<_>>());
    let mut fold_of: BTreeMap<&str, i64> = BTreeMap::new();
    for (r, &f) in records.iter().zip(&plan.assignments) {
        assert_eq!(*fold_of.entry(&r.firm_id).or_insert(f), f);
    }
    assert_eq!(plan, make_folds(&records, FoldStrategy::ByFirm(10), 5).unwrap());
    assert_ne!(plan, make_folds(&records, FoldStrategy::ByFirm(10), 6).unwrap());

    let years = make_folds(&records, FoldStrategy::ByYear, 0).unwrap();
    assert_eq!(years.folds(), vec![2013, 2014, 2015, 2016]);
    assert!(make_folds(&records[..5], FoldStrategy::ByFirm(10), 0).is_err());
}

fn toy() -> (Vec<FirmYearRecord>, Vec<ScoredRecord>) {
    let mut records = Vec::new();
    for f in 0..40 {
        records.push(record(&format!("f{f}"), 2014, f % 4 == 0, if f % 2 == 0 { 9e6 } else { 1e6 }));
    }
    let scored = records
        .iter()
        .map(|r| ScoredRecord { record_id: r.record_id(), label: r.label(), firm_size: r.firm_size })
        .collect();
    (records, scored)
}

fn preds(name: &str, records: &[FirmYearRecord], f: impl Fn(usize) -> f64) -> ModelPredictions {
    ModelPredictions {
        name: name.to_string(),
        p_hat: records.iter().enumerate().map(|(i, r)| (r.record_id(), f(i))).collect(),
    }
}

#[test]
fn evaluate_matches_direct_computation() {
    let (records, scored) = toy();
    let plan = make_folds(&records, FoldStrategy::ByFirm(2), 1).unwrap();
    let m = preds("m", &records, |i| ((i * 7919) % 100) as f64 / 100.0);
    let report = evaluate(&[m.clone()], &scored, &plan, &EvalOptions::default()).unwrap();
    for (k, &fold) in report.folds.iter().enumerate() {
        let idx = plan.test_indices(fold);
        let p: Vec<f64> = idx.iter().map(|&i| m.p_hat[&records[i].record_id()]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| records[i].label()).collect();
        assert_eq!(report.models[0].auc[k], auc(&p, &y).unwrap());
        assert_eq!(report.models[0].log_score[k], log_score(&p, &y).unwrap());
    }
}

#[test]
fn identical_models_have_unit_p_values() {
    let (records, scored) = toy();
    let plan = make_folds(&records, FoldStrategy::ByFirm(2), 1).unwrap();
    let f = |i: usize| ((i * 31) % 17) as f64 / 17.0;
    let models = [preds("a", &records, f), preds("b", &records, f)];
    let opts = EvalOptions { size_threshold: None, references: vec!["a".into()] };
    let report = evaluate(&models, &scored, &plan, &opts).unwrap();
    let c = report.p_value("b", "a").unwrap();
    assert_eq!((c.auc_p, c.log_score_p), (1.0, 1.0));
    assert!(report.text_table().contains("<AUC>"));
}

#[test]
fn size_filter_and_errors() {
    let (records, scored) = toy();
    let plan = make_folds(&records, FoldStrategy::ByFirm(2), 1).unwrap();
    let m = preds("m", &records, |i| (i % 10) as f64 / 10.0);
    let opts = EvalOptions { size_threshold: Some(5e6), references: vec![] };
    let report = evaluate(&[m.clone()], &scored, &plan, &opts).unwrap();
    assert_eq!(report.scored.iter().sum::<usize>(), 20);

    let opts = EvalOptions { size_threshold: Some(1e9), references: vec![] };
    let err = evaluate(&[m.clone()], &scored, &plan, &opts).unwrap_err().to_string();
    assert!(err.contains("fold 0"), "{err}");

    let mut partial = m;
    let dropped: BTreeSet<String> = ["f3-2014", "f5-2014"].iter().map(|s| s.to_string()).collect();
    partial.p_hat.retain(|k, _| !dropped.contains(k));
    let err = evaluate(&[partial], &scored, &plan, &EvalOptions::default()).unwrap_err().to_string();
    assert!(err.contains("f3-2014") && err.contains("f5-2014"), "{err}");
}
