use rand::Rng;
use textrisk::baselines::{fit_logit, fit_logit_traced, predict_logit};
use textrisk::rng::stream_rng;
use textrisk_oracles::{logit_objective, nelder_mead};

fn instance(seed: u64, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = stream_rng(seed, "logit-instance");
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let mut y: Vec<f64> = x.iter().map(|r| f64::from(rng.gen_bool(1.0 / (1.0 + (-(r[0] - 0.5 * r[1])).exp())))).collect();
    // Both classes must appear.
    y[0] = 1.0;
    y[1] = 0.0;
    (x, y)
}

#[test]
fn irls_matches_nelder_mead_on_50_small_instances() {
    for seed in 0..50 {
        let (x, y) = instance(seed, 8, 2);
        let l2 = 0.1;
        let m = fit_logit(&x, &y, l2, vec![]).unwrap();
        let oracle = nelder_mead(|t| -logit_objective(&x, &y, t[0], &t[1..], l2), &[0.0, 0.0, 0.0], 0.5, 1e-10);
        let fitted = [m.intercept, m.coefficients[0], m.coefficients[1]];
        for (a, b) in fitted.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-4, "seed {seed}: {fitted:?} vs {oracle:?}");
        }
    }
}

#[test]
fn objective_never_decreases_across_iterations() {
    for seed in 0..20 {
        let (x, y) = instance(100 + seed, 60, 4);
        let fit = fit_logit_traced(&x, &y, 1e-6, vec![]).unwrap();
        assert!(fit.converged, "seed {seed}: {:?} {:?}", fit.model, &fit.objective[fit.objective.len() - 3..]);
        // Non-decreasing up to the rounding of the objective itself.
        for w in fit.objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()), "seed {seed}: {:?}", fit.objective);
        }
    }
}

#[test]
fn heavy_penalty_shrinks_to_base_rate() {
    let (x, y) = instance(7, 200, 3);
    let rate = y.iter().sum::<f64>() / y.len() as f64;
    let target = (rate / (1.0 - rate)).ln();
    let mut prev_norm = f64::INFINITY;
    let mut prev_gap = f64::INFINITY;
    for l2 in [1e-2, 1.0, 1e2, 1e4, 1e6] {
        let m = fit_logit(&x, &y, l2, vec![]).unwrap();
        let norm = m.coefficients.iter().map(|b| b * b).sum::<f64>().sqrt();
        let gap = (m.intercept - target).abs();
        assert!(norm <= prev_norm, "l2 {l2}");
        assert!(gap <= prev_gap + 1e-12, "l2 {l2}");
        prev_norm = norm;
        prev_gap = gap;
    }
    assert!(prev_norm < 1e-3 && prev_gap < 1e-3);
}

#[test]
fn predictions_monotone_in_positive_feature() {
    let (x, y) = instance(8, 100, 2);
    let m = fit_logit(&x, &y, 1e-6, vec![]).unwrap();
    assert!(m.coefficients[0] > 0.0);
    let grid: Vec<Vec<f64>> = (0..50).map(|i| vec![-3.0 + 0.12 * i as f64, 0.4]).collect();
    let p = predict_logit(&m, &grid).unwrap();
    assert!(p.windows(2).all(|w| w[1] >= w[0]));
    assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
}

#[test]
fn fit_is_deterministic() {
    let (x, y) = instance(9, 80, 3);
    let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    assert_eq!(fit_logit(&x, &y, 1e-6, names.clone()).unwrap(), fit_logit(&x, &y, 1e-6, names).unwrap());
}
