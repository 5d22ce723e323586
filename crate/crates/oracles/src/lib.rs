//! Slow, obviously-correct reference computations for tests. Nothing here
//! shares code with the library it checks.

/// Fraction of positive-negative pairs ranked correctly, ties counted half.
pub fn pairwise_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1.0 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0.0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                credit += 1.0;
            } else if si == sj {
                credit += 0.5;
            }
        }
    }
    credit / pairs
}

/// Composite Gauss-Legendre (5 points per panel) of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        total += X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>();
    }
    total * 0.5 * h
}

/// Two-tailed Student-t p-value by quadrature. With `x = sqrt(df) tan θ`
/// the density becomes proportional to `cos^(df-1) θ` on `(-π/2, π/2)`, so
/// no gamma function is needed.
pub fn t_two_tailed_p(t: f64, df: f64) -> f64 {
    let theta = (t.abs() / df.sqrt()).atan();
    let f = |x: f64| x.cos().powf(df - 1.0);
    let inner = integrate(f, 0.0, theta, 2000);
    let half = integrate(f, 0.0, std::f64::consts::FRAC_PI_2, 2000);
    1.0 - inner / half
}

/// Nelder-Mead minimization with restarts until the simplex collapses below
/// `tol` in both value and size.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, tol: f64) -> Vec<f64> {
    let mut best = x0.to_vec();
    for _ in 0..20 {
        let next = nelder_mead_once(&f, &best, step, tol);
        let moved = next.iter().zip(&best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        best = next;
        if moved < tol {
            break;
        }
    }
    best
}

fn nelder_mead_once(f: &impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, tol: f64) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..200_000 {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let size = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < tol * 1e-3 && (values[n] - values[0]).abs() < tol * 1e-6 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };
        let reflected = along(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] { along(0.5) } else { along(-0.5) };
            let fc = f(&contracted);
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best].clone()
}

/// Penalized Bernoulli log-likelihood written out term by term.
pub fn logit_objective(x: &[Vec<f64>], y: &[f64], intercept: f64, beta: &[f64], l2: f64) -> f64 {
    let mut total = 0.0;
    for (row, &t) in x.iter().zip(y) {
        let mut s = intercept;
        for (a, b) in row.iter().zip(beta) {
            s += a * b;
        }
        let p = 1.0 / (1.0 + (-s).exp());
        total += t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    }
    let norm: f64 = beta.iter().map(|b| b * b).sum();
    total - 0.5 * l2 * norm
}
