use super::params::ParamLayout;
use crate::error::{Error, Result};

/// First and second moment estimates for every flat parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], step: 0, beta1, beta2, epsilon }
    }

    pub fn with_defaults(len: usize) -> Self {
        Self::new(len, 0.9, 0.999, 1e-8)
    }
}

/// One bias-corrected Adam update. A non-finite gradient aborts before any
/// parameter changes; the error names the offending block when a layout is
/// supplied.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    layout: Option<&ParamLayout>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "Adam given {} parameters, {} gradients, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        let block = layout.map_or("?", |l| l.block_of(i));
        return Err(Error::NonFinite(format!("gradient of parameter block {block} (index {i}) is {}", grads[i])));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        if *m == 0.0 {
            continue;
        }
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_each_coordinate_by_about_lr() {
        let mut p = vec![1.0, -2.0, 0.5];
        let g = [3.0, -0.01, 1e3];
        let mut s = AdamState::with_defaults(3);
        adam_step(&mut p, &g, &mut s, 1e-3, None).unwrap();
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        for (i, (&after, before)) in p.iter().zip([1.0, -2.0, 0.5]).enumerate() {
            let expected = before - 1e-3 * g[i] / (g[i].abs() + 1e-8);
            assert!((after - expected).abs() < 1e-15, "{i}");
        }
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut p = vec![0.3, -0.7];
        let mut s = AdamState::with_defaults(2);
        for _ in 0..50 {
            adam_step(&mut p, &[0.0, 0.0], &mut s, 1e-3, None).unwrap();
        }
        assert_eq!(p, vec![0.3, -0.7]);
    }

    #[test]
    fn identical_histories_identical_updates() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::with_defaults(2);
        for g in [0.5, -1.0, 2.0] {
            adam_step(&mut p, &[g, g], &mut s, 1e-2, None).unwrap();
        }
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = vec![0.0];
        let mut s = AdamState::with_defaults(1);
        let err = adam_step(&mut p, &[f64::NAN], &mut s, 1e-3, None).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(p, vec![0.0]);
        assert_eq!(s.step, 0);
    }
}
