//! LSTM over block representations with hand-written backpropagation
//! through time.
//!
//! Parameter layout: `W_f, W_i, W_u, W_o` (each `d x (d + n)`, acting on
//! `[h_{t-1}, z_t]`) followed by `b_f, b_i, b_u, b_o`.

use super::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmShape {
    /// Cell size `d`.
    pub cell: usize,
    /// Input length `n` (the block representation size).
    pub input: usize,
}

impl LstmShape {
    pub fn concat_len(&self) -> usize {
        self.cell + self.input
    }

    pub fn gate_weight_len(&self) -> usize {
        self.cell * self.concat_len()
    }

    pub fn param_len(&self) -> usize {
        4 * self.gate_weight_len() + 4 * self.cell
    }

    /// Offset of the bias of gate `g` (0 = f, 1 = i, 2 = u, 3 = o).
    pub fn bias_offset(&self, g: usize) -> usize {
        4 * self.gate_weight_len() + g * self.cell
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LstmCell<'a> {
    pub shape: LstmShape,
    pub params: &'a [f64],
}

impl LstmCell<'_> {
    fn gate_weights(&self, g: usize) -> &[f64] {
        let n = self.shape.gate_weight_len();
        &self.params[g * n..(g + 1) * n]
    }

    fn gate_bias(&self, g: usize) -> &[f64] {
        let o = self.shape.bias_offset(g);
        &self.params[o..o + self.shape.cell]
    }
}

/// Quantities of one active step kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStep {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub u: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    /// `None` for masked steps, which copy the state through.
    pub steps: Vec<Option<LstmStep>>,
}

/// Runs the recurrence from `h_0 = c_0 = 0`. `inputs[t]` is ignored where
/// `mask[t]` is false. Returns `h_1..h_T`.
pub fn lstm_forward(inputs: &[&[f64]], mask: &[bool], cell: &LstmCell<'_>) -> (Vec<Vec<f64>>, LstmCache) {
    let d = cell.shape.cell;
    let cl = cell.shape.concat_len();
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    let mut hs = Vec::with_capacity(inputs.len());
    let mut steps = Vec::with_capacity(inputs.len());
    for (t, z) in inputs.iter().enumerate() {
        if !mask[t] {
            hs.push(h.clone());
            steps.push(None);
            continue;
        }
        let mut x = Vec::with_capacity(cl);
        x.extend_from_slice(&h);
        x.extend_from_slice(z);
        let mut gates: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; d]);
        for (g, out) in gates.iter_mut().enumerate() {
            let w = cell.gate_weights(g);
            let b = cell.gate_bias(g);
            for r in 0..d {
                let row = &w[r * cl..(r + 1) * cl];
                let pre = b[r] + row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>();
                out[r] = if g == 2 { pre.tanh() } else { sigmoid(pre) };
            }
        }
        let [f, i, u, o] = gates;
        let c_prev = c.clone();
        for r in 0..d {
            c[r] = f[r] * c_prev[r] + i[r] * u[r];
        }
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        for r in 0..d {
            h[r] = o[r] * tanh_c[r];
        }
        hs.push(h.clone());
        steps.push(Some(LstmStep { x, f, i, u, o, c_prev, tanh_c }));
    }
    (hs, LstmCache { steps })
}

/// Backpropagates `dhs` (gradients w.r.t. each `h_t`) through time,
/// accumulating parameter gradients into `grads` (same layout as the
/// parameters). Returns gradients w.r.t. each input; masked steps get zeros.
pub fn lstm_backward(dhs: &[Vec<f64>], cache: &LstmCache, cell: &LstmCell<'_>, grads: &mut [f64]) -> Vec<Vec<f64>> {
    let d = cell.shape.cell;
    let n = cell.shape.input;
    let cl = cell.shape.concat_len();
    let gw = cell.shape.gate_weight_len();
    let mut dh_next = vec![0.0; d];
    let mut dc_next = vec![0.0; d];
    let mut dzs = vec![Vec::new(); dhs.len()];
    let mut dpre: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; d]);
    for t in (0..dhs.len()).rev() {
        let dh: Vec<f64> = dhs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let Some(step) = &cache.steps[t] else {
            dh_next = dh;
            dzs[t] = vec![0.0; n];
            continue;
        };
        let mut dc_prev = vec![0.0; d];
        for r in 0..d {
            let dc = dc_next[r] + dh[r] * step.o[r] * (1.0 - step.tanh_c[r] * step.tanh_c[r]);
            let (f, i, u, o) = (step.f[r], step.i[r], step.u[r], step.o[r]);
            dpre[0][r] = dc * step.c_prev[r] * f * (1.0 - f);
            dpre[1][r] = dc * u * i * (1.0 - i);
            dpre[2][r] = dc * i * (1.0 - u * u);
            dpre[3][r] = dh[r] * step.tanh_c[r] * o * (1.0 - o);
            dc_prev[r] = dc * f;
        }
        let mut dx = vec![0.0; cl];
        for (g, dp) in dpre.iter().enumerate() {
            let w = cell.gate_weights(g);
            let boff = cell.shape.bias_offset(g);
            for r in 0..d {
                let gr = dp[r];
                if gr == 0.0 {
                    continue;
                }
                grads[boff + r] += gr;
                let row = &w[r * cl..(r + 1) * cl];
                let grow = &mut grads[g * gw + r * cl..g * gw + (r + 1) * cl];
                for j in 0..cl {
                    grow[j] += gr * step.x[j];
                    dx[j] += gr * row[j];
                }
            }
        }
        dh_next = dx[..d].to_vec();
        dzs[t] = dx[d..].to_vec();
        dc_next = dc_prev;
    }
    dzs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn zero_parameters_give_zero_outputs() {
        let shape = LstmShape { cell: 3, input: 4 };
        let params = vec![0.0; shape.param_len()];
        let cell = LstmCell { shape, params: &params };
        let z = [1.0, -2.0, 3.0, 0.5];
        let (hs, _) = lstm_forward(&[&z, &z], &[true, true], &cell);
        assert!(hs.iter().flatten().all(|&h| h == 0.0));
    }

    /// Straight-line evaluation of the six gate equations for one step.
    #[test]
    fn single_step_matches_scalar_oracle() {
        let shape = LstmShape { cell: 2, input: 3 };
        let mut rng = stream_rng(4, "lstm");
        let params: Vec<f64> = (0..shape.param_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = [0.3, -0.7, 1.1];
        let cell = LstmCell { shape, params: &params };
        let (hs, _) = lstm_forward(&[&z], &[true], &cell);

        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let x = [0.0, 0.0, z[0], z[1], z[2]];
        let gate = |g: usize, r: usize| {
            let w = &params[g * 10 + r * 5..g * 10 + r * 5 + 5];
            let b = params[40 + g * 2 + r];
            w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3] + w[4] * x[4] + b
        };
        for r in 0..2 {
            let f = sig(gate(0, r));
            let i = sig(gate(1, r));
            let u = gate(2, r).tanh();
            let o = sig(gate(3, r));
            let c = f * 0.0 + i * u;
            let h = o * c.tanh();
            assert!((hs[0][r] - h).abs() < 1e-15);
        }
    }

    #[test]
    fn masked_tail_copies_state() {
        let shape = LstmShape { cell: 3, input: 2 };
        let mut rng = stream_rng(5, "lstm");
        let params: Vec<f64> = (0..shape.param_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cell = LstmCell { shape, params: &params };
        let z = [0.5, -0.5];
        let (hs, _) = lstm_forward(&[&z, &z, &[]], &[true, true, false], &cell);
        assert_eq!(hs[2], hs[1]);
    }
}
