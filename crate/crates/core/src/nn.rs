//! Small dense-network plumbing shared by the feed-forward learner, the
//! CNN head and the ensemble chooser: linear layers, ReLU, softmax and
//! sigmoid losses, Adam, and a central-difference gradient checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Fully connected layer, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Xavier-uniform initialization.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Linear {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Linear {
            w,
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.clone();
        for (o, out_o) in out.iter_mut().enumerate() {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = 0.0;
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            *out_o += acc;
        }
        out
    }

    /// Accumulate weight/bias gradients for upstream `dy` at input `x`,
    /// and return the gradient with respect to `x`.
    pub fn backward(&self, x: &[f64], dy: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.in_dim];
        for (o, &d) in dy.iter().enumerate() {
            gb[o] += d;
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += d * x[i];
                dx[i] += d * row[i];
            }
        }
        dx
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Gradient through ReLU given the pre-activation values.
pub fn relu_backward(pre: &[f64], dy: &[f64]) -> Vec<f64> {
    pre.iter()
        .zip(dy)
        .map(|(&p, &d)| if p > 0.0 { d } else { 0.0 })
        .collect()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy loss of softmax(logits) against a class index, plus
/// the gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &[f64], class: usize) -> (f64, Vec<f64>) {
    let probs = softmax(logits);
    let loss = -(probs[class].max(1e-300)).ln();
    let mut dlogits = probs;
    dlogits[class] -= 1.0;
    (loss, dlogits)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Summed binary cross-entropy over independent outputs, with gradient
/// with respect to the logits.
pub fn sigmoid_bce(logits: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut dlogits = vec![0.0; logits.len()];
    for (i, (&z, &t)) in logits.iter().zip(targets).enumerate() {
        let s = sigmoid(z);
        // stable: log(1+exp(-|z|)) formulation
        loss += z.max(0.0) - z * t + (1.0 + (-z.abs()).exp()).ln();
        dlogits[i] = s - t;
    }
    (loss, dlogits)
}

/// Adam state for one parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Multi-layer perceptron: ReLU between layers, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

/// Forward pass bookkeeping for backprop: pre-activations and
/// post-activation inputs per layer.
pub struct MlpTrace {
    pub inputs: Vec<Vec<f64>>, // input to each layer
    pub pres: Vec<Vec<f64>>,   // pre-activation output of each layer
}

impl Mlp {
    pub fn new(dims: &[usize], rng: &mut ChaCha8Rng) -> Mlp {
        let layers = dims
            .windows(2)
            .map(|w| Linear::new(w[0], w[1], rng))
            .collect();
        Mlp { layers }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).pres.last().cloned().unwrap_or_default()
    }

    pub fn trace(&self, x: &[f64]) -> MlpTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pres = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(current.clone());
            let pre = layer.forward(&current);
            pres.push(pre.clone());
            current = if i + 1 < self.layers.len() {
                relu(&pre)
            } else {
                pre
            };
        }
        MlpTrace { inputs, pres }
    }

    /// Backprop from dL/dlogits; returns per-layer (gw, gb) and dL/dx.
    pub fn backward(&self, trace: &MlpTrace, dlogits: &[f64]) -> (Vec<(Vec<f64>, Vec<f64>)>, Vec<f64>) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
            .collect();
        let mut dy = dlogits.to_vec();
        for i in (0..self.layers.len()).rev() {
            let (gw, gb) = &mut grads[i];
            let dx = self.layers[i].backward(&trace.inputs[i], &dy, gw, gb);
            dy = if i > 0 {
                relu_backward(&trace.pres[i - 1], &dx)
            } else {
                dx
            };
        }
        (grads, dy)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }
}

/// A model whose parameters can be perturbed coordinate-wise for
/// central-difference checking.
pub trait DiffModel {
    type Input;
    fn group_names(&self) -> Vec<String>;
    fn group_len(&self, group: usize) -> usize;
    fn get_param(&self, group: usize, idx: usize) -> f64;
    fn set_param(&mut self, group: usize, idx: usize, value: f64);
    fn loss(&self, input: &Self::Input) -> f64;
    /// Analytic gradients, same group/index layout.
    fn grads(&self, input: &Self::Input) -> Vec<Vec<f64>>;
}

/// Relative error between analytic and numeric derivatives:
/// |a - n| / max(1e-8, |a| + |n|).
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-8)
}

/// Central-difference check over every parameter coordinate of every
/// group. Returns the maximum relative error.
pub fn gradient_check<M: DiffModel>(model: &mut M, input: &M::Input, epsilon: f64) -> f64 {
    assert!(
        (1e-6..=1e-3).contains(&epsilon),
        "epsilon must lie in [1e-6, 1e-3]"
    );
    let analytic = model.grads(input);
    let mut worst = 0.0f64;
    for g in 0..model.group_names().len() {
        for i in 0..model.group_len(g) {
            let original = model.get_param(g, i);
            model.set_param(g, i, original + epsilon);
            let plus = model.loss(input);
            model.set_param(g, i, original - epsilon);
            let minus = model.loss(input);
            model.set_param(g, i, original);
            let numeric = (plus - minus) / (2.0 * epsilon);
            worst = worst.max(rel_err(analytic[g][i], numeric));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn softmax_normalizes() {
        let probs = softmax(&[1.0, 2.0, 3.0, 4.0]);
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(probs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn linear_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = Linear::new(3, 2, &mut rng);
        let x = [0.3, -0.7, 1.1];
        let dy = [1.0, -2.0];
        let mut gw = vec![0.0; 6];
        let mut gb = vec![0.0; 2];
        let dx = layer.backward(&x, &dy, &mut gw, &mut gb);
        // loss = dy . forward(x); numeric derivative wrt each weight
        let eps = 1e-6;
        for wi in 0..6 {
            let mut plus = layer.clone();
            plus.w[wi] += eps;
            let mut minus = layer.clone();
            minus.w[wi] -= eps;
            let f = |l: &Linear| -> f64 {
                l.forward(&x).iter().zip(&dy).map(|(y, d)| y * d).sum()
            };
            let numeric = (f(&plus) - f(&minus)) / (2.0 * eps);
            assert!(rel_err(gw[wi], numeric) < 1e-6, "weight {wi}");
        }
        for i in 0..3 {
            let mut xp = x;
            xp[i] += eps;
            let mut xm = x;
            xm[i] -= eps;
            let f = |xx: &[f64]| -> f64 {
                layer.forward(xx).iter().zip(&dy).map(|(y, d)| y * d).sum()
            };
            let numeric = (f(&xp) - f(&xm)) / (2.0 * eps);
            assert!(rel_err(dx[i], numeric) < 1e-6, "input {i}");
        }
    }

    struct MlpCheck {
        mlp: Mlp,
    }

    impl DiffModel for MlpCheck {
        type Input = (Vec<f64>, usize);

        fn group_names(&self) -> Vec<String> {
            (0..self.mlp.layers.len())
                .flat_map(|i| vec![format!("w{i}"), format!("b{i}")])
                .collect()
        }

        fn group_len(&self, group: usize) -> usize {
            let layer = &self.mlp.layers[group / 2];
            if group % 2 == 0 {
                layer.w.len()
            } else {
                layer.b.len()
            }
        }

        fn get_param(&self, group: usize, idx: usize) -> f64 {
            let layer = &self.mlp.layers[group / 2];
            if group % 2 == 0 {
                layer.w[idx]
            } else {
                layer.b[idx]
            }
        }

        fn set_param(&mut self, group: usize, idx: usize, value: f64) {
            let layer = &mut self.mlp.layers[group / 2];
            if group % 2 == 0 {
                layer.w[idx] = value;
            } else {
                layer.b[idx] = value;
            }
        }

        fn loss(&self, input: &Self::Input) -> f64 {
            let logits = self.mlp.logits(&input.0);
            softmax_cross_entropy(&logits, input.1).0
        }

        fn grads(&self, input: &Self::Input) -> Vec<Vec<f64>> {
            let trace = self.mlp.trace(&input.0);
            let (_, dlogits) =
                softmax_cross_entropy(trace.pres.last().unwrap(), input.1);
            let (grads, _) = self.mlp.backward(&trace, &dlogits);
            grads
                .into_iter()
                .flat_map(|(gw, gb)| vec![gw, gb])
                .collect()
        }
    }

    #[test]
    fn mlp_gradients_check_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mlp = Mlp::new(&[5, 8, 4, 3], &mut rng);
        let mut model = MlpCheck { mlp };
        let input = (vec![0.2, -0.4, 0.9, 0.0, -1.3], 2usize);
        let worst = gradient_check(&mut model, &input, 1e-5);
        assert!(worst < 1e-6, "max rel err {worst}");
    }

    #[test]
    fn sigmoid_bce_gradients() {
        let logits = [0.5, -1.2, 2.0];
        let targets = [1.0, 0.0, 1.0];
        let (loss, dlogits) = sigmoid_bce(&logits, &targets);
        assert!(loss > 0.0);
        let eps = 1e-6;
        for i in 0..3 {
            let mut lp = logits;
            lp[i] += eps;
            let mut lm = logits;
            lm[i] -= eps;
            let numeric =
                (sigmoid_bce(&lp, &targets).0 - sigmoid_bce(&lm, &targets).0) / (2. * eps);
            assert!(rel_err(dlogits[i], numeric) < 1e-6);
        }
    }

    #[test]
    fn adam_reduces_a_quadratic() {
        let mut params = vec![5.0, -3.0];
        let mut adam = Adam::new(2, 0.1);
        for _ in 0..500 {
            let grads: Vec<f64> = params.iter().map(|&p| 2.0 * p).collect();
            adam.step(&mut params, &grads);
        }
        assert!(params.iter().all(|p| p.abs() < 1e-2), "{params:?}");
    }
}
