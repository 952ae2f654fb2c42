//! Fully-connected Q-network with rectifier hidden layers, plus the Adam
//! optimizer. Written against plain `Vec<f64>` so training stays
//! deterministic and dependency-free.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::LearnerError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    /// Row-major weights, `out_dim * in_dim`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Multilayer perceptron approximating the action-value function.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) layers: Vec<Layer>,
    sizes: Vec<usize>,
}

/// One labelled sample of a regression batch: the Q-value of `action` in
/// `state` is pulled toward `target`.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub state: &'a [f64],
    pub action: usize,
    pub target: f64,
}

/// Per-parameter gradient accumulator, mirroring the network shape.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect(),
        }
    }

    fn clear(&mut self) {
        for (w, b) in &mut self.layers {
            w.fill(0.0);
            b.fill(0.0);
        }
    }
}

/// Reusable forward/backward scratch buffers.
#[derive(Debug, Clone)]
pub struct Workspace {
    /// Activations per layer boundary; `acts[0]` is the input.
    acts: Vec<Vec<f64>>,
    /// Pre-activations per layer.
    zs: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Mlp {
    /// He-uniform initialization; biases start at zero.
    pub fn init(sizes: &[usize], rng: &mut ChaCha8Rng) -> Result<Self, LearnerError> {
        Self::validate_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                let limit = (6.0 / in_dim as f64).sqrt();
                let w = (0..in_dim * out_dim)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                Layer {
                    w,
                    b: vec![0.0; out_dim],
                    in_dim,
                    out_dim,
                }
            })
            .collect();
        Ok(Self {
            layers,
            sizes: sizes.to_vec(),
        })
    }

    /// All-zero network of the given shape.
    pub fn zeros(sizes: &[usize]) -> Result<Self, LearnerError> {
        Self::validate_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|pair| Layer {
                w: vec![0.0; pair[0] * pair[1]],
                b: vec![0.0; pair[1]],
                in_dim: pair[0],
                out_dim: pair[1],
            })
            .collect();
        Ok(Self {
            layers,
            sizes: sizes.to_vec(),
        })
    }

    fn validate_sizes(sizes: &[usize]) -> Result<(), LearnerError> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(LearnerError::InvalidConfig(format!(
                "layer sizes must name at least input and output, all positive: {sizes:?}"
            )));
        }
        Ok(())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub(crate) fn from_layers(sizes: Vec<usize>, layers: Vec<Layer>) -> Self {
        Self { layers, sizes }
    }

    /// Deterministic affine/rectifier composition; identity on the output
    /// layer.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, LearnerError> {
        if input.len() != self.input_dim() {
            return Err(LearnerError::ShapeMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut a = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = affine(layer, &a);
            if i < last {
                relu_in_place(&mut out);
            }
            a = out;
        }
        Ok(a)
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            acts: self.sizes.iter().map(|&s| vec![0.0; s]).collect(),
            zs: self.sizes[1..].iter().map(|&s| vec![0.0; s]).collect(),
            delta: vec![0.0; *self.sizes.iter().max().unwrap()],
            delta_prev: vec![0.0; *self.sizes.iter().max().unwrap()],
        }
    }

    /// Mean squared error of the selected-action Q-values against the
    /// targets, with gradients accumulated into `grads`.
    pub fn loss_and_gradients(
        &self,
        batch: &[BatchItem],
        grads: &mut Gradients,
        ws: &mut Workspace,
    ) -> Result<f64, LearnerError> {
        grads.clear();
        let scale = 1.0 / batch.len() as f64;
        let last = self.layers.len() - 1;
        let mut loss = 0.0;
        for item in batch {
            if item.state.len() != self.input_dim() {
                return Err(LearnerError::ShapeMismatch {
                    expected: self.input_dim(),
                    got: item.state.len(),
                });
            }
            ws.acts[0].copy_from_slice(item.state);
            for (i, layer) in self.layers.iter().enumerate() {
                let (prev, z) = (&ws.acts[i], &mut ws.zs[i]);
                affine_into(layer, prev, z);
                let a = &mut ws.acts[i + 1];
                a.copy_from_slice(z);
                if i < last {
                    relu_in_place(a);
                }
            }
            let q = ws.acts[last + 1][item.action];
            let err = q - item.target;
            loss += err * err * scale;

            // output delta has a single nonzero entry
            let out_dim = self.layers[last].out_dim;
            ws.delta[..out_dim].fill(0.0);
            ws.delta[item.action] = 2.0 * err * scale;

            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let (gw, gb) = &mut grads.layers[l];
                let delta = &ws.delta[..layer.out_dim];
                let prev = &ws.acts[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (g, &x) in row.iter_mut().zip(prev) {
                        *g += d * x;
                    }
                }
                if l > 0 {
                    let dp = &mut ws.delta_prev[..layer.in_dim];
                    dp.fill(0.0);
                    for (o, &d) in delta.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (acc, &w) in dp.iter_mut().zip(row) {
                            *acc += w * d;
                        }
                    }
                    // rectifier derivative gates on the pre-activation
                    for (acc, &z) in dp.iter_mut().zip(&ws.zs[l - 1]) {
                        if z <= 0.0 {
                            *acc = 0.0;
                        }
                    }
                    let n = layer.in_dim;
                    ws.delta[..n].copy_from_slice(&ws.delta_prev[..n]);
                }
            }
        }
        Ok(loss)
    }

    /// Forward-only batch loss; the finite-difference oracle in the tests
    /// differentiates this numerically.
    pub fn batch_loss(&self, batch: &[BatchItem]) -> Result<f64, LearnerError> {
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for item in batch {
            let q = self.forward(item.state)?[item.action];
            let err = q - item.target;
            loss += err * err * scale;
        }
        Ok(loss)
    }

    /// Smallest absolute hidden pre-activation over the batch; used to
    /// exclude rectifier-kink neighborhoods from gradient checks.
    pub fn min_abs_hidden_preactivation(&self, batch: &[BatchItem]) -> Result<f64, LearnerError> {
        let mut min_abs = f64::INFINITY;
        let last = self.layers.len() - 1;
        for item in batch {
            let mut a = item.state.to_vec();
            for (i, layer) in self.layers.iter().enumerate() {
                let mut z = affine(layer, &a);
                if i < last {
                    for &v in &z {
                        min_abs = min_abs.min(v.abs());
                    }
                    relu_in_place(&mut z);
                }
                a = z;
            }
        }
        Ok(min_abs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat parameter accessor (weights then biases, layer by layer).
    pub fn param(&self, mut idx: usize) -> f64 {
        for layer in &self.layers {
            if idx < layer.w.len() {
                return layer.w[idx];
            }
            idx -= layer.w.len();
            if idx < layer.b.len() {
                return layer.b[idx];
            }
            idx -= layer.b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if idx < layer.w.len() {
                return &mut layer.w[idx];
            }
            idx -= layer.w.len();
            if idx < layer.b.len() {
                return &mut layer.b[idx];
            }
            idx -= layer.b.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat gradient accessor matching the [`Mlp::param`] order.
    pub fn grad_at(grads: &Gradients, mut idx: usize) -> f64 {
        for (w, b) in &grads.layers {
            if idx < w.len() {
                return w[idx];
            }
            idx -= w.len();
            if idx < b.len() {
                return b[idx];
            }
            idx -= b.len();
        }
        panic!("gradient index out of range");
    }
}

fn affine(layer: &Layer, input: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layer.out_dim];
    affine_into(layer, input, &mut out);
    out
}

fn affine_into(layer: &Layer, input: &[f64], out: &mut [f64]) {
    for (o, out_v) in out.iter_mut().enumerate() {
        let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
        let mut acc = layer.b[o];
        for (&w, &x) in row.iter().zip(input) {
            acc += w * x;
        }
        *out_v = acc;
    }
}

fn relu_in_place(values: &mut [f64]) {
    for v in values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Adam with bias correction; moments are stored per parameter in the
/// network's shape.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.step_count += 1;
        let scalars = AdamScalars {
            lr: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.epsilon,
            bc1: 1.0 - self.beta1.powi(self.step_count as i32),
            bc2: 1.0 - self.beta2.powi(self.step_count as i32),
        };
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[l];
            let (mw, mb) = &mut self.m.layers[l];
            let (vw, vb) = &mut self.v.layers[l];
            update_params(&mut layer.w, gw, mw, vw, &scalars);
            update_params(&mut layer.b, gb, mb, vb, &scalars);
        }
    }
}

struct AdamScalars {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
}

fn update_params(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], s: &AdamScalars) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
        let m_hat = m[i] / s.bc1;
        let v_hat = v[i] / s.bc2;
        params[i] -= s.lr * m_hat / (v_hat.sqrt() + s.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[7, 64, 64, 2]).unwrap();
        let out = net.forward(&[0.3; 7]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer_identity() {
        let mut net = Mlp::zeros(&[2, 2]).unwrap();
        net.layers[0].w = vec![1.0, 0.0, 0.0, 1.0];
        let out = net.forward(&[0.7, -0.4]).unwrap();
        assert_eq!(out, vec![0.7, -0.4]);
    }

    #[test]
    fn forward_is_reproducible_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let net = Mlp::init(&[7, 16, 16, 2], &mut rng).unwrap();
        let out = net.forward(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let again = Mlp::init(&[7, 16, 16, 2], &mut rng).unwrap();
        assert_eq!(net, again);
        assert_eq!(out, again.forward(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).unwrap());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = Mlp::zeros(&[4, 8, 2]).unwrap();
        assert!(matches!(
            net.forward(&[0.0; 3]).unwrap_err(),
            LearnerError::ShapeMismatch { expected: 4, got: 3 }
        ));
    }

    #[test]
    fn perfect_predictions_give_zero_loss_and_frozen_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::init(&[3, 8, 2], &mut rng).unwrap();
        let state = [0.2, 0.5, 0.9];
        let q = net.forward(&state).unwrap();
        let batch = [BatchItem {
            state: &state,
            action: 1,
            target: q[1],
        }];
        let mut grads = Gradients::zeros_like(&net);
        let mut ws = net.workspace();
        let loss = net.loss_and_gradients(&batch, &mut grads, &mut ws).unwrap();
        assert_eq!(loss, 0.0);
        let before = net.clone();
        let mut adam = Adam::new(&net, 1e-3);
        adam.step(&mut net, &grads);
        assert_eq!(net, before);
    }

    #[test]
    fn adam_moves_params_against_gradient() {
        let mut net = Mlp::zeros(&[2, 2]).unwrap();
        let batch = [BatchItem {
            state: &[1.0, 0.0],
            action: 0,
            target: 1.0,
        }];
        let mut grads = Gradients::zeros_like(&net);
        let mut ws = net.workspace();
        let loss0 = net.loss_and_gradients(&batch, &mut grads, &mut ws).unwrap();
        assert_eq!(loss0, 1.0);
        let mut adam = Adam::new(&net, 1e-2);
        for _ in 0..2000 {
            net.loss_and_gradients(&batch, &mut grads, &mut ws).unwrap();
            adam.step(&mut net, &grads);
        }
        let loss1 = net.batch_loss(&batch).unwrap();
        assert!(loss1 < 1e-6, "loss did not shrink: {loss1}");
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let h = 1e-5;
        let mut checked = 0usize;
        let mut attempts = 0usize;
        while checked < 20 && attempts < 60 {
            attempts += 1;
            let sizes = [4, 8, 6, 2];
            let mut net = Mlp::init(&sizes, &mut rng).unwrap();
            let states: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let batch: Vec<BatchItem> = states
                .iter()
                .enumerate()
                .map(|(i, s)| BatchItem {
                    state: s,
                    action: i % 2,
                    target: rng.random_range(-2.0..2.0),
                })
                .collect();
            // skip batches near a rectifier kink: the loss is not smooth there
            if net.min_abs_hidden_preactivation(&batch).unwrap() < 1e-3 {
                continue;
            }
            let mut grads = Gradients::zeros_like(&net);
            let mut ws = net.workspace();
            net.loss_and_gradients(&batch, &mut grads, &mut ws).unwrap();
            for idx in 0..net.param_count() {
                let orig = net.param(idx);
                *net.param_mut(idx) = orig + h;
                let up = net.batch_loss(&batch).unwrap();
                *net.param_mut(idx) = orig - h;
                let down = net.batch_loss(&batch).unwrap();
                *net.param_mut(idx) = orig;
                let fd = (up - down) / (2.0 * h);
                let analytic = Mlp::grad_at(&grads, idx);
                let denom = analytic.abs().max(fd.abs());
                if denom >= 1e-6 {
                    let rel = (analytic - fd).abs() / denom;
                    assert!(rel < 1e-4, "param {idx}: rel error {rel}");
                } else {
                    assert!((analytic - fd).abs() < 1e-8);
                }
            }
            checked += 1;
        }
        assert!(checked >= 20, "too many kink-adjacent batches skipped");
    }
}
