//! Dense tanh networks over flat parameter vectors, with reverse-mode
//! gradients, Adam, and the policy/discriminator architectures.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng as _;

use crate::math::{sigmoid, sqrt, tanh};
use crate::rng::Rng;
use crate::sim::{Action, Observation, Policy};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value during training")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(x),
            Activation::Sigmoid => sigmoid(x),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }
}

/// Layer sizes plus activations; hidden layers always use tanh.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetSpec {
    pub sizes: Vec<usize>,
    pub output: Activation,
}

/// Where one layer's weights (row-major, `outputs × inputs`) and biases live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerLayout {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Range<usize>,
    pub bias: Range<usize>,
}

impl NetSpec {
    pub fn new(sizes: &[usize], output: Activation) -> Result<Self, NnError> {
        let spec = NetSpec { sizes: sizes.to_vec(), output };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.sizes.len() < 2 {
            return Err(NnError::InvalidSpec("need an input size and at least one layer"));
        }
        if self.sizes.contains(&0) {
            return Err(NnError::InvalidSpec("layer sizes must be positive"));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layout(&self) -> Vec<LayerLayout> {
        let mut at = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let weights = at..at + i * o;
                let bias = weights.end..weights.end + o;
                at = bias.end;
                LayerLayout { inputs: i, outputs: o, weights, bias }
            })
            .collect()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layer_count() {
            self.output
        } else {
            Activation::Tanh
        }
    }

    fn check(&self, params: &[f64], input: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::Dimension { expected: self.param_count(), got: params.len() });
        }
        if input.len() != self.input_size() {
            return Err(NnError::Dimension { expected: self.input_size(), got: input.len() });
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check(params, input)?;
        let mut x = input.to_vec();
        for (l, lay) in self.layout().iter().enumerate() {
            x = dense(params, lay, &x, self.activation(l));
        }
        Ok(x)
    }

    /// Forward pass keeping every layer's output for [`NetSpec::backward`].
    pub fn forward_tape(&self, params: &[f64], input: &[f64]) -> Result<Tape, NnError> {
        self.check(params, input)?;
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        for (l, lay) in self.layout().iter().enumerate() {
            let y = dense(params, lay, acts.last().unwrap(), self.activation(l));
            acts.push(y);
        }
        Ok(Tape { acts })
    }

    /// Accumulates `∂L/∂params` into `grad` given `∂L/∂output`, and returns
    /// `∂L/∂input`.
    pub fn backward(&self, params: &[f64], tape: &Tape, grad_output: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let layout = self.layout();
        let mut delta: Vec<f64> = grad_output
            .iter()
            .zip(tape.output())
            .map(|(g, y)| g * self.output.derivative_from_output(*y))
            .collect();
        for l in (0..layout.len()).rev() {
            let lay = &layout[l];
            let x = &tape.acts[l];
            let w = &params[lay.weights.clone()];
            let mut grad_in = vec![0.0; lay.inputs];
            for o in 0..lay.outputs {
                let d = delta[o];
                grad[lay.bias.start + o] += d;
                if d == 0.0 {
                    continue;
                }
                let row = o * lay.inputs;
                let gw = &mut grad[lay.weights.start + row..lay.weights.start + row + lay.inputs];
                for i in 0..lay.inputs {
                    gw[i] += d * x[i];
                    grad_in[i] += d * w[row + i];
                }
            }
            if l > 0 {
                for (g, y) in grad_in.iter_mut().zip(x) {
                    *g *= Activation::Tanh.derivative_from_output(*y);
                }
            }
            delta = grad_in;
        }
        delta
    }

    /// Mean loss and its exact gradient over a batch. `loss(k, output)`
    /// returns the loss of sample `k` and `∂loss/∂output`.
    pub fn gradient<F>(&self, params: &[f64], inputs: &[&[f64]], mut loss: F) -> Result<(f64, Vec<f64>), NnError>
    where
        F: FnMut(usize, &[f64]) -> (f64, Vec<f64>),
    {
        let mut grad = vec![0.0; self.param_count()];
        let mut total = 0.0;
        for (k, x) in inputs.iter().enumerate() {
            let tape = self.forward_tape(params, x)?;
            let (l, g) = loss(k, tape.output());
            total += l;
            self.backward(params, &tape, &g, &mut grad);
        }
        let n = inputs.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((total / n, grad))
    }

    /// Uniform `±1/√fan_in` weights, zero biases.
    pub fn init(&self, rng: &mut Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        for lay in self.layout() {
            let bound = 1.0 / sqrt(lay.inputs as f64);
            for w in &mut p[lay.weights] {
                *w = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn unflatten(&self, params: &[f64]) -> Result<Vec<LayerParams>, NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::Dimension { expected: self.param_count(), got: params.len() });
        }
        Ok(self
            .layout()
            .into_iter()
            .map(|lay| LayerParams {
                weights: params[lay.weights].chunks(lay.inputs).map(|r| r.to_vec()).collect(),
                bias: params[lay.bias].to_vec(),
            })
            .collect())
    }

    pub fn flatten(&self, layers: &[LayerParams]) -> Result<Vec<f64>, NnError> {
        let layout = self.layout();
        if layers.len() != layout.len() {
            return Err(NnError::Dimension { expected: layout.len(), got: layers.len() });
        }
        let mut out = Vec::with_capacity(self.param_count());
        for (lp, lay) in layers.iter().zip(&layout) {
            if lp.weights.len() != lay.outputs || lp.bias.len() != lay.outputs {
                return Err(NnError::Dimension { expected: lay.outputs, got: lp.weights.len() });
            }
            for row in &lp.weights {
                if row.len() != lay.inputs {
                    return Err(NnError::Dimension { expected: lay.inputs, got: row.len() });
                }
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&lp.bias);
        }
        Ok(out)
    }
}

fn dense(params: &[f64], lay: &LayerLayout, x: &[f64], act: Activation) -> Vec<f64> {
    let w = &params[lay.weights.clone()];
    let b = &params[lay.bias.clone()];
    (0..lay.outputs)
        .map(|o| {
            let row = &w[o * lay.inputs..(o + 1) * lay.inputs];
            let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[o];
            act.apply(s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Per-layer outputs of a forward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct Tape {
    pub acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

/// Adam, minimising.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<(), NnError> {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(NnError::NonFinite);
        }
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / (sqrt(self.v[i] / c2) + self.eps);
        }
        Ok(())
    }
}

pub const OBS_DIM: usize = 8;
pub const ACT_DIM: usize = 4;
pub const EMBED_DIM: usize = 5;

/// Fixed input scaling bringing each observation component to roughly unit range.
pub const OBS_SCALE: [f64; OBS_DIM] = [1.0, 1.0, 20.0, 0.5, 1.0, 1.0, 1.0, 1.0];

pub fn nominal_spec() -> NetSpec {
    NetSpec { sizes: vec![OBS_DIM, 64, 64, ACT_DIM], output: Activation::Linear }
}

pub fn adaptation_spec() -> NetSpec {
    NetSpec { sizes: vec![OBS_DIM + EMBED_DIM, 32, ACT_DIM], output: Activation::Linear }
}

pub fn discriminator_spec() -> NetSpec {
    NetSpec { sizes: vec![OBS_DIM + ACT_DIM, 64, 1], output: Activation::Sigmoid }
}

pub fn scaled_obs(obs: &Observation) -> [f64; OBS_DIM] {
    core::array::from_fn(|i| obs.0[i] * OBS_SCALE[i])
}

/// Discriminator input: scaled measurement concatenated with the action in `a_max` units.
pub fn discriminator_input(obs: &Observation, action: &Action, a_max: &[f64; 4]) -> [f64; OBS_DIM + ACT_DIM] {
    let s = scaled_obs(obs);
    let a = action.to_array();
    core::array::from_fn(|i| if i < OBS_DIM { s[i] } else { a[i - OBS_DIM] / a_max[i - OBS_DIM] })
}

/// `φ1` (nominal) and `φ2` (adaptation) parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros() -> Self {
        PolicyParams { phi1: vec![0.0; nominal_spec().param_count()], phi2: vec![0.0; adaptation_spec().param_count()] }
    }

    /// Fan-in initialised `φ1`; `φ2` hidden layer random and output layer zero.
    pub fn init(rng: &mut Rng) -> Self {
        let phi1 = nominal_spec().init(rng);
        PolicyParams { phi1, phi2: Self::init_phi2(rng) }
    }

    pub fn init_phi2(rng: &mut Rng) -> Vec<f64> {
        let spec = adaptation_spec();
        let mut phi2 = spec.init(rng);
        let last = spec.layout().pop().unwrap();
        phi2[last.weights.start..last.bias.end].iter_mut().for_each(|w| *w = 0.0);
        phi2
    }
}

/// Pre-squash network output `φ1(ŝ*) + φ2([ŝ*, ψ])`.
pub fn policy_raw(params: &PolicyParams, obs: &Observation, embedding: Option<&[f64; EMBED_DIM]>) -> [f64; ACT_DIM] {
    let s = scaled_obs(obs);
    let n = nominal_spec().forward(&params.phi1, &s).expect("phi1 length");
    let mut raw: [f64; ACT_DIM] = core::array::from_fn(|i| n[i]);
    if let Some(psi) = embedding {
        let mut x = [0.0; OBS_DIM + EMBED_DIM];
        x[..OBS_DIM].copy_from_slice(&s);
        x[OBS_DIM..].copy_from_slice(psi);
        let a = adaptation_spec().forward(&params.phi2, &x).expect("phi2 length");
        for i in 0..ACT_DIM {
            raw[i] += a[i];
        }
    }
    raw
}

pub fn policy_act(params: &PolicyParams, obs: &Observation, embedding: Option<&[f64; EMBED_DIM]>, a_max: &[f64; 4]) -> Action {
    let raw = policy_raw(params, obs, embedding);
    Action::from_array(core::array::from_fn(|i| a_max[i] * tanh(raw[i])))
}

/// A parameterised policy bound to its optional task embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct NetPolicy {
    pub params: PolicyParams,
    pub embedding: Option<[f64; EMBED_DIM]>,
    pub a_max: [f64; 4],
}

impl Policy for NetPolicy {
    fn act(&self, obs: &Observation) -> Action {
        policy_act(&self.params, obs, self.embedding.as_ref(), &self.a_max)
    }
}
