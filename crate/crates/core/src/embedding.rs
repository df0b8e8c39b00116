//! Convolutional autoencoder over tolerance maps and the 5-D task code ψ.
//!
//! Encoder: 1×28×28 → conv(8, k3, s2) → 8×14×14 → conv(16, k3, s2) → 16×7×7
//! → dense → 5. The decoder mirrors it with transposed convolutions. Hidden
//! layers use tanh; the code and the reconstruction are linear. Map values
//! are divided by [`THETA_NORM`] before entering the network.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::geometry::{render_tolerance, DefectParams, Family, GeometryError, ToleranceMap, WorkpieceSpec, MAP_SIZE};
use crate::math::{cos, sqrt};
use crate::nn::{Activation, Adam, EMBED_DIM};
use crate::par;
use crate::rng::{self, Rng};

/// Normalisation of θ values: the scan ceiling of the tolerance raster.
pub const THETA_NORM: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("encoder trained on {trained} workpieces cannot encode a {requested} workpiece")]
    FamilyMismatch { trained: &'static str, requested: &'static str },
    #[error("dataset needs at least {min} maps, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("map shape or window does not match the encoder")]
    MapShape,
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("training diverged")]
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeDataset {
    pub family: Family,
    pub items: Vec<(WorkpieceSpec, ToleranceMap)>,
}

/// Draws one workpiece of the family's training distribution.
pub fn sample_spec(family: Family, r: &mut Rng) -> WorkpieceSpec {
    match family {
        Family::Circle => {
            let cols = r.random_range(1..=20usize);
            let rp = r.random_range(0.2..0.45);
            let rh = r.random_range(rp + 0.1..0.6);
            WorkpieceSpec::circle_grid(2, cols, rp, rh, 7.62, 2.54)
        }
        Family::Polygon => {
            let sides = r.random_range(3..=6u32);
            let rp = r.random_range(1.0..1.6);
            // Gap between pin and hole edges; at least a raster half-cell
            // diagonal so the map is never empty.
            let gap = r.random_range(0.03..0.12);
            WorkpieceSpec::polygon(sides, rp, rp + gap / cos(core::f64::consts::PI / sides as f64))
        }
    }
}

pub fn generate_dataset(family: Family, n_specs: usize, seed: u64) -> Result<AeDataset, EmbeddingError> {
    let items = (0..n_specs)
        .map(|i| {
            let spec = sample_spec(family, &mut rng::derived(seed, &[0xae, i as u64]));
            let map = render_tolerance(&spec, &DefectParams::nominal(&spec), family.default_window())?;
            Ok((spec, map))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    Ok(AeDataset { family, items })
}

/// Strided 3×3 convolution geometry (padding 1) between a `hi`-sized grid and
/// its half-resolution `lo` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_channels: usize,
    pub out_channels: usize,
    /// Side of the full-resolution grid.
    pub hi: usize,
}

impl ConvGeom {
    fn lo(&self) -> usize {
        self.hi / 2
    }

    fn weight_count(&self) -> usize {
        self.in_channels * self.out_channels * 9
    }

    /// Visits every (lo cell, kernel tap, hi cell) triple with its flat indices.
    #[inline]
    fn for_taps(&self, mut f: impl FnMut(usize, usize, usize)) {
        let (hi, lo) = (self.hi as isize, self.lo());
        for i in 0..lo {
            for j in 0..lo {
                for ki in 0..3 {
                    let p = 2 * i as isize + ki as isize - 1;
                    if p < 0 || p >= hi {
                        continue;
                    }
                    for kj in 0..3 {
                        let q = 2 * j as isize + kj as isize - 1;
                        if q < 0 || q >= hi {
                            continue;
                        }
                        f(i * lo + j, ki * 3 + kj, p as usize * self.hi + q as usize);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// `hi → lo`; weights `[out][in][3][3]`.
    Conv(ConvGeom),
    /// `lo → hi`, the adjoint of `Conv`; weights `[in][out][3][3]`.
    ConvTranspose(ConvGeom),
    Dense { inputs: usize, outputs: usize },
}

impl LayerKind {
    pub fn inputs(&self) -> usize {
        match *self {
            LayerKind::Conv(g) => g.in_channels * g.hi * g.hi,
            LayerKind::ConvTranspose(g) => g.in_channels * g.lo() * g.lo(),
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }

    pub fn outputs(&self) -> usize {
        match *self {
            LayerKind::Conv(g) => g.out_channels * g.lo() * g.lo(),
            LayerKind::ConvTranspose(g) => g.out_channels * g.hi * g.hi,
            LayerKind::Dense { outputs, .. } => outputs,
        }
    }

    fn bias_count(&self) -> usize {
        match *self {
            LayerKind::Conv(g) | LayerKind::ConvTranspose(g) => g.out_channels,
            LayerKind::Dense { outputs, .. } => outputs,
        }
    }

    fn weight_count(&self) -> usize {
        match *self {
            LayerKind::Conv(g) | LayerKind::ConvTranspose(g) => g.weight_count(),
            LayerKind::Dense { inputs, outputs } => inputs * outputs,
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Conv(g) => g.in_channels * 9,
            // Each output cell of a stride-2 transposed conv sees ~9/4 taps per input channel.
            LayerKind::ConvTranspose(g) => (g.in_channels * 9).div_ceil(4),
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    /// Pre-activation output.
    fn forward(&self, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.outputs()];
        match *self {
            LayerKind::Dense { inputs, outputs } => {
                for o in 0..outputs {
                    y[o] = b[o] + w[o * inputs..(o + 1) * inputs].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            LayerKind::Conv(g) => {
                let (lo2, hi2) = (g.lo() * g.lo(), g.hi * g.hi);
                for o in 0..g.out_channels {
                    let yo = &mut y[o * lo2..(o + 1) * lo2];
                    yo.iter_mut().for_each(|v| *v = b[o]);
                    for c in 0..g.in_channels {
                        let wk = &w[(o * g.in_channels + c) * 9..][..9];
                        let xc = &x[c * hi2..(c + 1) * hi2];
                        g.for_taps(|l, k, h| yo[l] += wk[k] * xc[h]);
                    }
                }
            }
            LayerKind::ConvTranspose(g) => {
                let (lo2, hi2) = (g.lo() * g.lo(), g.hi * g.hi);
                for o in 0..g.out_channels {
                    y[o * hi2..(o + 1) * hi2].iter_mut().for_each(|v| *v = b[o]);
                }
                for c in 0..g.in_channels {
                    let xc = &x[c * lo2..(c + 1) * lo2];
                    for o in 0..g.out_channels {
                        let wk = &w[(c * g.out_channels + o) * 9..][..9];
                        let yo = &mut y[o * hi2..(o + 1) * hi2];
                        g.for_taps(|l, k, h| yo[h] += wk[k] * xc[l]);
                    }
                }
            }
        }
        y
    }

    /// Given `∂L/∂pre-activation`, accumulates weight/bias gradients and returns `∂L/∂x`.
    fn backward(&self, w: &[f64], x: &[f64], delta: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
        let mut gx = vec![0.0; self.inputs()];
        match *self {
            LayerKind::Dense { inputs, outputs } => {
                for o in 0..outputs {
                    let d = delta[o];
                    gb[o] += d;
                    for i in 0..inputs {
                        gw[o * inputs + i] += d * x[i];
                        gx[i] += d * w[o * inputs + i];
                    }
                }
            }
            LayerKind::Conv(g) => {
                let (lo2, hi2) = (g.lo() * g.lo(), g.hi * g.hi);
                for o in 0..g.out_channels {
                    let d = &delta[o * lo2..(o + 1) * lo2];
                    gb[o] += d.iter().sum::<f64>();
                    for c in 0..g.in_channels {
                        let base = (o * g.in_channels + c) * 9;
                        let xc = &x[c * hi2..(c + 1) * hi2];
                        let gxc = &mut gx[c * hi2..(c + 1) * hi2];
                        let wk = &w[base..base + 9];
                        let gwk = &mut gw[base..base + 9];
                        g.for_taps(|l, k, h| {
                            gwk[k] += d[l] * xc[h];
                            gxc[h] += d[l] * wk[k];
                        });
                    }
                }
            }
            LayerKind::ConvTranspose(g) => {
                let (lo2, hi2) = (g.lo() * g.lo(), g.hi * g.hi);
                for o in 0..g.out_channels {
                    gb[o] += delta[o * hi2..(o + 1) * hi2].iter().sum::<f64>();
                }
                for c in 0..g.in_channels {
                    let xc = &x[c * lo2..(c + 1) * lo2];
                    let gxc = &mut gx[c * lo2..(c + 1) * lo2];
                    for o in 0..g.out_channels {
                        let base = (c * g.out_channels + o) * 9;
                        let d = &delta[o * hi2..(o + 1) * hi2];
                        let wk = &w[base..base + 9];
                        let gwk = &mut gw[base..base + 9];
                        g.for_taps(|l, k, h| {
                            gwk[k] += d[h] * xc[l];
                            gxc[l] += d[h] * wk[k];
                        });
                    }
                }
            }
        }
        gx
    }
}

/// A feed-forward stack of layers over one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub layers: Vec<(LayerKind, Activation)>,
}

impl LayerStack {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|(l, _)| l.param_count()).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.layers
            .iter()
            .map(|(l, _)| {
                let o = at;
                at += l.param_count();
                o
            })
            .collect()
    }

    pub fn init(&self, r: &mut Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        for ((l, _), off) in self.layers.iter().zip(self.offsets()) {
            let bound = 1.0 / sqrt(l.fan_in() as f64);
            for w in &mut p[off..off + l.weight_count()] {
                *w = r.random_range(-bound..bound);
            }
        }
        p
    }

    /// Outputs of every layer, input first.
    pub fn forward_tape(&self, params: &[f64], input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![input.to_vec()];
        for ((l, act), off) in self.layers.iter().zip(self.offsets()) {
            let (w, rest) = params[off..].split_at(l.weight_count());
            let mut y = l.forward(w, &rest[..l.bias_count()], acts.last().unwrap());
            y.iter_mut().for_each(|v| *v = act.apply(*v));
            acts.push(y);
        }
        acts
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Vec<f64> {
        self.forward_tape(params, input).pop().unwrap()
    }

    /// Accumulates `∂L/∂params` given the tape and `∂L/∂output`; returns `∂L/∂input`.
    pub fn backward(&self, params: &[f64], tape: &[Vec<f64>], grad_output: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let offs = self.offsets();
        let mut g = grad_output.to_vec();
        for li in (0..self.layers.len()).rev() {
            let (l, act) = self.layers[li];
            let y = &tape[li + 1];
            for (gi, yi) in g.iter_mut().zip(y) {
                *gi *= act.derivative_from_output(*yi);
            }
            let off = offs[li];
            let (gw, gb) = grad[off..off + l.param_count()].split_at_mut(l.weight_count());
            g = l.backward(&params[off..off + l.weight_count()], &tape[li], &g, gw, gb);
        }
        g
    }
}

/// Encoder layers; the decoder follows in [`autoencoder_stack`].
pub const ENCODER_LAYERS: usize = 3;

pub fn autoencoder_stack() -> LayerStack {
    let c1 = ConvGeom { in_channels: 1, out_channels: 8, hi: MAP_SIZE };
    let c2 = ConvGeom { in_channels: 8, out_channels: 16, hi: MAP_SIZE / 2 };
    let flat = 16 * (MAP_SIZE / 4) * (MAP_SIZE / 4);
    LayerStack {
        layers: vec![
            (LayerKind::Conv(c1), Activation::Tanh),
            (LayerKind::Conv(c2), Activation::Tanh),
            (LayerKind::Dense { inputs: flat, outputs: EMBED_DIM }, Activation::Linear),
            (LayerKind::Dense { inputs: EMBED_DIM, outputs: flat }, Activation::Tanh),
            (
                LayerKind::ConvTranspose(ConvGeom { in_channels: 16, out_channels: 8, hi: MAP_SIZE / 2 }),
                Activation::Tanh,
            ),
            (LayerKind::ConvTranspose(ConvGeom { in_channels: 8, out_channels: 1, hi: MAP_SIZE }), Activation::Linear),
        ],
    }
}

/// A trained tolerance autoencoder for one workpiece family.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub family: Family,
    pub params: Vec<f64>,
}

impl Autoencoder {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self, EmbeddingError> {
        let expected = autoencoder_stack().param_count();
        if params.len() != expected {
            return Err(EmbeddingError::ParamLength { expected, got: params.len() });
        }
        Ok(Autoencoder { family, params })
    }

    pub fn encoder_param_count() -> usize {
        autoencoder_stack().layers[..ENCODER_LAYERS].iter().map(|(l, _)| l.param_count()).sum()
    }

    fn check_map(&self, map: &ToleranceMap) -> Result<(), EmbeddingError> {
        if map.rows != MAP_SIZE || map.cols != MAP_SIZE || map.values.len() != MAP_SIZE * MAP_SIZE {
            return Err(EmbeddingError::MapShape);
        }
        Ok(())
    }

    /// ψ of a rendered map.
    pub fn encode_map(&self, map: &ToleranceMap) -> Result<[f64; EMBED_DIM], EmbeddingError> {
        self.check_map(map)?;
        let stack = autoencoder_stack();
        let enc = LayerStack { layers: stack.layers[..ENCODER_LAYERS].to_vec() };
        let code = enc.forward(&self.params[..Self::encoder_param_count()], &normalise(map));
        Ok(core::array::from_fn(|i| code[i]))
    }

    /// Decoded map in θ units (rad).
    pub fn reconstruct(&self, map: &ToleranceMap) -> Result<Vec<f64>, EmbeddingError> {
        self.check_map(map)?;
        let out = autoencoder_stack().forward(&self.params, &normalise(map));
        Ok(out.into_iter().map(|v| v * THETA_NORM).collect())
    }
}

fn normalise(map: &ToleranceMap) -> Vec<f64> {
    map.values.iter().map(|v| v / THETA_NORM).collect()
}

/// Renders the nominal tolerance map of `spec` and encodes it.
pub fn encode(model: &Autoencoder, spec: &WorkpieceSpec) -> Result<[f64; EMBED_DIM], EmbeddingError> {
    if spec.family() != model.family {
        return Err(EmbeddingError::FamilyMismatch { trained: model.family.name(), requested: spec.family().name() });
    }
    let map = render_tolerance(spec, &DefectParams::nominal(spec), model.family.default_window())?;
    model.encode_map(&map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig { epochs: 300, batch_size: 16, lr: 2e-3, holdout_fraction: 0.1, seed: 0 }
    }
}

/// Reconstruction error on normalised values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReconstructionError {
    pub mae: f64,
    pub rms: f64,
    /// Mean absolute target value, the scale `mae` is small against.
    pub mean_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeOutcome {
    pub model: Autoencoder,
    pub heldout: ReconstructionError,
    pub train: ReconstructionError,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
}

pub fn reconstruction_error(model: &Autoencoder, maps: &[&ToleranceMap]) -> Result<ReconstructionError, EmbeddingError> {
    let stack = autoencoder_stack();
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut target = 0.0;
    let mut n = 0usize;
    for m in maps {
        model.check_map(m)?;
        let x = normalise(m);
        let y = stack.forward(&model.params, &x);
        for (a, b) in y.iter().zip(&x) {
            abs += (a - b).abs();
            sq += (a - b) * (a - b);
            target += b.abs();
        }
        n += x.len();
    }
    let n = n.max(1) as f64;
    Ok(ReconstructionError { mae: abs / n, rms: sqrt(sq / n), mean_abs: target / n })
}

/// Per-pixel mean squared error of one normalised map and its gradient.
pub fn sample_gradient(stack: &LayerStack, params: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    let tape = stack.forward_tape(params, x);
    let y = tape.last().unwrap();
    let n = x.len() as f64;
    let loss = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    let g: Vec<f64> = y.iter().zip(x).map(|(a, b)| 2.0 * (a - b) / n).collect();
    let mut grad = vec![0.0; params.len()];
    stack.backward(params, &tape, &g, &mut grad);
    (loss, grad)
}

/// Trains on a seeded 90/10 split of the dataset with minibatch Adam.
pub fn train_autoencoder(dataset: &AeDataset, config: &AeConfig) -> Result<AeOutcome, EmbeddingError> {
    const MIN: usize = 20;
    if dataset.items.len() < MIN {
        return Err(EmbeddingError::TooSmall { min: MIN, got: dataset.items.len() });
    }
    let stack = autoencoder_stack();
    let mut r = rng::derived(config.seed, &[0xae7]);
    let mut order: Vec<usize> = (0..dataset.items.len()).collect();
    order.shuffle(&mut r);
    let n_hold = ((dataset.items.len() as f64 * config.holdout_fraction) as usize).max(1);
    let (hold, train) = order.split_at(n_hold);
    let data: Vec<Vec<f64>> = dataset.items.iter().map(|(_, m)| normalise(m)).collect();
    let mut params = stack.init(&mut r);
    let mut opt = Adam::new(params.len(), config.lr);
    let mut train = train.to_vec();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        train.shuffle(&mut r);
        let mut epoch_loss = 0.0;
        for batch in train.chunks(config.batch_size.max(1)) {
            let parts = par::map_indexed(batch.len(), |k| sample_gradient(&stack, &params, &data[batch[k]]));
            let mut grad = vec![0.0; params.len()];
            for (l, g) in &parts {
                epoch_loss += l;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b / batch.len() as f64;
                }
            }
            opt.step(&mut params, &grad).map_err(|_| EmbeddingError::Diverged)?;
        }
        let l = epoch_loss / train.len() as f64;
        if !l.is_finite() {
            return Err(EmbeddingError::Diverged);
        }
        loss_curve.push(l);
    }
    let model = Autoencoder { family: dataset.family, params };
    let maps = |idx: &[usize]| -> Vec<&ToleranceMap> { idx.iter().map(|&i| &dataset.items[i].1).collect() };
    let heldout = reconstruction_error(&model, &maps(hold))?;
    let train_err = reconstruction_error(&model, &maps(&train))?;
    Ok(AeOutcome { model, heldout, train: train_err, loss_curve })
}
