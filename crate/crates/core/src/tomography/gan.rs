use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_data, check_positive, ReconstructionResult, SolverConfig};
use crate::error::{Actor, Error, Result};
use crate::grad::{
    dense_backward, dense_forward, expectation_vjp, Activation, AdamConfig, AdamState, DenseLayer, LayerGrad, Tape,
};
use crate::measurement::{expectation, ExpectationVector, MeasurementData, MeasurementSet};
use crate::quantum::{cholesky_to_dm, fidelity, CholeskyParams, DensityMatrix};
use crate::rng::{rng_from_seed, substream_seed};

/// Sigmoid inputs are clamped to ±LOGIT_CLAMP when evaluating the losses.
pub const LOGIT_CLAMP: f64 = 30.0;

const GEN_STREAM: u64 = 1;
const DISC_STREAM: u64 = 2;
const SANITY_STEPS: usize = 50;

/// Where the generator's input comes from. The measurement vector itself is
/// the only option: the generator maps statistics to a proposed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentSource {
    MeasurementVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GANConfig {
    pub epochs: usize,
    pub latent_source: LatentSource,
    /// Hidden widths of the generator; its output layer is always dim².
    pub gen_layers: Vec<usize>,
    /// Discriminator widths, ending in the single sigmoid unit.
    pub disc_layers: Vec<usize>,
    pub lr_gen: f64,
    pub lr_disc: f64,
    pub record_every: usize,
    pub seed: u64,
}

impl Default for GANConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            latent_source: LatentSource::MeasurementVector,
            gen_layers: vec![512],
            disc_layers: vec![128, 64, 32, 1],
            lr_gen: 0.001,
            lr_disc: 0.001,
            record_every: 10,
            seed: 0,
        }
    }
}

impl GANConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("lr_gen", self.lr_gen)?;
        check_positive("lr_disc", self.lr_disc)?;
        if self.disc_layers.last() != Some(&1) {
            return Err(Error::InvalidParameter("the last discriminator layer must have width 1".into()));
        }
        if self.gen_layers.iter().chain(&self.disc_layers).any(|&w| w == 0) {
            return Err(Error::InvalidParameter("layer widths must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// A dense stack with one Adam state per weight matrix and bias vector.
struct Network {
    layers: Vec<DenseLayer>,
    states: Vec<(AdamState, AdamState)>,
    adam: AdamConfig,
}

impl Network {
    fn new(inputs: usize, widths: &[usize], hidden: Activation, output: Activation, lr: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = inputs;
        for (i, &w) in widths.iter().enumerate() {
            let act = if i + 1 == widths.len() { output } else { hidden };
            layers.push(DenseLayer::glorot(fan_in, w, act, &mut rng));
            fan_in = w;
        }
        let states = layers.iter().map(|l| (AdamState::new(l.weights.len()), AdamState::new(l.biases.len()))).collect();
        Self { layers, states, adam: AdamConfig::with_lr(lr) }
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        dense_forward(&self.layers, x)
    }

    fn backward(&self, tape: &Tape, upstream: &[f64]) -> Result<(Vec<LayerGrad>, Vec<f64>)> {
        dense_backward(&self.layers, tape, upstream)
    }

    fn step(&mut self, grads: &[LayerGrad]) -> Result<()> {
        for ((layer, (sw, sb)), g) in self.layers.iter_mut().zip(&mut self.states).zip(grads) {
            crate::grad::adam_step(layer.weights.as_mut_slice(), g.weights.as_slice(), sw, &self.adam)?;
            crate::grad::adam_step(layer.biases.as_mut_slice(), g.biases.as_slice(), sb, &self.adam)?;
        }
        Ok(())
    }
}

fn add_grads(acc: &mut [LayerGrad], other: &[LayerGrad]) {
    for (a, b) in acc.iter_mut().zip(other) {
        a.weights += &b.weights;
        a.biases += &b.biases;
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// −ln σ(z) and its derivative in z, with z clamped to ±LOGIT_CLAMP for the
/// value. The derivative is taken at the clamped point so a saturated
/// discriminator still passes gradient.
fn neg_log_sigmoid(z: f64) -> (f64, f64) {
    let zc = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    // −ln σ(z) = ln(1 + e^{−z}), evaluated stably
    let value = if zc >= 0.0 { (-zc).exp().ln_1p() } else { -zc + zc.exp().ln_1p() };
    (value, sigmoid(zc) - 1.0)
}

/// −ln(1 − σ(z)) = −ln σ(−z).
fn neg_log_one_minus_sigmoid(z: f64) -> (f64, f64) {
    let (v, d) = neg_log_sigmoid(-z);
    (v, -d)
}

/// Adversarial reconstruction. Each epoch the generator maps the measurement
/// vector to a Cholesky factor, the Born rule turns that state into
/// generated data, the discriminator takes one step on L_D and the generator
/// one step on L_G with the gradient carried back through the physics layer.
/// Returns the state from the epoch with the lowest generator loss.
pub fn gan_reconstruct(
    data: &ExpectationVector,
    set: &MeasurementSet,
    cfg: &GANConfig,
    reference: Option<&DensityMatrix>,
) -> Result<ReconstructionResult> {
    let start = Instant::now();
    cfg.validate()?;
    check_data(&MeasurementData::Expectations(data.clone()), set)?;
    let dim = set.dim();
    if let Some(r) = reference {
        if r.dim() != dim {
            return Err(Error::DimensionMismatch(r.dim(), dim));
        }
    }
    let real = &data.values;
    let n_out = real.len();
    let mut gen_widths = cfg.gen_layers.clone();
    gen_widths.push(dim * dim);
    let mut gen = Network::new(n_out, &gen_widths, Activation::LeakyRelu, Activation::Identity, cfg.lr_gen, substream_seed(cfg.seed, GEN_STREAM));
    // the final sigmoid lives in the loss, so the network emits logits
    let mut disc = Network::new(n_out, &cfg.disc_layers, Activation::LeakyRelu, Activation::Identity, cfg.lr_disc, substream_seed(cfg.seed, DISC_STREAM));

    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);
    let mut disc_loss_history = Vec::with_capacity(cfg.epochs);
    let mut fidelity_history = Vec::new();
    let mut best: Option<(f64, usize, DensityMatrix)> = None;

    // epoch e evaluates the state after e generator updates, so `epochs`
    // updates give epochs + 1 evaluations, matching the MLE solver
    for epoch in 0..=cfg.epochs {
        let (packed, gen_tape) = gen.forward(real)?;
        let t = CholeskyParams::from_packed(dim, &packed)?;
        let rho = cholesky_to_dm(&t)?;
        let fake = expectation(&rho, set)?.values;
        let last = epoch == cfg.epochs;
        if let Some(r) = reference {
            if epoch % cfg.record_every == 0 || last {
                fidelity_history.push((epoch, fidelity(&rho, r)?));
            }
        }

        let loss_g = if last {
            let (z, _) = disc.forward(&fake)?;
            neg_log_sigmoid(z[0]).0
        } else {
            // discriminator step on L_D = −ln D(real) − ln(1 − D(fake))
            let (z_real, tape_real) = disc.forward(real)?;
            let (z_fake, tape_fake) = disc.forward(&fake)?;
            let (l_real, d_real) = neg_log_sigmoid(z_real[0]);
            let (l_fake, d_fake) = neg_log_one_minus_sigmoid(z_fake[0]);
            let loss_d = l_real + l_fake;
            if !loss_d.is_finite() {
                return Err(Error::NonFiniteLoss { actor: Actor::Discriminator, epoch });
            }
            let (mut grads_d, _) = disc.backward(&tape_real, &[d_real])?;
            let (grads_fake, _) = disc.backward(&tape_fake, &[d_fake])?;
            add_grads(&mut grads_d, &grads_fake);
            disc.step(&grads_d)?;
            disc_loss_history.push((epoch, loss_d));

            // generator step on L_G = −ln D(fake) against the updated discriminator
            let (z, tape) = disc.forward(&fake)?;
            let (loss_g, d_z) = neg_log_sigmoid(z[0]);
            let (_, d_fake_data) = disc.backward(&tape, &[d_z])?;
            let d_params = expectation_vjp(&t, set, &d_fake_data)?;
            if !loss_g.is_finite() || d_params.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { actor: Actor::Generator, epoch });
            }
            let (grads_g, _) = gen.backward(&gen_tape, &d_params)?;
            gen.step(&grads_g)?;
            loss_g
        };
        if !loss_g.is_finite() {
            return Err(Error::NonFiniteLoss { actor: Actor::Generator, epoch });
        }
        loss_history.push((epoch, loss_g));
        if best.as_ref().is_none_or(|(l, _, _)| loss_g < *l) {
            best = Some((loss_g, epoch, rho));
        }
    }

    let (_, selected_epoch, reconstructed_dm) = best.expect("at least one epoch is evaluated");
    Ok(ReconstructionResult {
        reconstructed_dm,
        fidelity_history,
        loss_history,
        disc_loss_history,
        selected_epoch,
        epochs_run: cfg.epochs,
        converged: false,
        wall_time: start.elapsed().as_secs_f64(),
        config: SolverConfig::Gan(cfg.clone()),
    })
}

/// Health check for the adversarial loop: trains the discriminator alone for
/// 50 steps to tell `data` (label 1) from a seeded shuffle of it (label 0)
/// and returns its accuracy on that pair, counting a tie as half right.
pub fn discriminator_pretrain_sanity(cfg: &GANConfig, data: &ExpectationVector, seed: u64) -> Result<f64> {
    let mut shuffled = data.values.clone();
    shuffled.shuffle(&mut rng_from_seed(substream_seed(seed, 1)));
    discriminator_separation(cfg, &data.values, &shuffled, seed)
}

/// Trains a fresh discriminator on one real and one fake sample and reports
/// its accuracy on them.
pub fn discriminator_separation(cfg: &GANConfig, real: &[f64], fake: &[f64], seed: u64) -> Result<f64> {
    cfg.validate()?;
    if real.len() != fake.len() {
        return Err(Error::LengthMismatch { expected: real.len(), got: fake.len() });
    }
    let mut disc = Network::new(real.len(), &cfg.disc_layers, Activation::LeakyRelu, Activation::Identity, cfg.lr_disc, substream_seed(seed, DISC_STREAM));
    for _ in 0..SANITY_STEPS {
        let (z_real, tape_real) = disc.forward(real)?;
        let (z_fake, tape_fake) = disc.forward(fake)?;
        let (mut grads, _) = disc.backward(&tape_real, &[neg_log_sigmoid(z_real[0]).1])?;
        let (g_fake, _) = disc.backward(&tape_fake, &[neg_log_one_minus_sigmoid(z_fake[0]).1])?;
        add_grads(&mut grads, &g_fake);
        disc.step(&grads)?;
    }
    let score = |z: f64, label: bool| {
        let p = sigmoid(z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));
        if p == 0.5 {
            0.5
        } else if (p > 0.5) == label {
            1.0
        } else {
            0.0
        }
    };
    let z_real = disc.forward(real)?.0[0];
    let z_fake = disc.forward(fake)?.0[0];
    Ok((score(z_real, true) + score(z_fake, false)) / 2.0)
}
