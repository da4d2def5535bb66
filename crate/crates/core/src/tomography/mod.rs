//! State reconstruction: Cholesky-parametrized maximum likelihood and the
//! adversarial generator/discriminator solver.

mod gan;
mod mle;

pub use gan::{discriminator_pretrain_sanity, discriminator_separation, gan_reconstruct, GANConfig, LatentSource, LOGIT_CLAMP};
pub use mle::{mle_reconstruct, MLEConfig, MleInit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{AdamConfig, Optimizer};
use crate::measurement::{MeasurementData, MeasurementSet};
use crate::quantum::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl OptimizerKind {
    pub(crate) fn build(self, lr: f64) -> Optimizer {
        match self {
            OptimizerKind::Adam => Optimizer::Adam(AdamConfig::with_lr(lr)),
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
        }
    }
}

/// The configuration a result was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolverConfig {
    Mle(MLEConfig),
    Gan(GANConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub reconstructed_dm: DensityMatrix,
    /// (epoch, fidelity against the reference), every `record_every` epochs
    /// and at the last epoch. Empty without a reference.
    pub fidelity_history: Vec<(usize, f64)>,
    /// (epoch, loss) for every evaluated epoch; epoch e is the state after e
    /// updates. MLE records −ℓ, the GAN records L_G.
    pub loss_history: Vec<(usize, f64)>,
    /// (epoch, L_D) for the GAN; empty for MLE.
    pub disc_loss_history: Vec<(usize, f64)>,
    /// Epoch whose state was returned.
    pub selected_epoch: usize,
    pub epochs_run: usize,
    /// MLE only: stopped on the gradient-norm tolerance.
    pub converged: bool,
    pub wall_time: f64,
    pub config: SolverConfig,
}

impl ReconstructionResult {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.fidelity_history.last().map(|&(_, f)| f)
    }
}

pub(crate) fn check_data(data: &MeasurementData, set: &MeasurementSet) -> Result<()> {
    if data.len() != set.len() {
        return Err(Error::LengthMismatch { expected: set.len(), got: data.len() });
    }
    if data.weights().iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("measurement data must be finite and non-negative".into()));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}
