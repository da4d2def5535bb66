use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check_data, check_positive, OptimizerKind, ReconstructionResult, SolverConfig};
use crate::error::{Actor, Error, Result};
use crate::grad::{loglik_and_grad, AdamState, DEFAULT_FLOOR};
use crate::measurement::{MeasurementData, MeasurementSet};
use crate::quantum::{cholesky_to_dm, dm_to_cholesky, fidelity, CholeskyParams, DensityMatrix};

/// Regularizer added before factoring a warm-start state, so rank-deficient
/// states still have a Cholesky factor with every direction reachable.
const WARM_START_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MleInit {
    MaximallyMixed,
    WarmStart(DensityMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MLEConfig {
    pub max_epochs: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub floor: f64,
    pub init: MleInit,
    pub record_every: usize,
    pub tol_grad: f64,
    /// Unused by the deterministic ascent itself; echoed into manifests.
    pub seed: u64,
}

impl Default for MLEConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            lr: 0.01,
            optimizer: OptimizerKind::Adam,
            floor: DEFAULT_FLOOR,
            init: MleInit::MaximallyMixed,
            record_every: 10,
            tol_grad: 1e-7,
            seed: 0,
        }
    }
}

impl MLEConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("lr", self.lr)?;
        check_positive("floor", self.floor)?;
        check_positive("tol_grad", self.tol_grad)?;
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Gradient ascent on the log-likelihood over the packed Cholesky parameters.
pub fn mle_reconstruct(
    data: &MeasurementData,
    set: &MeasurementSet,
    cfg: &MLEConfig,
    reference: Option<&DensityMatrix>,
) -> Result<ReconstructionResult> {
    let start = Instant::now();
    cfg.validate()?;
    check_data(data, set)?;
    let dim = set.dim();
    if let Some(r) = reference {
        if r.dim() != dim {
            return Err(Error::DimensionMismatch(r.dim(), dim));
        }
    }
    let weights = data.weights();
    let mut params = match &cfg.init {
        MleInit::MaximallyMixed => CholeskyParams::identity(dim).to_packed(),
        MleInit::WarmStart(rho) => {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch(rho.dim(), dim));
            }
            dm_to_cholesky(rho, WARM_START_EPS)?.to_packed()
        }
    };
    let optimizer = cfg.optimizer.build(cfg.lr);
    let mut state = AdamState::new(params.len());
    let mut loss_history = Vec::with_capacity(cfg.max_epochs + 1);
    let mut fidelity_history = Vec::new();
    let mut converged;
    let mut epoch = 0;
    let rho = loop {
        let t = CholeskyParams::from_packed(dim, &params)?;
        let (ell, grad) = loglik_and_grad(&t, &weights, set, cfg.floor)?;
        if !ell.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { actor: Actor::Likelihood, epoch });
        }
        loss_history.push((epoch, -ell));
        converged = grad.norm() < cfg.tol_grad;
        let last = converged || epoch == cfg.max_epochs;
        if let Some(r) = reference {
            if epoch % cfg.record_every == 0 || last {
                fidelity_history.push((epoch, fidelity(&cholesky_to_dm(&t)?, r)?));
            }
        }
        if last {
            break cholesky_to_dm(&t)?;
        }
        // ascent: the optimizer descends, so feed it −∇ℓ
        let descent: Vec<f64> = grad.iter().map(|g| -g).collect();
        optimizer.step(&mut params, &descent, &mut state)?;
        epoch += 1;
    };
    Ok(ReconstructionResult {
        reconstructed_dm: rho,
        fidelity_history,
        loss_history,
        disc_loss_history: Vec::new(),
        selected_epoch: epoch,
        epochs_run: epoch,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        config: SolverConfig::Mle(cfg.clone()),
    })
}
