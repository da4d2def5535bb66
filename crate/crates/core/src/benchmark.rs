//! MLE-versus-GAN comparison: several reconstructions of the same noisy
//! state per method, summarized as mean and standard deviation fidelity
//! curves on a shared epoch axis.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{expectation, husimi_operators_on, Grid};
use crate::noise::mix_with_random;
use crate::rng::substream_seed;
use crate::states::{num, num_entry};
use crate::tomography::{gan_reconstruct, mle_reconstruct, GANConfig, MLEConfig, ReconstructionResult};

const MIX_STREAM: u64 = 1;
const GAN_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkScenario {
    /// Name of an entry in the shipped num-state table.
    pub state: String,
    pub zeta: f64,
    pub dim: usize,
    pub grid: Grid,
    pub record_every: usize,
    /// Fidelity that counts as "reached" for iterations-to-threshold.
    pub threshold: f64,
}

impl Default for BenchmarkScenario {
    fn default() -> Self {
        Self {
            state: "M2".into(),
            zeta: 0.2,
            dim: 32,
            grid: Grid::square(-5.0, 5.0, 20).expect("static grid"),
            record_every: 10,
            threshold: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    Gan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Mean fidelity over successful runs at each epoch of the report axis.
    pub mean: Vec<f64>,
    /// Sample standard deviation (zero for a single run).
    pub std: Vec<f64>,
    /// First recorded epoch at or above the threshold, per successful run.
    pub iterations_to_threshold: Vec<Option<usize>>,
    /// Fidelity of the state each run returned.
    pub returned_fidelity: Vec<f64>,
    pub failures: Vec<RunFailure>,
    /// Seconds per successful run. Kept out of the JSON report so that the
    /// report is reproducible; written separately.
    #[serde(skip)]
    pub wall_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub scenario: BenchmarkScenario,
    pub runs: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Both solvers fit exact Born-rule expectations of the noisy state, and
    /// fidelity is measured against that same noisy state.
    pub data: String,
    pub epoch_axis: Vec<usize>,
    pub mle: MethodSummary,
    pub gan: MethodSummary,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// `epoch,mle_mean,mle_std,gan_mean,gan_std`.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("epoch,mle_mean,mle_std,gan_mean,gan_std\n");
        let cell = |v: &[f64], i: usize| v.get(i).map(|x| format!("{x:e}")).unwrap_or_default();
        for (i, e) in self.epoch_axis.iter().enumerate() {
            writeln!(
                out,
                "{e},{},{},{},{}",
                cell(&self.mle.mean, i),
                cell(&self.mle.std, i),
                cell(&self.gan.mean, i),
                cell(&self.gan.std, i)
            )
            .unwrap();
        }
        out
    }

    /// `method,run,wall_time_s`.
    pub fn timings_csv(&self) -> String {
        let mut out = String::from("method,run,wall_time_s\n");
        for (name, s) in [("mle", &self.mle), ("gan", &self.gan)] {
            for (run, t) in s.wall_times.iter().enumerate() {
                writeln!(out, "{name},{run},{t}").unwrap();
            }
        }
        out
    }

    pub fn final_mean(&self, method: Method) -> Option<f64> {
        match method {
            Method::Mle => self.mle.mean.last().copied(),
            Method::Gan => self.gan.mean.last().copied(),
        }
    }
}

/// 0, record_every, 2·record_every, … and the final epoch.
pub fn epoch_axis(epochs: usize, record_every: usize) -> Vec<usize> {
    let mut axis: Vec<usize> = (0..=epochs).step_by(record_every.max(1)).collect();
    if axis.last() != Some(&epochs) {
        axis.push(epochs);
    }
    axis
}

/// Samples a history on `axis`, carrying the latest value forward (an MLE
/// run that stopped early keeps its final state).
fn align(history: &[(usize, f64)], axis: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(axis.len());
    let mut k = 0;
    for &a in axis {
        while k + 1 < history.len() && history[k + 1].0 <= a {
            k += 1;
        }
        out.push(history[k].1);
    }
    out
}

fn summarize(method: Method, outcomes: Vec<(usize, Result<(ReconstructionResult, f64)>)>, axis: &[usize], threshold: f64) -> MethodSummary {
    let mut curves = Vec::new();
    let mut summary = MethodSummary {
        method,
        mean: Vec::new(),
        std: Vec::new(),
        iterations_to_threshold: Vec::new(),
        returned_fidelity: Vec::new(),
        failures: Vec::new(),
        wall_times: Vec::new(),
    };
    for (run, outcome) in outcomes {
        match outcome {
            Ok((result, returned)) => {
                summary.iterations_to_threshold.push(result.fidelity_history.iter().find(|(_, f)| *f >= threshold).map(|&(e, _)| e));
                summary.returned_fidelity.push(returned);
                summary.wall_times.push(result.wall_time);
                curves.push(align(&result.fidelity_history, axis));
            }
            Err(e) => summary.failures.push(RunFailure { run, error: e.to_string() }),
        }
    }
    if !curves.is_empty() {
        let n = curves.len() as f64;
        for i in 0..axis.len() {
            let mean = curves.iter().map(|c| c[i]).sum::<f64>() / n;
            let var = if curves.len() > 1 { curves.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            summary.mean.push(mean);
            summary.std.push(var.sqrt());
        }
    }
    summary
}

/// Runs `runs` reconstructions per method for `epochs` epochs each. Run r
/// mixes the clean state with its own random state, so every run sees
/// different noise; both methods see the same noisy state in a given run.
/// A failing run is recorded in the report and the others continue.
pub fn run_benchmark(
    scenario: &BenchmarkScenario,
    runs: usize,
    epochs: usize,
    seed: u64,
    mle_base: &MLEConfig,
    gan_base: &GANConfig,
) -> Result<BenchmarkReport> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    if scenario.record_every == 0 {
        return Err(Error::InvalidParameter("record_every must be at least 1".into()));
    }
    let entry = num_entry(&scenario.state)?;
    let clean = num(scenario.dim, &entry.complex_amplitudes())?;
    let set = husimi_operators_on(scenario.dim, scenario.grid.clone())?;
    let axis = epoch_axis(epochs, scenario.record_every);

    let jobs: Vec<(Method, usize)> = (0..runs).flat_map(|r| [(Method::Mle, r), (Method::Gan, r)]).collect();
    let outcomes: Vec<(Method, usize, Result<(ReconstructionResult, f64)>)> = jobs
        .par_iter()
        .map(|&(method, run)| {
            let run_seed = substream_seed(seed, run as u64);
            let outcome = (|| {
                let noisy = mix_with_random(&clean, scenario.zeta, substream_seed(run_seed, MIX_STREAM))?;
                let data = expectation(&noisy, &set)?;
                let result = match method {
                    Method::Mle => {
                        let cfg = MLEConfig { max_epochs: epochs, record_every: scenario.record_every, seed: run_seed, ..mle_base.clone() };
                        mle_reconstruct(&data.into(), &set, &cfg, Some(&noisy))?
                    }
                    Method::Gan => {
                        let cfg = GANConfig {
                            epochs,
                            record_every: scenario.record_every,
                            seed: substream_seed(run_seed, GAN_STREAM),
                            ..gan_base.clone()
                        };
                        gan_reconstruct(&data, &set, &cfg, Some(&noisy))?
                    }
                };
                let returned = crate::quantum::fidelity(&result.reconstructed_dm, &noisy)?;
                Ok((result, returned))
            })();
            (method, run, outcome)
        })
        .collect();

    let mut mle = Vec::new();
    let mut gan = Vec::new();
    for (method, run, outcome) in outcomes {
        match method {
            Method::Mle => mle.push((run, outcome)),
            Method::Gan => gan.push((run, outcome)),
        }
    }
    Ok(BenchmarkReport {
        scenario: scenario.clone(),
        runs,
        epochs,
        seed,
        data: "exact_expectations".into(),
        mle: summarize(Method::Mle, mle, &axis, scenario.threshold),
        gan: summarize(Method::Gan, gan, &axis, scenario.threshold),
        epoch_axis: axis,
    })
}
