//! Measurement operators, Born-rule expectations and finite-shot sampling.
//!
//! Phase-space convention: ħ = 1, x̂ = (a + a†)/√2, p̂ = (a − a†)/(i√2), and
//! the coherent state probed at grid point (x, p) is |β⟩ with
//! β = (x + i p)/√2. Husimi operators carry the grid-cell weight ΔA/π, so the
//! expectation vector is a Riemann-sum probability per cell rather than a
//! density.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::PhaseSpaceImage;
use crate::quantum::linalg::{hermitian_eigenvalues, hermitian_violation, trace_product};
use crate::quantum::{ComplexMatrix, DensityMatrix};
use crate::rng::rng_from_seed;
use crate::states::coherent_amplitudes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    HusimiGrid,
    PhotonNumber,
    Custom,
}

/// Uniform phase-space sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xgrid: Vec<f64>,
    pub pgrid: Vec<f64>,
}

/// `n` evenly spaced points from `low` to `high` inclusive.
pub fn linspace(low: f64, high: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![low],
        _ => (0..n).map(|i| low + (high - low) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn check_axis(axis: &[f64]) -> Result<f64> {
    if axis.len() < 2 || axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonMonotonicGrid);
    }
    let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::NonMonotonicGrid);
    }
    for w in axis.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::NonMonotonicGrid);
        }
    }
    Ok(step)
}

impl Grid {
    pub fn new(xgrid: Vec<f64>, pgrid: Vec<f64>) -> Result<Self> {
        check_axis(&xgrid)?;
        check_axis(&pgrid)?;
        Ok(Self { xgrid, pgrid })
    }

    /// Square grid of `n` points per axis on [low, high]².
    pub fn square(low: f64, high: f64, n: usize) -> Result<Self> {
        Self::new(linspace(low, high, n), linspace(low, high, n))
    }

    pub fn dx(&self) -> f64 {
        (self.xgrid[self.xgrid.len() - 1] - self.xgrid[0]) / (self.xgrid.len() - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.pgrid[self.pgrid.len() - 1] - self.pgrid[0]) / (self.pgrid.len() - 1) as f64
    }

    /// Grid-cell area ΔA = Δx Δp.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn len(&self) -> usize {
        self.xgrid.len() * self.pgrid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// β at outcome `k` (row-major over (p, x)).
    pub fn beta(&self, k: usize) -> C64 {
        let (i, j) = (k / self.xgrid.len(), k % self.xgrid.len());
        C64::new(self.xgrid[j], self.pgrid[i]) / 2f64.sqrt()
    }
}

/// Ordered measurement operators {O_k}.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    dim: usize,
    kind: SetKind,
    operators: Vec<ComplexMatrix>,
    grid: Option<Grid>,
}

impl MeasurementSet {
    /// A caller-supplied operator list. Every operator must be dim×dim,
    /// Hermitian and PSD within 1e-10.
    pub fn custom(dim: usize, operators: Vec<ComplexMatrix>) -> Result<Self> {
        for op in &operators {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch(dim, op.nrows()));
            }
            let violation = hermitian_violation(op);
            if violation > 1e-10 {
                return Err(Error::NonHermitian { violation, tol: 1e-10 });
            }
            let min_eigenvalue = hermitian_eigenvalues(op)[0];
            if min_eigenvalue < -1e-10 {
                return Err(Error::NotPositive { min_eigenvalue, tol: 1e-10 });
            }
        }
        Ok(Self { dim, kind: SetKind::Custom, operators, grid: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Σ_k w_k O_k.
    pub fn weighted_sum(&self, weights: &[f64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (op, &w) in self.operators.iter().zip(weights) {
            if w != 0.0 {
                out.zip_apply(op, |a, b| *a += b * w);
            }
        }
        out
    }
}

/// O_k = (ΔA/π)|β_k⟩⟨β_k| over the grid, row-major over (p, x). The probe
/// vectors are the exact coherent amplitudes truncated to `dim` levels.
pub fn husimi_operators(dim: usize, xgrid: &[f64], pgrid: &[f64]) -> Result<MeasurementSet> {
    let grid = Grid::new(xgrid.to_vec(), pgrid.to_vec())?;
    husimi_operators_on(dim, grid)
}

pub fn husimi_operators_on(dim: usize, grid: Grid) -> Result<MeasurementSet> {
    if dim == 0 {
        return Err(Error::DimensionTooSmall { dim, required: 0 });
    }
    let weight = grid.cell_area() / PI;
    let operators = (0..grid.len())
        .map(|k| {
            let v = coherent_amplitudes(dim, grid.beta(k));
            (&v * v.adjoint()).scale(weight)
        })
        .collect();
    Ok(MeasurementSet { dim, kind: SetKind::HusimiGrid, operators, grid: Some(grid) })
}

/// Photon-number projectors |n⟩⟨n|, n = 0..dim.
pub fn number_operators(dim: usize) -> MeasurementSet {
    let operators = (0..dim)
        .map(|n| {
            let mut m = ComplexMatrix::zeros(dim, dim);
            m[(n, n)] = C64::new(1.0, 0.0);
            m
        })
        .collect();
    MeasurementSet { dim, kind: SetKind::PhotonNumber, operators, grid: None }
}

/// Serializable recipe for a built-in measurement set, stored alongside
/// data so the operators can be rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    HusimiGrid { dim: usize, grid: Grid },
    PhotonNumber { dim: usize },
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::HusimiGrid { dim, .. } | OperatorSpec::PhotonNumber { dim } => *dim,
        }
    }

    pub fn build(&self) -> Result<MeasurementSet> {
        match self {
            OperatorSpec::HusimiGrid { dim, grid } => husimi_operators_on(*dim, Grid::new(grid.xgrid.clone(), grid.pgrid.clone())?),
            OperatorSpec::PhotonNumber { dim } => Ok(number_operators(*dim)),
        }
    }

    /// The recipe for `set`, or None for custom operators.
    pub fn describe(set: &MeasurementSet) -> Option<Self> {
        match set.kind {
            SetKind::HusimiGrid => set.grid.clone().map(|grid| OperatorSpec::HusimiGrid { dim: set.dim, grid }),
            SetKind::PhotonNumber => Some(OperatorSpec::PhotonNumber { dim: set.dim }),
            SetKind::Custom => None,
        }
    }
}

/// Born-rule outcome probabilities (or quasi-probabilities per cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationVector {
    pub values: Vec<f64>,
    pub set_kind: SetKind,
}

impl ExpectationVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl CountVector {
    pub fn as_weights(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// What a solver fits: sampled counts or exact (quasi-)probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeasurementData {
    Counts(CountVector),
    Expectations(ExpectationVector),
}

impl MeasurementData {
    /// Per-outcome weights n_k for the log-likelihood.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            MeasurementData::Counts(c) => c.as_weights(),
            MeasurementData::Expectations(e) => e.values.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            MeasurementData::Counts(c) => c.counts.len(),
            MeasurementData::Expectations(e) => e.values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl From<CountVector> for MeasurementData {
    fn from(c: CountVector) -> Self {
        MeasurementData::Counts(c)
    }
}

impl From<ExpectationVector> for MeasurementData {
    fn from(e: ExpectationVector) -> Self {
        MeasurementData::Expectations(e)
    }
}

/// p_k = Re Tr(ρ O_k).
pub fn expectation(rho: &DensityMatrix, set: &MeasurementSet) -> Result<ExpectationVector> {
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), set.dim()));
    }
    let values = set.operators.iter().map(|op| trace_product(rho.matrix(), op).re).collect();
    Ok(ExpectationVector { values, set_kind: set.kind })
}

/// Multinomial draw of `shots` outcomes with probabilities p/Σp. Drawn as a
/// chain of conditional binomials in outcome order.
pub fn sample_counts(p: &ExpectationVector, shots: u64, seed: u64) -> Result<CountVector> {
    let weights: Vec<f64> = p.values.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let mut remaining_mass: f64 = weights.iter().sum();
    if !(remaining_mass > 0.0) || !remaining_mass.is_finite() {
        return Err(Error::ZeroMass);
    }
    let mut rng = rng_from_seed(seed);
    let mut remaining = shots;
    let mut counts = vec![0_u64; weights.len()];
    for (k, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if w <= 0.0 {
            continue;
        }
        let q = (w / remaining_mass).clamp(0.0, 1.0);
        let draw = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(&mut rng)
        };
        counts[k] = draw;
        remaining -= draw;
        remaining_mass -= w;
    }
    // roundoff in the running mass can leave a few shots undistributed
    if remaining > 0 {
        if let Some(k) = weights.iter().rposition(|&w| w > 0.0) {
            counts[k] += remaining;
        }
    }
    Ok(CountVector { counts, shots })
}

/// Expectation values of a Husimi set arranged as an image; pixel (i, j)
/// sits at (pgrid[i], xgrid[j]).
pub fn husimi_image(rho: &DensityMatrix, set: &MeasurementSet) -> Result<PhaseSpaceImage> {
    let grid = match (set.kind, set.grid.as_ref()) {
        (SetKind::HusimiGrid, Some(g)) => g.clone(),
        _ => return Err(Error::WrongKind { expected: "Husimi grid" }),
    };
    let values = expectation(rho, set)?.values;
    PhaseSpaceImage::new(grid.pgrid.len(), grid.xgrid.len(), values, grid)
}
