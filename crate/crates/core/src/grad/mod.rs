//! Gradients shared by both reconstruction solvers.
//!
//! Everything here differentiates through ρ(T) = TT†/Tr(TT†) with respect to
//! the packed real parameters of [`CholeskyParams`]. For a Hermitian weight
//! matrix M and f(T) = Tr(ρ(T) M),
//!
//! ```text
//! ∂f/∂Re T_ij = 2 Re B_ij / τ,   ∂f/∂Im T_ij = 2 Im B_ij / τ,
//! B = (M − f I) T,   τ = Tr(TT†)
//! ```
//!
//! which is all the log-likelihood gradient and the physics-layer
//! vector-Jacobian product need.

mod adam;
mod nn;

pub use adam::{adam_step, AdamConfig, AdamState, Optimizer};
pub use nn::{dense_backward, dense_forward, Activation, DenseLayer, LayerGrad, Tape, LEAKY_SLOPE};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::MeasurementSet;
use crate::quantum::linalg::{trace_product, trace_re};
use crate::quantum::{cholesky_to_dm, CholeskyParams, ComplexMatrix, DensityMatrix};

/// Default probability floor inside the logarithm.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Packed real parameters of a Cholesky factor (see [`CholeskyParams`] for
/// the layout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn from_cholesky(t: &CholeskyParams) -> Self {
        Self(t.to_packed())
    }

    pub fn to_cholesky(&self, dim: usize) -> Result<CholeskyParams> {
        CholeskyParams::from_packed(dim, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Gradient of Tr(ρ(T) M) with respect to the packed parameters of T, for a
/// Hermitian M.
pub fn trace_vjp(t: &CholeskyParams, m: &ComplexMatrix) -> Result<ParamVector> {
    let dim = t.dim();
    let gram = t.gram();
    let tau = trace_re(&gram);
    if !(tau > 1e-30) || !tau.is_finite() {
        return Err(Error::DegenerateT(tau));
    }
    let f = trace_product(&gram, m).re / tau;
    let mut shifted = m.clone();
    for i in 0..dim {
        shifted[(i, i)] -= C64::new(f, 0.0);
    }
    let b = shifted * t.lower();
    let n_off = dim * (dim - 1) / 2;
    let mut out = vec![0.0; dim * dim];
    let scale = 2.0 / tau;
    let mut k = 0;
    for i in 1..dim {
        for j in 0..i {
            out[k] = scale * b[(i, j)].re;
            out[n_off + k] = scale * b[(i, j)].im;
            k += 1;
        }
    }
    for i in 0..dim {
        out[2 * n_off + i] = scale * b[(i, i)].re;
    }
    Ok(ParamVector(out))
}

fn check_lengths(weights: &[f64], set: &MeasurementSet, t: &CholeskyParams) -> Result<()> {
    if weights.len() != set.len() {
        return Err(Error::LengthMismatch { expected: set.len(), got: weights.len() });
    }
    if t.dim() != set.dim() {
        return Err(Error::DimensionMismatch(t.dim(), set.dim()));
    }
    Ok(())
}

fn probabilities(rho: &DensityMatrix, set: &MeasurementSet) -> Vec<f64> {
    set.operators().iter().map(|op| trace_product(rho.matrix(), op).re).collect()
}

/// ℓ = Σ_k n_k ln max(Tr(ρ(T) O_k), floor). `weights` may be counts or exact
/// probabilities.
pub fn loglik(t: &CholeskyParams, weights: &[f64], set: &MeasurementSet, floor: f64) -> Result<f64> {
    check_lengths(weights, set, t)?;
    let rho = cholesky_to_dm(t)?;
    Ok(loglik_of(&probabilities(&rho, set), weights, floor))
}

pub(crate) fn loglik_of(p: &[f64], weights: &[f64], floor: f64) -> f64 {
    p.iter()
        .zip(weights)
        .filter(|(_, &n)| n != 0.0)
        .map(|(&pk, &n)| n * pk.max(floor).ln())
        .sum()
}

/// Analytic gradient of [`loglik`]. Outcomes clamped at the floor contribute
/// nothing (the clamp is flat there).
pub fn loglik_grad(t: &CholeskyParams, weights: &[f64], set: &MeasurementSet, floor: f64) -> Result<ParamVector> {
    loglik_and_grad(t, weights, set, floor).map(|(_, g)| g)
}

/// ℓ and ∇ℓ from a single pass over the operators.
pub fn loglik_and_grad(t: &CholeskyParams, weights: &[f64], set: &MeasurementSet, floor: f64) -> Result<(f64, ParamVector)> {
    check_lengths(weights, set, t)?;
    let rho = cholesky_to_dm(t)?;
    let p = probabilities(&rho, set);
    let coeffs: Vec<f64> = p.iter().zip(weights).map(|(&pk, &n)| if pk > floor && n != 0.0 { n / pk } else { 0.0 }).collect();
    let m = set.weighted_sum(&coeffs);
    Ok((loglik_of(&p, weights, floor), trace_vjp(t, &m)?))
}

/// J[k][i] = ∂Tr(ρ(T) O_k)/∂θ_i.
pub fn expectation_jacobian(t: &CholeskyParams, set: &MeasurementSet) -> Result<DMatrix<f64>> {
    if t.dim() != set.dim() {
        return Err(Error::DimensionMismatch(t.dim(), set.dim()));
    }
    let n_params = t.dim() * t.dim();
    let mut jac = DMatrix::zeros(set.len(), n_params);
    for (k, op) in set.operators().iter().enumerate() {
        let row = trace_vjp(t, op)?;
        for (i, v) in row.iter().enumerate() {
            jac[(k, i)] = *v;
        }
    }
    Ok(jac)
}

/// Upstream gradient over outcomes pulled back to the packed parameters,
/// i.e. gᵀJ without forming J.
pub fn expectation_vjp(t: &CholeskyParams, set: &MeasurementSet, upstream: &[f64]) -> Result<ParamVector> {
    if upstream.len() != set.len() {
        return Err(Error::LengthMismatch { expected: set.len(), got: upstream.len() });
    }
    trace_vjp(t, &set.weighted_sum(upstream))
}

/// Central differences (f(x + h e_i) − f(x − h e_i))/(2h).
pub fn finite_diff_grad<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::number_operators;

    fn diag_t(d: &[f64]) -> CholeskyParams {
        let n = d.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        CholeskyParams::new(m).unwrap()
    }

    #[test]
    fn loglik_hand_cases() {
        let set = number_operators(4);
        let l = loglik(&CholeskyParams::identity(4), &[5.0; 4], &set, DEFAULT_FLOOR).unwrap();
        assert!((l - 5.0 * 4.0 * 0.25f64.ln()).abs() < 1e-12);
        assert_eq!(loglik(&CholeskyParams::identity(4), &[0.0; 4], &set, DEFAULT_FLOOR).unwrap(), 0.0);
        // ρ = diag(0.75, 0.25)
        let t = diag_t(&[3f64.sqrt(), 1.0]);
        let l = loglik(&t, &[3.0, 1.0], &number_operators(2), DEFAULT_FLOOR).unwrap();
        assert!((l - (3.0 * 0.75f64.ln() + 0.25f64.ln())).abs() < 1e-12);
        assert!(matches!(loglik(&t, &[1.0], &number_operators(2), DEFAULT_FLOOR), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn gradient_vanishes_at_two_level_optimum() {
        let t = diag_t(&[3f64.sqrt(), 1.0]);
        let g = loglik_grad(&t, &[3.0, 1.0], &number_operators(2), DEFAULT_FLOOR).unwrap();
        assert!(g.norm() <= 1e-8);
    }

    #[test]
    fn gradient_is_linear_in_counts() {
        let t = CholeskyParams::from_packed(3, &[0.2, -0.4, 0.1, 0.3, 0.0, -0.2, 1.0, 0.5, 0.7]).unwrap();
        let set = number_operators(3);
        let g1 = loglik_grad(&t, &[2.0, 1.0, 4.0], &set, DEFAULT_FLOOR).unwrap();
        let g10 = loglik_grad(&t, &[20.0, 10.0, 40.0], &set, DEFAULT_FLOOR).unwrap();
        for (a, b) in g1.iter().zip(g10.iter()) {
            assert!((10.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn jacobian_by_hand_at_identity() {
        let mut op = ComplexMatrix::zeros(2, 2);
        op[(0, 0)] = C64::new(1.0, 0.0);
        let set = MeasurementSet::custom(2, vec![op]).unwrap();
        let j = expectation_jacobian(&CholeskyParams::identity(2), &set).unwrap();
        // [Re T10, Im T10, T00, T11]
        let want = [0.0, 0.0, 0.5, -0.5];
        for (i, w) in want.iter().enumerate() {
            assert!((j[(0, i)] - w).abs() < 1e-10);
        }
    }

    #[test]
    fn number_basis_jacobian_columns_sum_to_zero() {
        let t = CholeskyParams::from_packed(3, &[0.2, -0.4, 0.1, 0.3, 0.0, -0.2, 1.0, 0.5, 0.7]).unwrap();
        let j = expectation_jacobian(&t, &number_operators(3)).unwrap();
        for c in 0..9 {
            assert!(j.column(c).sum().abs() < 1e-10);
        }
    }

    #[test]
    fn central_differences_are_exact_on_quadratics() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1] * x[1] + x[1];
        let g = finite_diff_grad(f, &[1.5, -2.0], 0.1);
        assert!((g[0] - (6.0 * 1.5 + 4.0)).abs() < 1e-12);
        assert!((g[1] - (-3.0 - 2.0 + 1.0)).abs() < 1e-12);
    }
}
