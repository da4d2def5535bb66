//! Density matrices, the Cholesky reparametrization, fidelity and the bosonic
//! operator algebra of a truncated Fock space.

mod bosonic;
mod cholesky;
pub mod linalg;

pub use bosonic::{displacement_operator, squeeze_operator, BosonicOperators};
pub use cholesky::{cholesky_to_dm, dm_to_cholesky, CholeskyParams};
pub use linalg::{ComplexMatrix, ComplexVector};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use linalg::{hermitian_eigenvalues, hermitian_violation, psd_sqrt, roundoff_floor, trace_re};

/// Default tolerance for Hermiticity, trace and positivity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A validated quantum state: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StoredMatrix", try_from = "StoredMatrix")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

/// Row-major real and imaginary parts, used for the serde form.
#[derive(Serialize, Deserialize)]
struct StoredMatrix {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<DensityMatrix> for StoredMatrix {
    fn from(rho: DensityMatrix) -> Self {
        let (re, im) = rho.to_row_major();
        Self { dim: rho.dim(), re, im }
    }
}

impl TryFrom<StoredMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(s: StoredMatrix) -> Result<Self> {
        DensityMatrix::from_row_major(s.dim, &s.re, &s.im, DEFAULT_TOL)
    }
}

impl DensityMatrix {
    /// Validates `m` against `tol`, then symmetrizes it and rescales the trace
    /// to exactly one.
    pub fn new(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        let violation = hermitian_violation(&m);
        if !(violation <= tol) {
            return Err(Error::NonHermitian { violation, tol });
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        let trace = trace_re(&sym);
        if !((trace - 1.0).abs() <= tol) {
            return Err(Error::BadTrace { trace, tol });
        }
        let min_eigenvalue = hermitian_eigenvalues(&sym)[0];
        if !(min_eigenvalue >= -tol) {
            return Err(Error::NotPositive { min_eigenvalue, tol });
        }
        Ok(Self { matrix: sym.unscale(trace) })
    }

    /// Wraps a matrix already known to be a state up to roundoff (e.g. a
    /// normalized Gram product). Symmetrizes and normalizes the trace.
    pub(crate) fn from_psd_unchecked(m: ComplexMatrix) -> Self {
        let sym = (&m + m.adjoint()).scale(0.5);
        let trace = trace_re(&sym);
        Self { matrix: sym.unscale(trace) }
    }

    /// Rebuilds a stored state bit-for-bit. The entries are validated against
    /// `tol` but, unlike [`DensityMatrix::new`], never rescaled.
    pub fn from_row_major(dim: usize, re: &[f64], im: &[f64], tol: f64) -> Result<Self> {
        if re.len() != dim * dim || im.len() != dim * dim {
            return Err(Error::LengthMismatch { expected: dim * dim, got: re.len().min(im.len()) });
        }
        let m = ComplexMatrix::from_fn(dim, dim, |r, c| C64::new(re[r * dim + c], im[r * dim + c]));
        DensityMatrix::new(m.clone(), tol)?;
        Ok(Self { matrix: m })
    }

    /// Row-major real and imaginary parts.
    pub fn to_row_major(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                re.push(self.matrix[(r, c)].re);
                im.push(self.matrix[(r, c)].im);
            }
        }
        (re, im)
    }

    /// |ψ⟩⟨ψ| for a vector normalized here.
    pub fn from_pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let unit = psi.unscale(norm);
        Ok(Self::from_psd_unchecked(&unit * unit.adjoint()))
    }

    /// I/dim.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim, dim).unscale(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Diagonal in the Fock basis (photon-number distribution).
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Re Tr(ρ A).
    pub fn expect(&self, op: &ComplexMatrix) -> f64 {
        linalg::trace_product(&self.matrix, op).re
    }

    /// Convex combination (1 - w) self + w other.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::BadZeta(w));
        }
        Ok(Self::from_psd_unchecked(self.matrix.scale(1.0 - w) + other.matrix.scale(w)))
    }

    /// Re-runs the invariant checks at `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        Self::new(self.matrix.clone(), tol).map(|_| ())
    }
}

/// Uhlmann fidelity (Tr √(√ρ σ √ρ))², clamped to [0, 1].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let sqrt_rho = psd_sqrt(rho.matrix());
    let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    let values = hermitian_eigenvalues(&inner);
    let floor = roundoff_floor(&values);
    let root_trace: f64 = values.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn basis(dim: usize, n: usize) -> DensityMatrix {
        let mut v = ComplexVector::zeros(dim);
        v[n] = c(1.0);
        DensityMatrix::from_pure(&v).unwrap()
    }

    #[test]
    fn maximally_mixed_qubit_is_valid() {
        let m = ComplexMatrix::identity(2, 2).unscale(2.0);
        let rho = DensityMatrix::new(m, DEFAULT_TOL).unwrap();
        assert_eq!(rho.get(0, 0), c(0.5));
    }

    #[test]
    fn pure_zero_is_valid() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let rho = DensityMatrix::new(m, DEFAULT_TOL).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(0.5), c(0.6), c(0.6), c(0.5)]);
        match DensityMatrix::new(m, DEFAULT_TOL) {
            Err(Error::NotPositive { min_eigenvalue, .. }) => assert!((min_eigenvalue + 0.1).abs() < 1e-12),
            other => panic!("expected NotPositive, got {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_and_bad_trace_are_rejected() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(matches!(DensityMatrix::new(m, DEFAULT_TOL), Err(Error::NonHermitian { .. })));
        let m = ComplexMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(m, DEFAULT_TOL), Err(Error::BadTrace { .. })));
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(DensityMatrix::new(m, DEFAULT_TOL), Err(Error::NotSquare(2, 3))));
    }

    #[test]
    fn tolerance_is_caller_overridable() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(0.5 + 1e-6), c(0.0), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(m.clone(), DEFAULT_TOL).is_err());
        let rho = DensityMatrix::new(m, 1e-5).unwrap();
        assert!((trace_re(rho.matrix()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_reference_values() {
        let zero = basis(2, 0);
        let one = basis(2, 1);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity(&mixed, &zero).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(fidelity(&zero, &basis(3, 0)), Err(Error::DimensionMismatch(2, 3))));
    }
}
