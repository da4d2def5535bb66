use num_complex::Complex64 as C64;

use super::linalg::{trace_re, ComplexMatrix};
use super::DensityMatrix;
use crate::error::{Error, Result};

/// Lower-triangular factor T with ρ = TT†/Tr(TT†).
///
/// Entries above the diagonal are zero and the diagonal is real. The free real
/// parameters are packed as
///
/// ```text
/// [ Re T_ij for i > j (row-major) | Im T_ij for i > j (row-major) | T_ii for i = 0..dim ]
/// ```
///
/// for a total of dim² values.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyParams {
    lower: ComplexMatrix,
}

impl CholeskyParams {
    pub fn new(lower: ComplexMatrix) -> Result<Self> {
        if lower.nrows() != lower.ncols() || lower.nrows() == 0 {
            return Err(Error::NotSquare(lower.nrows(), lower.ncols()));
        }
        let n = lower.nrows();
        for i in 0..n {
            if lower[(i, i)].im != 0.0 {
                return Err(Error::NotLowerTriangular);
            }
            for j in (i + 1)..n {
                if lower[(i, j)] != C64::new(0.0, 0.0) {
                    return Err(Error::NotLowerTriangular);
                }
            }
        }
        Ok(Self { lower })
    }

    /// Keeps the lower triangle of `m`, drops the imaginary part of the
    /// diagonal and zeroes the rest.
    pub fn from_lower_part(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        let lower = ComplexMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => m[(i, j)],
            std::cmp::Ordering::Equal => C64::new(m[(i, i)].re, 0.0),
            std::cmp::Ordering::Less => C64::new(0.0, 0.0),
        });
        Self { lower }
    }

    pub fn identity(dim: usize) -> Self {
        Self { lower: ComplexMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &ComplexMatrix {
        &self.lower
    }

    /// Number of packed real parameters for a given dimension.
    pub fn n_params(dim: usize) -> usize {
        dim * dim
    }

    pub fn from_packed(dim: usize, params: &[f64]) -> Result<Self> {
        if params.len() != dim * dim {
            return Err(Error::LengthMismatch { expected: dim * dim, got: params.len() });
        }
        let n_off = dim * (dim - 1) / 2;
        let mut lower = ComplexMatrix::zeros(dim, dim);
        let mut k = 0;
        for i in 1..dim {
            for j in 0..i {
                lower[(i, j)] = C64::new(params[k], params[n_off + k]);
                k += 1;
            }
        }
        for i in 0..dim {
            lower[(i, i)] = C64::new(params[2 * n_off + i], 0.0);
        }
        Ok(Self { lower })
    }

    pub fn to_packed(&self) -> Vec<f64> {
        let dim = self.dim();
        let n_off = dim * (dim - 1) / 2;
        let mut out = vec![0.0; dim * dim];
        let mut k = 0;
        for i in 1..dim {
            for j in 0..i {
                out[k] = self.lower[(i, j)].re;
                out[n_off + k] = self.lower[(i, j)].im;
                k += 1;
            }
        }
        for i in 0..dim {
            out[2 * n_off + i] = self.lower[(i, i)].re;
        }
        out
    }

    /// Multiplies columns with a negative diagonal entry by -1 so that the
    /// diagonal is non-negative. TT† is unchanged.
    pub fn canonical(mut self) -> Self {
        for j in 0..self.dim() {
            if self.lower[(j, j)].re < 0.0 {
                let mut col = self.lower.column_mut(j);
                col.neg_mut();
            }
        }
        self
    }

    /// TT†.
    pub fn gram(&self) -> ComplexMatrix {
        &self.lower * self.lower.adjoint()
    }
}

/// ρ = TT†/Tr(TT†).
pub fn cholesky_to_dm(t: &CholeskyParams) -> Result<DensityMatrix> {
    let gram = t.gram();
    let trace = trace_re(&gram);
    if !(trace > 1e-30) || !trace.is_finite() {
        return Err(Error::DegenerateT(trace));
    }
    Ok(DensityMatrix::from_psd_unchecked(gram.unscale(trace)))
}

/// Cholesky factor of ρ + εI, rescaled to unit Frobenius norm so that
/// Tr(TT†) = 1.
pub fn dm_to_cholesky(rho: &DensityMatrix, epsilon: f64) -> Result<CholeskyParams> {
    let n = rho.dim();
    let shifted = rho.matrix() + ComplexMatrix::identity(n, n).scale(epsilon.max(0.0));
    let chol = shifted.cholesky().ok_or(Error::FactorizationFailed)?;
    let l = chol.unpack();
    let norm = l.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::FactorizationFailed);
    }
    Ok(CholeskyParams::from_lower_part(&l.unscale(norm)).canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::fidelity;
    use crate::quantum::linalg::ComplexVector;

    #[test]
    fn identity_factor_gives_maximally_mixed() {
        let rho = cholesky_to_dm(&CholeskyParams::identity(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((rho.get(i, j) - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_entry_factor_gives_vacuum() {
        let mut m = ComplexMatrix::zeros(3, 3);
        m[(0, 0)] = C64::new(3.0, 0.0);
        let rho = cholesky_to_dm(&CholeskyParams::new(m).unwrap()).unwrap();
        assert_eq!(rho.get(0, 0), C64::new(1.0, 0.0));
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_factor_is_degenerate() {
        let t = CholeskyParams::new(ComplexMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(cholesky_to_dm(&t), Err(Error::DegenerateT(_))));
    }

    #[test]
    fn structure_is_enforced() {
        let mut upper = ComplexMatrix::identity(2, 2);
        upper[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(CholeskyParams::new(upper), Err(Error::NotLowerTriangular)));
        let mut complex_diag = ComplexMatrix::identity(2, 2);
        complex_diag[(1, 1)] = C64::new(1.0, 0.5);
        assert!(matches!(CholeskyParams::new(complex_diag), Err(Error::NotLowerTriangular)));
    }

    #[test]
    fn packing_layout_is_documented_order() {
        // dim 3: off-diagonal order (1,0), (2,0), (2,1)
        let params: Vec<f64> = (1..=9).map(f64::from).collect();
        let t = CholeskyParams::from_packed(3, &params).unwrap();
        assert_eq!(t.lower()[(1, 0)], C64::new(1.0, 4.0));
        assert_eq!(t.lower()[(2, 0)], C64::new(2.0, 5.0));
        assert_eq!(t.lower()[(2, 1)], C64::new(3.0, 6.0));
        assert_eq!(t.lower()[(0, 0)], C64::new(7.0, 0.0));
        assert_eq!(t.lower()[(2, 2)], C64::new(9.0, 0.0));
        assert_eq!(t.to_packed(), params);
        assert!(matches!(CholeskyParams::from_packed(3, &params[..8]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn canonical_keeps_state() {
        let t = CholeskyParams::from_packed(2, &[0.3, -0.2, -1.5, 0.7]).unwrap();
        let c = t.clone().canonical();
        assert!(c.lower()[(0, 0)].re >= 0.0);
        assert!((cholesky_to_dm(&t).unwrap().matrix() - cholesky_to_dm(&c).unwrap().matrix()).norm() < 1e-15);
    }

    #[test]
    fn maximally_mixed_round_trip_is_proportional_to_identity() {
        let rho = DensityMatrix::maximally_mixed(4);
        let t = dm_to_cholesky(&rho, 1e-12).unwrap();
        let d = t.lower()[(0, 0)].re;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { d } else { 0.0 };
                assert!((t.lower()[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_round_trip() {
        let mut v = ComplexVector::zeros(4);
        v[1] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::from_pure(&v).unwrap();
        let back = cholesky_to_dm(&dm_to_cholesky(&rho, 1e-10).unwrap()).unwrap();
        assert!(fidelity(&rho, &back).unwrap() >= 1.0 - 1e-9);
    }
}
