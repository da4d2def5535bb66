//! Dense complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Largest entry-wise deviation from Hermiticity, max |m_ij - conj(m_ji)|.
pub fn hermitian_violation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Real trace of a square matrix.
pub fn trace_re(m: &ComplexMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Tr(a b) without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// (M + M†)/2 with entries below 1e-30 of the largest one flushed to zero.
/// nalgebra's eigensolver can return NaN on matrices whose entries span
/// hundreds of decades (e.g. a weak coherent state), and the flush moves
/// eigenvalues by at most n·1e-30 of the scale.
fn symmetrized(m: &ComplexMatrix) -> ComplexMatrix {
    let mut sym = (m + m.adjoint()).scale(0.5);
    let scale = sym.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
    let cutoff = scale * 1e-30;
    for v in sym.iter_mut() {
        if v.norm() < cutoff {
            *v = C64::new(0.0, 0.0);
        }
    }
    sym
}

/// Eigen-decomposition of a Hermitian matrix. Only the lower triangle is
/// trusted; the input is symmetrized first. Eigenvalues come back ascending
/// with eigenvectors as the matching columns.
pub fn hermitian_eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let sym = symmetrized(m);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Hermitian eigenvalues in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let sym = symmetrized(m);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Eigenvalues at or below `dim·ε·λ_max` are roundoff. Their square roots
/// would be of order √ε, far larger than the error they represent.
pub fn roundoff_floor(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    values.len() as f64 * f64::EPSILON * top
}

/// Square root of a PSD Hermitian matrix; roundoff eigenvalues are set to
/// zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigh(m);
    let n = m.nrows();
    let floor = roundoff_floor(&values);
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let s = if lambda > floor { lambda.sqrt() } else { 0.0 };
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Relative size of the last retained Taylor term. Kept at machine precision so
// that the residual after squaring stays below 1e-12.
const TERM_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 60;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled by 2^-s until its 1-norm is at most 1/2, the series
/// is summed until the next term is negligible against the partial sum,
/// then the result is squared s times.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.scale(0.5_f64.powi(squarings as i32));

    let mut sum = ComplexMatrix::identity(n, n);
    let mut term = ComplexMatrix::identity(n, n);
    for k in 1..SERIES_MAX_TERMS {
        term = (&term * &scaled).unscale(k as f64);
        sum += &term;
        if one_norm(&term) <= TERM_TOL * one_norm(&sum).max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// A linear map that can be applied to vectors, with a cheap bound on its
/// induced 1-norm.
pub trait LinearOp {
    fn apply(&self, v: &ComplexVector) -> ComplexVector;
    fn norm_bound(&self) -> f64;
}

impl LinearOp for ComplexMatrix {
    fn apply(&self, v: &ComplexVector) -> ComplexVector {
        self * v
    }

    fn norm_bound(&self) -> f64 {
        one_norm(self)
    }
}

/// Square matrix stored by its nonzero diagonals. Diagonal `k` holds the
/// entries (i, i + k), so negative offsets are below the main diagonal.
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    bands: Vec<(isize, Vec<C64>)>,
}

impl Banded {
    /// Keeps the diagonals of `m` that have any nonzero entry.
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        let mut bands = Vec::new();
        for k in -(n as isize - 1)..(n as isize) {
            let entries: Vec<C64> = (0..n)
                .filter_map(|i| {
                    let j = i as isize + k;
                    (0..n as isize).contains(&j).then(|| m[(i, j as usize)])
                })
                .collect();
            if entries.iter().any(|z| z.norm_sqr() > 0.0) {
                bands.push((k, entries));
            }
        }
        Self { n, bands }
    }

    pub fn scale(&self, s: C64) -> Self {
        let bands = self.bands.iter().map(|(k, e)| (*k, e.iter().map(|z| z * s).collect())).collect();
        Self { n: self.n, bands }
    }
}

impl LinearOp for Banded {
    fn apply(&self, v: &ComplexVector) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.n);
        for (k, entries) in &self.bands {
            let row0 = if *k < 0 { (-k) as usize } else { 0 };
            for (t, z) in entries.iter().enumerate() {
                let i = row0 + t;
                out[i] += z * v[(i as isize + k) as usize];
            }
        }
        out
    }

    fn norm_bound(&self) -> f64 {
        let mut col_sums = vec![0.0; self.n];
        for (k, entries) in &self.bands {
            let row0 = if *k < 0 { (-k) as usize } else { 0 };
            for (t, z) in entries.iter().enumerate() {
                col_sums[((row0 + t) as isize + k) as usize] += z.norm();
            }
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }
}

/// exp(a) v without forming exp(a). The exponent is split into slices of
/// 1-norm at most 1/2 and each slice's Taylor series is applied to the vector.
pub fn expm_apply<A: LinearOp + ?Sized>(a: &A, v: &ComplexVector) -> ComplexVector {
    let norm = a.norm_bound();
    let steps = if norm > 0.5 { (norm / 0.5).ceil() as usize } else { 1 };
    let inv_steps = 1.0 / steps as f64;
    let mut out = v.clone();
    for _ in 0..steps {
        let mut sum = out.clone();
        let mut term = out;
        for k in 1..SERIES_MAX_TERMS {
            term = a.apply(&term).scale(inv_steps / k as f64);
            sum += &term;
            if term.norm() <= TERM_TOL * sum.norm().max(1.0) {
                break;
            }
        }
        out = sum;
    }
    out
}
