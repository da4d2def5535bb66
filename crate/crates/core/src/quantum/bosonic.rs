use num_complex::Complex64 as C64;

use super::linalg::{expm, ComplexMatrix};

/// Ladder and number operators of a Fock space truncated to `dim` levels.
#[derive(Debug, Clone)]
pub struct BosonicOperators {
    annihilation: ComplexMatrix,
    number: ComplexMatrix,
}

impl BosonicOperators {
    pub fn new(dim: usize) -> Self {
        let mut annihilation = ComplexMatrix::zeros(dim, dim);
        for n in 1..dim {
            annihilation[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        let number = ComplexMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) });
        Self { annihilation, number }
    }

    pub fn dim(&self) -> usize {
        self.number.nrows()
    }

    /// a, with a|n⟩ = √n |n-1⟩.
    pub fn annihilation(&self) -> &ComplexMatrix {
        &self.annihilation
    }

    /// a†.
    pub fn creation(&self) -> ComplexMatrix {
        self.annihilation.adjoint()
    }

    /// a†a.
    pub fn number(&self) -> &ComplexMatrix {
        &self.number
    }

    /// α a† − conj(α) a.
    pub(crate) fn displacement_generator(&self, alpha: C64) -> ComplexMatrix {
        self.creation() * alpha - &self.annihilation * alpha.conj()
    }

    /// (conj(z) a² − z a†²)/2.
    pub(crate) fn squeeze_generator(&self, z: C64) -> ComplexMatrix {
        let a2 = &self.annihilation * &self.annihilation;
        let ad2 = a2.adjoint();
        (a2 * z.conj() - ad2 * z).unscale(2.0)
    }
}

/// D(α) = exp(α a† − conj(α) a) in the truncated space. Accurate on the
/// low-photon subspace; the highest levels carry truncation error.
pub fn displacement_operator(ops: &BosonicOperators, alpha: C64) -> ComplexMatrix {
    expm(&ops.displacement_generator(alpha))
}

/// S(z) = exp((conj(z) a² − z a†²)/2) in the truncated space.
pub fn squeeze_operator(ops: &BosonicOperators, z: C64) -> ComplexMatrix {
    expm(&ops.squeeze_generator(z))
}
