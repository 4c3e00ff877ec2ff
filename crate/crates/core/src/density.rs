use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::{CMatrix, CVector};

const TRACE_TOL: f64 = 1e-12;
const HERMITICITY_TOL: f64 = 1e-12;
const NEGATIVITY_TOL: f64 = 1e-10;

/// A unit-trace, positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates `matrix` as a state: Hermitian and unit trace to 1e-12, smallest
    /// eigenvalue no lower than -1e-10. The stored matrix is symmetrised.
    pub fn new(mut matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let n = matrix.nrows();
        if n == 0 {
            return Err(Error::InvalidState("empty matrix".into()));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        for i in 0..n {
            for j in i..n {
                let dev = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if dev > HERMITICITY_TOL {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        deviation: dev,
                        tol: HERMITICITY_TOL,
                    });
                }
            }
        }
        linalg::hermitize(&mut matrix);
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = if linalg::is_diagonal(&matrix) {
            matrix.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
        } else {
            linalg::hermitian_eigenvalues(&matrix)?[0]
        };
        if min < -NEGATIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Builds a state without validation. Callers guarantee the invariants,
    /// e.g. for unitary conjugates or convex mixtures of valid states.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    /// `|psi><psi|` for a (not necessarily normalised) nonzero vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let v = psi / Complex64::new(norm, 0.0);
        let mut m = &v * v.adjoint();
        linalg::hermitize(&mut m);
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = Complex64::new(1.0 / dim as f64, 0.0);
        Self {
            matrix: CMatrix::identity(dim, dim) * p,
        }
    }

    /// Diagonal state with the given populations (must sum to one).
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::new(linalg::diag_matrix(populations))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        linalg::re_trace_product(&self.matrix, &self.matrix)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if linalg::is_diagonal(&self.matrix) {
            let mut d: Vec<f64> = self.matrix.diagonal().iter().map(|z| z.re).collect();
            d.sort_by(f64::total_cmp);
            return Ok(d);
        }
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// `V rho V†` for a unitary `V`.
    pub fn conjugate_by(&self, v: &CMatrix) -> Result<Self> {
        if v.nrows() != self.dim() || v.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.nrows(),
            });
        }
        let mut m = linalg::conjugate_out(v, &self.matrix);
        linalg::hermitize(&mut m);
        Ok(Self { matrix: m })
    }

    /// Computational-basis state `|index><index|`.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, count: dim });
        }
        let m = CMatrix::from_fn(dim, dim, |i, j| if i == index && j == index { ONE } else { ZERO });
        Ok(Self { matrix: m })
    }
}
