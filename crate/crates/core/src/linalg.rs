//! Small dense linear-algebra helpers shared by the other modules.

use std::ops::Range;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Re Tr{A B}` without forming the product.
pub fn re_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// `a b`, computed in real arithmetic when both factors are real.
pub fn product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    if is_real(a) && is_real(b) {
        (a.map(|z| z.re) * b.map(|z| z.re)).map(|x| Complex64::new(x, 0.0))
    } else {
        a * b
    }
}

/// `u† m u`.
pub fn conjugate_into(u: &CMatrix, m: &CMatrix) -> CMatrix {
    product(&u.adjoint(), &product(m, u))
}

/// `u m u†`.
pub fn conjugate_out(u: &CMatrix, m: &CMatrix) -> CMatrix {
    product(&product(u, m), &u.adjoint())
}

/// Entries of `u† m u` whose row and column fall in the same index range;
/// every other entry is zero.
pub fn conjugate_into_blocks(u: &CMatrix, m: &CMatrix, blocks: impl IntoIterator<Item = Range<usize>>) -> CMatrix {
    let n = u.ncols();
    let mu = product(m, u);
    let mut out = CMatrix::zeros(n, n);
    for r in blocks {
        for i in r.clone() {
            let ui = u.column(i);
            for j in r.clone() {
                out[(i, j)] = ui.dotc(&mu.column(j));
            }
        }
    }
    out
}

pub fn diag_matrix(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO })
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == ZERO))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending. Ties keep the solver's order.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let dim = m.nrows();
    if dim == 1 {
        return Ok((vec![m[(0, 0)].re], CMatrix::identity(1, 1)));
    }
    let max_iter = (60 * dim).max(1000);
    let (raw_values, raw_vectors) = if m.iter().all(|z| z.im == 0.0) {
        // Real symmetric input: the real solver is several times faster.
        let eig = SymmetricEigen::try_new(m.map(|z| z.re), f64::EPSILON, max_iter)
            .ok_or(Error::EigensolverFailure { dim })?;
        (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig =
            SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or(Error::EigensolverFailure { dim })?;
        (eig.eigenvalues, eig.eigenvectors)
    };
    if raw_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolverFailure { dim });
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
    let values = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw_vectors.column(src));
    }
    Ok((values, vectors))
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|(v, _)| v)
}

/// Multiplies the vector by a phase so that its largest-magnitude component
/// is real and positive. Near-ties resolve to the lowest index.
pub fn fix_phase(v: &mut CVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let idx = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).unwrap_or(0);
    let pivot = v[idx];
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Haar-distributed `n x n` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = complex_gaussian(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix `G G† / Tr{G G†}` from a complex Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = complex_gaussian(rng, n, n);
    let mut rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    rho /= Complex64::new(tr, 0.0);
    hermitize(&mut rho);
    rho
}

/// Random Hermitian matrix with iid complex Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = complex_gaussian(rng, n, n);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Replaces `m` by `(m + m†)/2`.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            let u = haar_unitary(&mut rng, n);
            let err = frobenius(&(u.adjoint() * &u - CMatrix::identity(n, n)));
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 9);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let rec = &vecs * diag_matrix(&vals) * vecs.adjoint();
        assert!(frobenius(&(rec - &h)) < 1e-12);
    }

    #[test]
    fn fix_phase_makes_pivot_positive() {
        let mut v = CVector::from_vec(vec![Complex64::new(0.1, 0.0), Complex64::new(0.0, -0.9)]);
        fix_phase(&mut v);
        assert!((v[1].re - 0.9).abs() < 1e-15 && v[1].im.abs() < 1e-15);
    }

    #[test]
    fn random_density_is_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density(&mut rng, 5);
        assert!((trace(&rho).re - 1.0).abs() < 1e-14);
        assert!(hermitian_eigenvalues(&rho).unwrap()[0] > -1e-14);
    }
}
