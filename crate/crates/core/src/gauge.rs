//! Twirling over the thermodynamic gauge group `U(n_1) x ... x U(n_p)`.
//!
//! Every function here takes states already expressed in the energy basis;
//! use [`crate::spectral::to_energy_basis`] first.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};
use crate::spectral::{DegeneracyStructure, SpectralData};
use crate::CMatrix;

fn check_dims(found: usize, gamma: &DegeneracyStructure) -> Result<()> {
    let expected = gamma.dim();
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Twirl of an arbitrary square matrix: each diagonal block is replaced by
/// its trace divided by the block size, times the identity; off-block
/// entries vanish.
pub fn twirl_operator(m: &CMatrix, gamma: &DegeneracyStructure) -> Result<CMatrix> {
    check_dims(m.nrows(), gamma)?;
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    for c in gamma.clusters() {
        let r = c.range();
        let tr: Complex64 = r.clone().map(|i| m[(i, i)]).sum();
        let avg = tr / c.multiplicity as f64;
        for i in r {
            out[(i, i)] = avg;
        }
    }
    Ok(out)
}

/// The twirled state `rho_dd^E = ⊕_k (Tr{Π_k rho Π_k} / n_k) 1_{n_k}`.
pub fn twirl(rho_e: &DensityMatrix, gamma: &DegeneracyStructure) -> Result<DensityMatrix> {
    let mut m = twirl_operator(rho_e.matrix(), gamma)?;
    for i in 0..m.nrows() {
        m[(i, i)].im = 0.0;
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Populations of the twirled state, one per eigenvector.
pub fn twirled_populations(rho_e: &DensityMatrix, gamma: &DegeneracyStructure) -> Result<Vec<f64>> {
    check_dims(rho_e.dim(), gamma)?;
    let m = rho_e.matrix();
    let mut out = vec![0.0; m.nrows()];
    for c in gamma.clusters() {
        let r = c.range();
        let avg = r.clone().map(|i| m[(i, i)].re).sum::<f64>() / c.multiplicity as f64;
        for i in r {
            out[i] = avg;
        }
    }
    Ok(out)
}

/// Removes every off-diagonal entry.
pub fn dephase(rho_e: &DensityMatrix) -> DensityMatrix {
    let d = rho_e.dim();
    let m = rho_e.matrix();
    let out = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            ZERO
        }
    });
    DensityMatrix::from_matrix_unchecked(out)
}

/// `rho_c^E = rho^E - dephase(rho^E)`: zero diagonal, traceless.
pub fn coherence_part(rho_e: &DensityMatrix) -> CMatrix {
    let mut m = rho_e.matrix().clone();
    for i in 0..m.nrows() {
        m[(i, i)] = ZERO;
    }
    m
}

/// `||rho^E - twirl(rho^E)||_F <= tol`.
pub fn is_invariant(rho_e: &DensityMatrix, gamma: &DegeneracyStructure, tol: f64) -> Result<bool> {
    let t = twirl_operator(rho_e.matrix(), gamma)?;
    Ok(linalg::frobenius(&(rho_e.matrix() - t)) <= tol)
}

/// An element of the gauge group in the energy basis: a block-diagonal
/// unitary with one `n_k x n_k` block per level.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement {
    blocks: Vec<CMatrix>,
    matrix: CMatrix,
}

impl GaugeElement {
    pub fn from_blocks(blocks: Vec<CMatrix>) -> Result<Self> {
        let d: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut matrix = CMatrix::zeros(d, d);
        let mut off = 0;
        for b in &blocks {
            let n = b.nrows();
            if b.ncols() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: b.ncols(),
                });
            }
            let err = linalg::frobenius(&(b.adjoint() * b - CMatrix::identity(n, n)));
            if err > 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "gauge block is not unitary (error {err:e})"
                )));
            }
            matrix.view_mut((off, off), (n, n)).copy_from(b);
            off += n;
        }
        Ok(Self { blocks, matrix })
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// The assembled block-diagonal unitary in the energy basis.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `u V u†`: the same element acting on states in the original basis.
    pub fn to_lab(&self, s: &SpectralData) -> Result<CMatrix> {
        s.to_lab(&self.matrix)
    }

    /// `V rho V†`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.conjugate_by(&self.matrix)
    }
}

/// Draws each block Haar-uniformly from `U(n_k)`.
pub fn sample_gauge_element_with<R: Rng + ?Sized>(gamma: &DegeneracyStructure, rng: &mut R) -> GaugeElement {
    let blocks: Vec<CMatrix> = gamma
        .clusters()
        .iter()
        .map(|c| linalg::haar_unitary(rng, c.multiplicity))
        .collect();
    let d = gamma.dim();
    let mut matrix = CMatrix::zeros(d, d);
    for (c, b) in gamma.clusters().iter().zip(&blocks) {
        matrix
            .view_mut((c.start, c.start), (c.multiplicity, c.multiplicity))
            .copy_from(b);
    }
    GaugeElement { blocks, matrix }
}

/// Deterministic for a given seed.
pub fn sample_gauge_element(gamma: &DegeneracyStructure, seed: u64) -> GaugeElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_gauge_element_with(gamma, &mut rng)
}

/// Monte-Carlo estimate of the twirl: the sample mean of `V rho V†` over
/// `n_samples` Haar-random gauge elements, with the element-wise standard
/// error aggregated as a Frobenius norm. With a single sample the standard
/// error is infinite.
pub fn mc_twirl(
    rho_e: &DensityMatrix,
    gamma: &DegeneracyStructure,
    n_samples: usize,
    seed: u64,
) -> Result<(DensityMatrix, f64)> {
    check_dims(rho_e.dim(), gamma)?;
    if n_samples == 0 {
        return Err(Error::InvalidParams("n_samples must be at least 1".into()));
    }
    let d = rho_e.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = CMatrix::zeros(d, d);
    let mut m2 = vec![0.0f64; d * d];
    for n in 1..=n_samples {
        let v = sample_gauge_element_with(gamma, &mut rng);
        let x = linalg::conjugate_out(v.matrix(), rho_e.matrix());
        // Welford update per entry
        for (idx, (mu, xi)) in mean.iter_mut().zip(x.iter()).enumerate() {
            let delta = *xi - *mu;
            *mu += delta / n as f64;
            m2[idx] += (delta.conj() * (*xi - *mu)).re;
        }
    }
    let stderr = if n_samples > 1 {
        let n = n_samples as f64;
        m2.iter().map(|s| s / (n - 1.0) / n).sum::<f64>().sqrt()
    } else {
        f64::INFINITY
    };
    linalg::hermitize(&mut mean);
    Ok((DensityMatrix::from_matrix_unchecked(mean), stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_matrix, frobenius, random_density, ONE};
    use crate::CVector;

    fn gamma(p: &[usize]) -> DegeneracyStructure {
        DegeneracyStructure::from_multiplicities(p).unwrap()
    }

    fn random_state(seed: u64, d: usize) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DensityMatrix::new(random_density(&mut rng, d)).unwrap()
    }

    #[test]
    fn nondegenerate_twirl_is_dephasing() {
        let rho = random_state(1, 4);
        let t = twirl(&rho, &gamma(&[1, 1, 1, 1])).unwrap();
        assert_eq!(t, dephase(&rho));
    }

    #[test]
    fn single_cluster_twirl_is_maximally_mixed() {
        let rho = random_state(2, 5);
        let t = twirl(&rho, &gamma(&[5])).unwrap();
        assert!(frobenius(&(t.matrix() - DensityMatrix::maximally_mixed(5).matrix())) < 1e-15);
    }

    #[test]
    fn forced_block_average() {
        let rho = DensityMatrix::diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let t = twirl(&rho, &gamma(&[2, 1])).unwrap();
        assert!(frobenius(&(t.matrix() - diag_matrix(&[0.4, 0.4, 0.2]))) < 1e-16);
    }

    #[test]
    fn twirl_dimension_mismatch() {
        let rho = random_state(3, 3);
        assert!(matches!(
            twirl(&rho, &gamma(&[2, 2])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dephase_examples() {
        let psi = CVector::from_vec(vec![ONE, ONE]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let d = dephase(&rho);
        assert!(frobenius(&(d.matrix() - diag_matrix(&[0.5, 0.5]))) < 1e-15);
        let c = coherence_part(&rho);
        assert!((c[(0, 1)].re - 0.5).abs() < 1e-15 && c[(0, 0)] == ZERO);
        let diag = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        assert_eq!(dephase(&diag), diag);
        assert_eq!(coherence_part(&diag), CMatrix::zeros(2, 2));
    }

    #[test]
    fn coherences_twirl_to_zero_when_nondegenerate() {
        let rho = random_state(4, 6);
        let c = coherence_part(&rho);
        assert_eq!(twirl_operator(&c, &gamma(&[1; 6])).unwrap(), CMatrix::zeros(6, 6));
    }

    #[test]
    fn invariance_checks() {
        let rho = random_state(5, 4);
        let g = gamma(&[1, 2, 1]);
        let t = twirl(&rho, &g).unwrap();
        assert!(is_invariant(&t, &g, 1e-14).unwrap());

        let psi = CVector::from_vec(vec![ONE, ONE]);
        let coherent = DensityMatrix::pure(&psi).unwrap();
        assert!(!is_invariant(&coherent, &gamma(&[1, 1]), 1e-6).unwrap());

        // microcanonical state on one level
        let micro = DensityMatrix::diagonal(&[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(is_invariant(&micro, &g, 1e-15).unwrap());
    }

    #[test]
    fn gauge_element_shapes() {
        let v = sample_gauge_element(&gamma(&[1, 1, 1]), 9);
        let m = v.matrix();
        for i in 0..3 {
            assert!((m[(i, i)].norm() - 1.0).abs() < 1e-14);
            for j in 0..3 {
                if i != j {
                    assert_eq!(m[(i, j)], ZERO);
                }
            }
        }
        let full = sample_gauge_element(&gamma(&[4]), 9);
        assert!(frobenius(&(full.matrix().adjoint() * full.matrix() - CMatrix::identity(4, 4))) < 1e-12);
        assert_eq!(
            sample_gauge_element(&gamma(&[2, 3]), 17),
            sample_gauge_element(&gamma(&[2, 3]), 17)
        );
    }

    #[test]
    fn gauge_element_commutes_with_h() {
        let g = gamma(&[3, 1, 2]);
        let h = diag_matrix(&[0.0, 0.0, 0.0, 1.5, 2.0, 2.0]);
        let v = sample_gauge_element(&g, 3);
        let comm = v.matrix() * &h - &h * v.matrix();
        assert!(frobenius(&comm) <= 1e-10 * frobenius(&h));
    }

    #[test]
    fn mc_of_invariant_state_is_exact() {
        let g = gamma(&[2, 1]);
        let t = twirl(&random_state(6, 3), &g).unwrap();
        let (est, se) = mc_twirl(&t, &g, 200, 1).unwrap();
        assert!(frobenius(&(est.matrix() - t.matrix())) < 1e-14);
        assert!(se < 1e-14);
    }

    #[test]
    fn mc_single_sample_is_one_conjugation() {
        let g = gamma(&[2, 1]);
        let rho = random_state(7, 3);
        let (est, se) = mc_twirl(&rho, &g, 1, 99).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let v = sample_gauge_element_with(&g, &mut rng);
        let expected = v.apply(&rho).unwrap();
        assert!(frobenius(&(est.matrix() - expected.matrix())) < 1e-15);
        assert!(se.is_infinite());
    }

    #[test]
    fn mc_converges_to_closed_form() {
        let g = gamma(&[2, 1]);
        let rho = random_state(8, 3);
        let (est, se) = mc_twirl(&rho, &g, 20_000, 123).unwrap();
        let exact = twirl(&rho, &g).unwrap();
        let err = frobenius(&(est.matrix() - exact.matrix()));
        assert!(err <= 5.0 * se, "err {err} se {se}");
    }
}
