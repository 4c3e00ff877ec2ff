//! Hermitian operators, eigendecomposition and degeneracy structure.
//!
//! A Hamiltonian is written `H = u h u†` with `h` diagonal and ascending.
//! Consecutive eigenvalues closer than an absolute tolerance are grouped into
//! one cluster; the list of cluster multiplicities is the structure the
//! thermodynamic gauge group is built from.

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::CMatrix;

/// A validated dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

/// Checks `m` for hermiticity within `tol` and returns its symmetrised form
/// `(m + m†)/2`.
pub fn validate_hermitian(m: CMatrix, tol: f64) -> Result<HermitianOperator> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(Error::InvalidParams("empty matrix".into()));
    }
    for ((i, j), z) in m.iter().enumerate().map(|(idx, z)| ((idx % rows, idx / rows), z)) {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFiniteParameter(format!("entry [{i}][{j}] = {z}")));
        }
    }
    let mut worst = (0, 0, 0.0f64);
    for i in 0..rows {
        for j in i..rows {
            let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
            if dev > worst.2 {
                worst = (i, j, dev);
            }
        }
    }
    if worst.2 > tol {
        return Err(Error::NotHermitian {
            row: worst.0,
            col: worst.1,
            deviation: worst.2,
            tol,
        });
    }
    let mut matrix = m;
    linalg::hermitize(&mut matrix);
    Ok(HermitianOperator { matrix })
}

/// `1e-12 * max(1, max |m_ij|)`.
pub fn default_hermiticity_tol(m: &CMatrix) -> f64 {
    1e-12 * linalg::max_abs(m).max(1.0)
}

/// Wire format for matrices: row-major real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
        Self {
            dim: n,
            re,
            im: Some(im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Json("dim must be positive".into()));
        }
        let check = |name: &str, rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != d {
                return Err(Error::Json(format!("\"{name}\" has {} rows, expected {d}", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::Json(format!(
                        "\"{name}\" row {i} has {} entries, expected {d}",
                        row.len()
                    )));
                }
                if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                    return Err(Error::Json(format!("\"{name}\"[{i}][{j}] is not finite")));
                }
            }
            Ok(())
        };
        check("re", &self.re)?;
        if let Some(im) = &self.im {
            check("im", im)?;
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            Complex64::new(self.re[i][j], im)
        }))
    }
}

impl HermitianOperator {
    /// Validates with the default tolerance `1e-12 * max(1, max |m_ij|)`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let tol = default_hermiticity_tol(&m);
        validate_hermitian(m, tol)
    }

    /// Parses the `{"dim", "re", "im"}` JSON format.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let parsed: MatrixJson = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
        Self::new(parsed.to_matrix()?)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(&self.matrix)
    }

    /// `self + coeff * other`.
    pub fn add_scaled(&self, other: &HermitianOperator, coeff: f64) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if !coeff.is_finite() {
            return Err(Error::NonFiniteParameter(format!("coefficient {coeff}")));
        }
        let mut m = &self.matrix + &other.matrix * Complex64::new(coeff, 0.0);
        linalg::hermitize(&mut m);
        Ok(Self { matrix: m })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }
}

/// One level of the spectrum: a run of eigenvalues within the clustering
/// tolerance of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Mean of the eigenvalues in the cluster.
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// Index of the first member in the ascending eigenvalue list.
    pub start: usize,
}

impl Cluster {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.multiplicity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyStructure {
    clusters: Vec<Cluster>,
}

impl DegeneracyStructure {
    /// Greedy gap scan over ascending eigenvalues: a new cluster starts
    /// whenever the gap to the previous eigenvalue exceeds `tol`.
    pub fn from_sorted_eigenvalues(values: &[f64], tol: f64) -> Self {
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            match clusters.last_mut() {
                Some(last) if v - values[i - 1] <= tol => {
                    last.multiplicity += 1;
                    *sums.last_mut().unwrap() += v;
                }
                _ => {
                    clusters.push(Cluster {
                        eigenvalue: v,
                        multiplicity: 1,
                        start: i,
                    });
                    sums.push(v);
                }
            }
        }
        for (c, s) in clusters.iter_mut().zip(sums) {
            c.eigenvalue = s / c.multiplicity as f64;
        }
        Self { clusters }
    }

    /// Structure with the given multiplicities and placeholder eigenvalues
    /// `0, 1, 2, ...`.
    pub fn from_multiplicities(pattern: &[usize]) -> Result<Self> {
        if pattern.is_empty() || pattern.contains(&0) {
            return Err(Error::InvalidPattern(format!(
                "multiplicities must be positive and non-empty, got {pattern:?}"
            )));
        }
        let mut start = 0;
        let clusters = pattern
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let c = Cluster {
                    eigenvalue: k as f64,
                    multiplicity: n,
                    start,
                };
                start += n;
                c
            })
            .collect();
        Ok(Self { clusters })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Number of distinct levels.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.multiplicity).collect()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).max().unwrap_or(0)
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.max_multiplicity() <= 1
    }

    pub fn cluster(&self, k: usize) -> Result<&Cluster> {
        self.clusters.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            count: self.clusters.len(),
        })
    }
}

/// Eigenvalues, eigenbasis and degeneracy structure of a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `eigenvalues`.
    pub basis: CMatrix,
    pub structure: DegeneracyStructure,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `E_1 - E_0`, or 0 for a one-dimensional space.
    pub fn ground_gap(&self) -> f64 {
        if self.eigenvalues.len() > 1 {
            self.eigenvalues[1] - self.eigenvalues[0]
        } else {
            0.0
        }
    }

    /// Range of the spectrum `E_max - E_min`.
    pub fn spectral_range(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1] - self.eigenvalues[0]
    }

    /// `u† A u` for an operator given in the original basis.
    pub fn to_energy(&self, op: &CMatrix) -> Result<CMatrix> {
        self.check_dim(op.nrows())?;
        Ok(linalg::conjugate_into(&self.basis, op))
    }

    /// `u A u†` for an operator given in the energy basis.
    pub fn to_lab(&self, op: &CMatrix) -> Result<CMatrix> {
        self.check_dim(op.nrows())?;
        Ok(linalg::conjugate_out(&self.basis, op))
    }

    /// Projector onto level `k` expressed in the original basis.
    pub fn lab_projector(&self, k: usize) -> Result<CMatrix> {
        let p = projector(self, k)?;
        self.to_lab(&p)
    }

    /// The diagonal matrix `h` with `H = u h u†`.
    pub fn diagonal_hamiltonian(&self) -> CMatrix {
        linalg::diag_matrix(&self.eigenvalues)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// `1e-8 * max(1, spectral range)`.
pub fn default_deg_tol(eigenvalues: &[f64]) -> f64 {
    let range = eigenvalues.last().copied().unwrap_or(0.0) - eigenvalues.first().copied().unwrap_or(0.0);
    1e-8 * range.max(1.0)
}

/// Eigendecomposition with deterministic phases (largest component of each
/// eigenvector real positive) and tolerance clustering.
pub fn decompose(h: &HermitianOperator, deg_tol: f64) -> Result<SpectralData> {
    if !deg_tol.is_finite() || deg_tol <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "degeneracy tolerance must be positive and finite, got {deg_tol}"
        )));
    }
    let (eigenvalues, basis) = eigen_with_phase_convention(h)?;
    let structure = DegeneracyStructure::from_sorted_eigenvalues(&eigenvalues, deg_tol);
    Ok(SpectralData {
        eigenvalues,
        basis,
        structure,
    })
}

/// [`decompose`] with the tolerance `1e-8 * max(1, spectral range)`.
pub fn decompose_default(h: &HermitianOperator) -> Result<SpectralData> {
    let (eigenvalues, basis) = eigen_with_phase_convention(h)?;
    let tol = default_deg_tol(&eigenvalues);
    let structure = DegeneracyStructure::from_sorted_eigenvalues(&eigenvalues, tol);
    Ok(SpectralData {
        eigenvalues,
        basis,
        structure,
    })
}

fn eigen_with_phase_convention(h: &HermitianOperator) -> Result<(Vec<f64>, CMatrix)> {
    let (values, mut basis) = linalg::hermitian_eigen(h.matrix())?;
    for j in 0..basis.ncols() {
        let mut col = basis.column(j).into_owned();
        linalg::fix_phase(&mut col);
        basis.set_column(j, &col);
    }
    Ok((values, basis))
}

/// `rho^E = u† rho u`.
pub fn to_energy_basis(rho: &DensityMatrix, s: &SpectralData) -> Result<DensityMatrix> {
    let mut m = s.to_energy(rho.matrix())?;
    linalg::hermitize(&mut m);
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Projector onto level `k` (0-based) in the energy basis: ones on the
/// diagonal entries belonging to the cluster.
pub fn projector(s: &SpectralData, k: usize) -> Result<CMatrix> {
    let range = s.structure.cluster(k)?.range();
    let d = s.dim();
    Ok(CMatrix::from_fn(d, d, |i, j| {
        if i == j && range.contains(&i) {
            ONE
        } else {
            ZERO
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_matrix, frobenius, random_density, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_x_is_accepted() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!(validate_hermitian(m, 1e-12).is_ok());
    }

    #[test]
    fn nilpotent_is_rejected_with_indices() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let err = validate_hermitian(m, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { row: 0, col: 1, .. }));
        assert!(err.to_string().contains("M[0][1]"));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrised() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, c(0.0, 1e-15), ZERO, ONE]);
        let h = validate_hermitian(m, 1e-12).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
        assert!((h.matrix()[(0, 1)].im - 5e-16).abs() < 1e-30);
    }

    #[test]
    fn non_square_rejected() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(validate_hermitian(m, 1e-12), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn identity_is_one_cluster() {
        let h = HermitianOperator::new(CMatrix::identity(2, 2)).unwrap();
        let s = decompose(&h, 1e-8).unwrap();
        assert_eq!(s.structure.multiplicities(), vec![2]);
        assert_eq!(s.structure.clusters()[0].eigenvalue, 1.0);
    }

    #[test]
    fn diag_is_two_clusters() {
        let h = HermitianOperator::new(diag_matrix(&[0.0, 1.0])).unwrap();
        let s = decompose(&h, 1e-8).unwrap();
        assert_eq!(s.structure.multiplicities(), vec![1, 1]);
    }

    #[test]
    fn lz_point_eigenvalues() {
        // gamma_0 = -0.5, eps = 0.001
        let m = CMatrix::from_row_slice(2, 2, &[c(-0.5, 0.0), c(0.001, 0.0), c(0.001, 0.0), c(0.5, 0.0)]);
        let s = decompose(&HermitianOperator::new(m).unwrap(), 1e-8).unwrap();
        let lam = (0.25f64 + 1e-6).sqrt();
        assert!((s.eigenvalues[0] + lam).abs() < 1e-15);
        assert!((s.eigenvalues[1] - lam).abs() < 1e-15);
    }

    #[test]
    fn bad_tolerance_rejected() {
        let h = HermitianOperator::new(CMatrix::identity(2, 2)).unwrap();
        assert!(decompose(&h, 0.0).is_err());
        assert!(decompose(&h, f64::NAN).is_err());
    }

    #[test]
    fn diagonal_state_unchanged_in_diagonal_basis() {
        let h = HermitianOperator::new(diag_matrix(&[0.0, 1.0, 3.0])).unwrap();
        let s = decompose(&h, 1e-8).unwrap();
        let rho = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let re = to_energy_basis(&rho, &s).unwrap();
        assert!(frobenius(&(re.matrix() - rho.matrix())) < 1e-15);
    }

    #[test]
    fn energy_basis_preserves_trace_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [2, 5, 8] {
            let rho = DensityMatrix::new(random_density(&mut rng, n)).unwrap();
            let h = HermitianOperator::new(random_hermitian(&mut rng, n)).unwrap();
            let s = decompose(&h, 1e-8).unwrap();
            let re = to_energy_basis(&rho, &s).unwrap();
            assert!((re.trace() - 1.0).abs() < 1e-13);
            let a = rho.eigenvalues().unwrap();
            let b = re.eigenvalues().unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn projector_examples() {
        let h = HermitianOperator::new(diag_matrix(&[0.0, 0.0, 1.0])).unwrap();
        let s = decompose(&h, 1e-8).unwrap();
        let p = projector(&s, 0).unwrap();
        assert_eq!(p, diag_matrix(&[1.0, 1.0, 0.0]));
        assert!(matches!(
            projector(&s, 2),
            Err(Error::IndexOutOfRange { index: 2, count: 2 })
        ));

        let full = decompose(&HermitianOperator::new(CMatrix::identity(3, 3)).unwrap(), 1e-8).unwrap();
        assert_eq!(full.lab_projector(0).unwrap(), CMatrix::identity(3, 3));
    }

    #[test]
    fn rank_one_projector_for_nondegenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap();
        let s = decompose(&h, 1e-8).unwrap();
        let p = s.lab_projector(0).unwrap();
        let v = s.basis.column(0);
        let expected = v * v.adjoint();
        assert!(frobenius(&(p - expected)) < 1e-13);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let json = r#"{"dim":2,"re":[[1,0.5],[0.5,-1]],"im":[[0,-0.25],[0.25,0]]}"#;
        let h = HermitianOperator::from_json_str(json).unwrap();
        assert_eq!(h.matrix()[(0, 1)], c(0.5, -0.25));
        let back = serde_json::to_string(&h.to_json()).unwrap();
        assert_eq!(HermitianOperator::from_json_str(&back).unwrap(), h);

        let bad = r#"{"dim":2,"re":[[1,0.5],[0.4,-1]]}"#;
        let msg = HermitianOperator::from_json_str(bad).unwrap_err().to_string();
        assert!(msg.contains("[0][1]"), "{msg}");

        let short = r#"{"dim":2,"re":[[1,0.5],[0.5]]}"#;
        let msg = HermitianOperator::from_json_str(short).unwrap_err().to_string();
        assert!(msg.contains("row 1"), "{msg}");
    }

    #[test]
    fn greedy_chain_clusters() {
        let s = DegeneracyStructure::from_sorted_eigenvalues(&[0.0, 0.5, 1.0, 3.0], 0.6);
        assert_eq!(s.multiplicities(), vec![3, 1]);
    }
}
