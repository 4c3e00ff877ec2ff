//! Entropies and quench work/heat.
//!
//! All entropies are in nats. For a sudden quench `H0 -> H0 + δg H1` with
//! the state held fixed, every quantity is evaluated in the eigenbasis of the
//! post-quench Hamiltonian and with its degeneracy structure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::gauge;
use crate::linalg;
use crate::spectral::{self, DegeneracyStructure, HermitianOperator, SpectralData};

/// Eigenvalues below this are treated as exact zeros.
const ZERO_CLAMP: f64 = 1e-14;
/// Eigenvalues below this are an error rather than round-off.
const NEGATIVE_LIMIT: f64 = -1e-10;
const HOLEVO_AGREEMENT: f64 = 1e-10;

/// `-Σ p ln p` over a spectrum, with `0 ln 0 = 0`.
pub fn entropy_of_spectrum(values: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &p in values {
        if p < NEGATIVE_LIMIT {
            return Err(Error::InvalidState(format!("eigenvalue {p:e} is negative")));
        }
        if p > ZERO_CLAMP {
            s -= p * p.ln();
        }
    }
    Ok(s)
}

/// Purity this close to 1 means a rank-one state.
const PURE_STATE_TOL: f64 = 1e-13;

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    if (1.0 - rho.purity()).abs() < PURE_STATE_TOL {
        return Ok(0.0);
    }
    entropy_of_spectrum(&rho.eigenvalues()?)
}

fn check_dim(rho: &DensityMatrix, s: &SpectralData) -> Result<()> {
    if rho.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

fn energy_populations(rho: &DensityMatrix, s: &SpectralData) -> Result<Vec<f64>> {
    check_dim(rho, s)?;
    let re = spectral::to_energy_basis(rho, s)?;
    Ok(re.matrix().diagonal().iter().map(|z| z.re).collect())
}

/// Entropy of the energy-basis populations.
pub fn diagonal_entropy(rho: &DensityMatrix, s: &SpectralData) -> Result<f64> {
    entropy_of_spectrum(&energy_populations(rho, s)?)
}

/// Entropy of the twirled state.
pub fn gauge_entropy(rho: &DensityMatrix, s: &SpectralData) -> Result<f64> {
    check_dim(rho, s)?;
    let re = spectral::to_energy_basis(rho, s)?;
    entropy_of_spectrum(&gauge::twirled_populations(&re, &s.structure)?)
}

/// The block form of the asymmetry: `-Σ f ln|f|` where `f` lists, for every
/// degenerate level, the negated populations of its members followed by the
/// level average repeated `n_k` times. Non-degenerate levels contribute
/// nothing.
pub fn holevo_asymmetry_block_form(populations: &[f64], gamma: &DegeneracyStructure) -> Result<f64> {
    if populations.len() != gamma.dim() {
        return Err(Error::DimensionMismatch {
            expected: gamma.dim(),
            found: populations.len(),
        });
    }
    let mut f: Vec<f64> = Vec::new();
    for c in gamma.clusters().iter().filter(|c| c.multiplicity > 1) {
        let block = &populations[c.range()];
        f.extend(block.iter().map(|p| -p));
        let avg = block.iter().sum::<f64>() / c.multiplicity as f64;
        f.extend(std::iter::repeat_n(avg, c.multiplicity));
    }
    let mut s = 0.0;
    for x in f {
        let a = x.abs();
        if a > ZERO_CLAMP {
            s -= x * a.ln();
        }
    }
    Ok(s)
}

/// `S_GT - S_d`, cross-checked against [`holevo_asymmetry_block_form`].
pub fn holevo_asymmetry(rho: &DensityMatrix, s: &SpectralData) -> Result<f64> {
    check_dim(rho, s)?;
    let re = spectral::to_energy_basis(rho, s)?;
    let pops: Vec<f64> = re.matrix().diagonal().iter().map(|z| z.re).collect();
    let twirled = gauge::twirled_populations(&re, &s.structure)?;
    asymmetry_from_populations(&pops, &twirled, &s.structure)
}

fn asymmetry_from_populations(pops: &[f64], twirled: &[f64], gamma: &DegeneracyStructure) -> Result<f64> {
    let diff = entropy_of_spectrum(twirled)? - entropy_of_spectrum(pops)?;
    let block = holevo_asymmetry_block_form(pops, gamma)?;
    if (diff - block).abs() > HOLEVO_AGREEMENT {
        return Err(Error::InternalInconsistency(format!(
            "asymmetry forms disagree: difference {diff:e}, block form {block:e}"
        )));
    }
    Ok(diff)
}

/// Relative entropy of coherence `S_d - S_u`.
pub fn coherence_measure(rho: &DensityMatrix, s: &SpectralData) -> Result<f64> {
    Ok(diagonal_entropy(rho, s)? - von_neumann_entropy(rho)?)
}

/// How the conventional heat is assigned in a sudden quench.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QuConvention {
    /// `Q_u = ΔU - W_u`, so the first law closes exactly.
    #[default]
    FirstLaw,
    /// `Q_u = 0`, the closed-system value.
    Zero,
}

impl fmt::Display for QuConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuConvention::FirstLaw => f.write_str("first-law"),
            QuConvention::Zero => f.write_str("zero"),
        }
    }
}

impl FromStr for QuConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-law" => Ok(QuConvention::FirstLaw),
            "zero" => Ok(QuConvention::Zero),
            other => Err(Error::InvalidParams(format!("unknown Q_u convention {other:?}"))),
        }
    }
}

/// Everything computed for one quench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub w_inv: f64,
    pub q_c: f64,
    pub q_inv: f64,
    pub w_u: f64,
    pub q_u: f64,
    /// Mean work of the two-point measurement scheme.
    pub tpm_avg_work: f64,
    pub delta_u: f64,
    pub s_u: f64,
    pub s_d: f64,
    pub s_gt: f64,
    pub s_gamma: f64,
    pub coherence: f64,
    /// Lowest eigenvalue of the pre-quench Hamiltonian.
    pub ground_energy: f64,
    /// `E_1 - E_0` of the pre-quench Hamiltonian.
    pub ground_gap: f64,
    /// Multiplicity of the lowest pre-quench level.
    pub ground_degeneracy: usize,
    /// Largest level multiplicity of the post-quench Hamiltonian.
    pub post_quench_max_multiplicity: usize,
}

impl ThermoReport {
    /// The scalar fields as `(name, value)` pairs, integers converted.
    pub fn fields(&self) -> [(&'static str, f64); 15] {
        [
            ("W_inv", self.w_inv),
            ("Q_c", self.q_c),
            ("Q_inv", self.q_inv),
            ("W_u", self.w_u),
            ("Q_u", self.q_u),
            ("W_tpm", self.tpm_avg_work),
            ("delta_U", self.delta_u),
            ("S_u", self.s_u),
            ("S_d", self.s_d),
            ("S_GT", self.s_gt),
            ("S_Gamma", self.s_gamma),
            ("C", self.coherence),
            ("E0", self.ground_energy),
            ("ground_gap", self.ground_gap),
            ("ground_degeneracy", self.ground_degeneracy as f64),
        ]
    }
}

/// Quench report with the post-quench structure taken from
/// `H0 + δg H1` at tolerance `deg_tol`.
pub fn quench_report(
    rho0: &DensityMatrix,
    h0: &HermitianOperator,
    h1: &HermitianOperator,
    delta_g: f64,
    deg_tol: f64,
    convention: QuConvention,
) -> Result<ThermoReport> {
    validate_quench(rho0, h0, h1, delta_g, deg_tol)?;
    let pre = spectral::decompose(h0, deg_tol)?;
    quench_report_with_spectrum(rho0, h0, &pre, h1, delta_g, deg_tol, convention)
}

fn validate_quench(
    rho0: &DensityMatrix,
    h0: &HermitianOperator,
    h1: &HermitianOperator,
    delta_g: f64,
    deg_tol: f64,
) -> Result<()> {
    if !delta_g.is_finite() {
        return Err(Error::NonFiniteParameter(format!("delta_g = {delta_g}")));
    }
    if !deg_tol.is_finite() || deg_tol <= 0.0 {
        return Err(Error::NonFiniteParameter(format!("deg_tol = {deg_tol}")));
    }
    for found in [h1.dim(), rho0.dim()] {
        if found != h0.dim() {
            return Err(Error::DimensionMismatch {
                expected: h0.dim(),
                found,
            });
        }
    }
    Ok(())
}

/// As [`quench_report`], reusing an already computed decomposition of `H0`.
pub fn quench_report_with_spectrum(
    rho0: &DensityMatrix,
    h0: &HermitianOperator,
    pre: &SpectralData,
    h1: &HermitianOperator,
    delta_g: f64,
    deg_tol: f64,
    convention: QuConvention,
) -> Result<ThermoReport> {
    validate_quench(rho0, h0, h1, delta_g, deg_tol)?;
    if pre.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: pre.dim(),
        });
    }
    let hg = h0.add_scaled(h1, delta_g)?;
    let post = spectral::decompose(&hg, deg_tol)?;
    let gamma = &post.structure;

    let ranges = || gamma.clusters().iter().map(|c| c.range());
    let rho_blocks = linalg::conjugate_into_blocks(&post.basis, rho0.matrix(), ranges());
    let pops: Vec<f64> = rho_blocks.diagonal().iter().map(|z| z.re).collect();
    let twirled = gauge::twirled_populations(&DensityMatrix::from_matrix_unchecked(rho_blocks), gamma)?;
    let h1_diag = linalg::conjugate_into_blocks(&post.basis, h1.matrix(), (0..h1.dim()).map(|i| i..i + 1)).diagonal();
    let rho_h1 = linalg::re_trace_product(rho0.matrix(), h1.matrix());

    let half = 0.5 * delta_g;
    let twirled_h1: f64 = twirled.iter().zip(h1_diag.iter()).map(|(p, h)| p * h.re).sum();
    let w_inv = half * twirled_h1;
    // Tr{rho^E H1^E} = Tr{rho H1}
    let q_c = half * (rho_h1 - twirled_h1);
    let w_u = half * rho_h1;
    // Tr{rho (H_g - H0)}
    let delta_u = delta_g * rho_h1;
    let q_u = match convention {
        QuConvention::FirstLaw => delta_u - w_u,
        QuConvention::Zero => 0.0,
    };
    let q_inv = q_u + q_c;

    let tpm_avg_work = tpm_average_work(rho0, pre, &hg)?;

    let s_u = von_neumann_entropy(rho0)?;
    let s_d = entropy_of_spectrum(&pops)?;
    let s_gt = entropy_of_spectrum(&twirled)?;
    let s_gamma = asymmetry_from_populations(&pops, &twirled, gamma)?;

    Ok(ThermoReport {
        w_inv,
        q_c,
        q_inv,
        w_u,
        q_u,
        tpm_avg_work,
        delta_u,
        s_u,
        s_d,
        s_gt,
        s_gamma,
        coherence: s_d - s_u,
        ground_energy: pre.ground_energy(),
        ground_gap: pre.ground_gap(),
        ground_degeneracy: pre.structure.clusters()[0].multiplicity,
        post_quench_max_multiplicity: gamma.max_multiplicity(),
    })
}

/// Mean two-point-measurement work for `rho0` measured in the levels of
/// `pre` and then in the eigenbasis of `h_final`:
/// `Σ_{n,m} Tr{Π_m Π_n rho Π_n} (E_m - E_n)`, evaluated as
/// `Tr{P(rho) H_final} - Tr{rho H0}` with `P` the pinching onto the initial
/// levels.
pub fn tpm_average_work(rho0: &DensityMatrix, pre: &SpectralData, h_final: &HermitianOperator) -> Result<f64> {
    check_dim(rho0, pre)?;
    let ranges = || pre.structure.clusters().iter().map(|c| c.range());
    let pinched = linalg::conjugate_into_blocks(&pre.basis, rho0.matrix(), ranges());
    let hf_blocks = linalg::conjugate_into_blocks(&pre.basis, h_final.matrix(), ranges());
    let final_energy = linalg::re_trace_product(&pinched, &hf_blocks);
    let initial_energy: f64 = (0..pinched.nrows())
        .map(|i| pinched[(i, i)].re * pre.eigenvalues[i])
        .sum();
    Ok(final_energy - initial_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_matrix, random_density, random_hermitian, ONE};
    use crate::spectral::decompose;
    use crate::{CMatrix, CVector};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus_state() -> DensityMatrix {
        DensityMatrix::pure(&CVector::from_vec(vec![ONE, ONE])).unwrap()
    }

    fn sigma_z() -> HermitianOperator {
        HermitianOperator::new(diag_matrix(&[1.0, -1.0])).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&plus_state()).unwrap().abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&mixed).unwrap() - 2f64.ln()).abs() < 1e-15);
        // 0.5 ln 2 + 0.3 ln(1/0.3) + 0.2 ln 5, evaluated with mpmath at 30 digits
        let rho = DensityMatrix::diagonal(&[0.5, 0.3, 0.2]).unwrap();
        assert!((von_neumann_entropy(&rho).unwrap() - 1.0296530140645735).abs() < 1e-15);
    }

    #[test]
    fn negative_spectrum_rejected() {
        assert!(entropy_of_spectrum(&[1.0 + 1e-11, -1e-11]).is_ok());
        assert!(entropy_of_spectrum(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn diagonal_entropy_of_coherent_qubit() {
        let s = decompose(&sigma_z(), 1e-8).unwrap();
        let rho = plus_state();
        let sd = diagonal_entropy(&rho, &s).unwrap();
        assert!((sd - 2f64.ln()).abs() < 1e-14);
        assert!((coherence_measure(&rho, &s).unwrap() - sd).abs() < 1e-14);
        let eig = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(diagonal_entropy(&eig, &s).unwrap(), 0.0);
        assert_eq!(coherence_measure(&eig, &s).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_entropy_is_basis_dependent() {
        let s = decompose(&sigma_z(), 1e-8).unwrap();
        let rho = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ],
        );
        let rotated = rho.conjugate_by(&hadamard).unwrap();
        assert!(diagonal_entropy(&rotated, &s).unwrap() > 0.5);
    }

    #[test]
    fn gauge_entropy_examples() {
        let h = HermitianOperator::new(diag_matrix(&[0.0, 0.0, 1.0])).unwrap();
        let s = decompose(&h, 1e-8).unwrap();
        let rho = DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        assert!((gauge_entropy(&rho, &s).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((holevo_asymmetry(&rho, &s).unwrap() - 2f64.ln()).abs() < 1e-15);

        let full = decompose(&HermitianOperator::new(CMatrix::identity(4, 4)).unwrap(), 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = DensityMatrix::new(random_density(&mut rng, 4)).unwrap();
        assert!((gauge_entropy(&r, &full).unwrap() - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn nondegenerate_asymmetry_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = HermitianOperator::new(random_hermitian(&mut rng, 6)).unwrap();
        let s = decompose(&h, 1e-8).unwrap();
        let r = DensityMatrix::new(random_density(&mut rng, 6)).unwrap();
        assert_eq!(holevo_asymmetry(&r, &s).unwrap(), 0.0);
        assert_eq!(gauge_entropy(&r, &s).unwrap(), diagonal_entropy(&r, &s).unwrap());
    }

    #[test]
    fn block_form_matches_difference() {
        let pops = [0.1, 0.25, 0.05, 0.3, 0.2, 0.1];
        let g = DegeneracyStructure::from_multiplicities(&[1, 3, 2]).unwrap();
        let twirled = gauge::twirled_populations(&DensityMatrix::diagonal(&pops).unwrap(), &g).unwrap();
        let diff = entropy_of_spectrum(&twirled).unwrap() - entropy_of_spectrum(&pops).unwrap();
        let block = holevo_asymmetry_block_form(&pops, &g).unwrap();
        assert!((diff - block).abs() < 1e-15);
        assert!(diff > 0.0);
    }

    #[test]
    fn zero_quench_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h0 = HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap();
        let h1 = HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap();
        let rho = DensityMatrix::new(random_density(&mut rng, 4)).unwrap();
        let r = quench_report(&rho, &h0, &h1, 0.0, 1e-8, QuConvention::FirstLaw).unwrap();
        for v in [r.w_inv, r.q_c, r.q_inv, r.w_u, r.q_u, r.delta_u] {
            assert_eq!(v, 0.0);
        }
        assert!(r.tpm_avg_work.abs() < 1e-14);
    }

    #[test]
    fn commuting_quench_has_no_coherent_heat() {
        let h0 = HermitianOperator::new(diag_matrix(&[-1.0, 0.5, 2.0])).unwrap();
        let h1 = HermitianOperator::new(diag_matrix(&[0.3, -0.2, 1.0])).unwrap();
        let rho = DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        let r = quench_report(&rho, &h0, &h1, 0.1, 1e-8, QuConvention::FirstLaw).unwrap();
        assert!(r.q_c.abs() < 1e-16);
        assert!((r.w_inv - 0.05 * 0.3).abs() < 1e-16);
    }

    #[test]
    fn quench_identities_and_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h0 = HermitianOperator::new(random_hermitian(&mut rng, 5)).unwrap();
        let h1 = HermitianOperator::new(random_hermitian(&mut rng, 5)).unwrap();
        let rho = DensityMatrix::new(random_density(&mut rng, 5)).unwrap();
        let r = quench_report(&rho, &h0, &h1, 0.3, 1e-8, QuConvention::FirstLaw).unwrap();
        assert!((r.w_u - (r.w_inv + r.q_c)).abs() < 1e-12);
        assert!((r.q_inv - (r.q_u + r.q_c)).abs() < 1e-12);
        assert!((r.delta_u - (r.w_u + r.q_u)).abs() < 1e-12);
        assert!((r.s_gt - (r.s_d + r.s_gamma)).abs() < 1e-12);
        let z = quench_report(&rho, &h0, &h1, 0.3, 1e-8, QuConvention::Zero).unwrap();
        assert_eq!(z.q_u, 0.0);
        assert_eq!(z.q_inv, z.q_c);
        assert_eq!(z.w_inv, r.w_inv);
    }

    #[test]
    fn quench_errors() {
        let h0 = HermitianOperator::new(diag_matrix(&[0.0, 1.0])).unwrap();
        let h1 = HermitianOperator::new(diag_matrix(&[0.0, 1.0, 2.0])).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            quench_report(&rho, &h0, &h1, 0.1, 1e-8, QuConvention::FirstLaw),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            quench_report(&rho, &h0, &h0, f64::NAN, 1e-8, QuConvention::FirstLaw),
            Err(Error::NonFiniteParameter(_))
        ));
    }

    #[test]
    fn tpm_matches_energy_change_for_eigenstate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h0 = HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap();
        let h1 = HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap();
        let pre = decompose(&h0, 1e-8).unwrap();
        let v = pre.basis.column(2).into_owned();
        let rho = DensityMatrix::pure(&v).unwrap();
        let hg = h0.add_scaled(&h1, 0.7).unwrap();
        let w = tpm_average_work(&rho, &pre, &hg).unwrap();
        let direct = linalg::re_trace_product(rho.matrix(), hg.matrix()) - pre.eigenvalues[2];
        assert!((w - direct).abs() < 1e-12);
    }

    #[test]
    fn qu_convention_parses() {
        assert_eq!("first-law".parse::<QuConvention>().unwrap(), QuConvention::FirstLaw);
        assert_eq!("zero".parse::<QuConvention>().unwrap(), QuConvention::Zero);
        assert!("other".parse::<QuConvention>().is_err());
        assert_eq!(QuConvention::FirstLaw.to_string(), "first-law");
    }
}
