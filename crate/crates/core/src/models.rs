//! Landau-Zener and Lipkin-Meshkov-Glick builders, the closed-form
//! Landau-Zener quench oracle, and ground-state preparation.

use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};
use crate::spectral::{self, HermitianOperator, SpectralData};
use crate::{CMatrix, CVector, Complex64};

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteParameter(format!("{name} = {v}")))
    }
}

/// `H = (-Δ/2 + a g) σ_z + ε σ_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LZParams {
    pub a: f64,
    pub delta: f64,
    pub eps: f64,
    pub g: f64,
}

impl LZParams {
    pub fn validate(&self) -> Result<()> {
        finite("a", self.a)?;
        finite("delta", self.delta)?;
        finite("eps", self.eps)?;
        finite("g", self.g)?;
        if self.a <= 0.0 {
            return Err(Error::InvalidParams(format!("a must be positive, got {}", self.a)));
        }
        if self.eps < 0.0 {
            return Err(Error::InvalidParams(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// `γ = a g - Δ/2`, the σ_z coefficient.
    pub fn gamma(&self) -> f64 {
        self.a * self.g - 0.5 * self.delta
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..*self }
    }
}

fn real_matrix(rows: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_iterator(rows, rows, entries.iter().map(|&x| Complex64::new(x, 0.0))).transpose()
}

pub fn lz_hamiltonian(p: &LZParams) -> Result<HermitianOperator> {
    p.validate()?;
    let z = p.gamma();
    Ok(HermitianOperator::from_matrix_unchecked(real_matrix(
        2,
        &[z, p.eps, p.eps, -z],
    )))
}

/// `∂H/∂g = a σ_z`.
pub fn lz_perturbation(p: &LZParams) -> Result<HermitianOperator> {
    p.validate()?;
    Ok(HermitianOperator::from_matrix_unchecked(linalg::diag_matrix(&[
        p.a, -p.a,
    ])))
}

/// Closed-form quench quantities for the Landau-Zener model started in its
/// ground state at `g0` and quenched to `g0 + δg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LZAnalytic {
    pub w_inv: f64,
    pub q_c: f64,
    pub dw_dg0: f64,
    pub dqc_dg0: f64,
    /// Post-quench eigenvalues `∓λ`.
    pub e0: f64,
    pub e1: f64,
    pub lambda: f64,
    /// `λ + γ` with `γ = γ0 + a δg`.
    pub phi: f64,
}

pub fn lz_analytic(p0: &LZParams, delta_g: f64) -> Result<LZAnalytic> {
    p0.validate()?;
    finite("delta_g", delta_g)?;
    let (a, eps) = (p0.a, p0.eps);
    let g0 = p0.gamma();
    let adg = a * delta_g;
    let g = g0 + adg;
    let e2 = eps * eps;
    let lam0_sq = g0 * g0 + e2;
    let lam_sq = g * g + e2;
    if lam0_sq == 0.0 || lam_sq == 0.0 {
        return Err(Error::SingularPoint(format!(
            "level crossing at gamma0 = {g0}, gamma = {g} with eps = 0"
        )));
    }
    let lam0 = lam0_sq.sqrt();
    let lambda = lam_sq.sqrt();
    let denom = 2.0 * lam0 * lam_sq;

    let w_inv = -adg * g * (adg * g0 + lam0_sq) / denom;
    let q_c = adg * adg * e2 / denom;

    let denom_d = 2.0 * lam0_sq * lam0 * lam_sq * lam_sq;
    let dw_dg0 = -a
        * adg
        * e2
        * (adg.powi(4) + 3.0 * adg.powi(3) * g0 + 2.0 * adg * adg * g0 * g0 + adg * g0 * lam0_sq + lam0_sq * lam0_sq)
        / denom_d;
    // dQ_c/dγ0 times dγ0/dg0 = a.
    let dqc_dg0 = -a * adg * adg * e2 * (e2 * (2.0 * adg + 3.0 * g0) + g0 * g * (adg + 3.0 * g0)) / denom_d;

    Ok(LZAnalytic {
        w_inv,
        q_c,
        dw_dg0,
        dqc_dg0,
        e0: -lambda,
        e1: lambda,
        lambda,
        phi: lambda + g,
    })
}

/// Invariant work of a quench across the gapless (`ε = 0`) model:
/// `-(a δg / 2) sgn(γ0)` with `sgn(0) = 0`.
pub fn lz_crossing_work(p0: &LZParams, delta_g: f64) -> Result<f64> {
    p0.validate()?;
    finite("delta_g", delta_g)?;
    if p0.eps != 0.0 {
        return Err(Error::InvalidParams(format!(
            "crossing work needs eps = 0, got {}",
            p0.eps
        )));
    }
    let g0 = p0.gamma();
    let sign = if g0 > 0.0 {
        1.0
    } else if g0 < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(-0.5 * p0.a * delta_g * sign)
}

/// An angular momentum `j` with `2j` a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Spin {
    twice_j: u32,
}

impl Spin {
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 1.0 || twice.fract() != 0.0 || twice > u32::MAX as f64 {
            return Err(Error::InvalidJ { twice_j: twice });
        }
        Ok(Self { twice_j: twice as u32 })
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.twice_j as usize + 1
    }

    /// `m` for basis index `i`, ordered `j, j-1, ..., -j`.
    pub fn m(&self, i: usize) -> f64 {
        self.j() - i as f64
    }

    /// `<m+1|J_+|m>` for the state at index `i` (zero at the top).
    pub fn raise_coeff(&self, i: usize) -> f64 {
        let j = self.j();
        let m = self.m(i);
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }
}

/// `(J_x, J_y, J_z)` in the `J_z` eigenbasis.
pub fn collective_spin_ops(j: f64) -> Result<(HermitianOperator, HermitianOperator, HermitianOperator)> {
    let s = Spin::new(j)?;
    let d = s.dim();
    let mut jx = CMatrix::zeros(d, d);
    let mut jy = CMatrix::zeros(d, d);
    let mut jz = CMatrix::zeros(d, d);
    for i in 0..d {
        jz[(i, i)] = Complex64::new(s.m(i), 0.0);
        if i > 0 {
            // J_+ maps index i to i-1.
            let c = 0.5 * s.raise_coeff(i);
            jx[(i - 1, i)] = Complex64::new(c, 0.0);
            jx[(i, i - 1)] = Complex64::new(c, 0.0);
            jy[(i - 1, i)] = Complex64::new(0.0, -c);
            jy[(i, i - 1)] = Complex64::new(0.0, c);
        }
    }
    Ok((
        HermitianOperator::from_matrix_unchecked(jx),
        HermitianOperator::from_matrix_unchecked(jy),
        HermitianOperator::from_matrix_unchecked(jz),
    ))
}

/// `H = -(k/2j)(J_z² + γ J_y²) - g J_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LMGParams {
    pub k: f64,
    pub gamma: f64,
    pub g: f64,
    pub j: f64,
}

impl LMGParams {
    pub fn validate(&self) -> Result<Spin> {
        finite("k", self.k)?;
        finite("gamma", self.gamma)?;
        finite("g", self.g)?;
        let spin = Spin::new(self.j)?;
        if self.k <= 0.0 {
            return Err(Error::InvalidParams(format!("k must be positive, got {}", self.k)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParams(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("g must be non-negative, got {}", self.g)));
        }
        Ok(spin)
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..*self }
    }
}

/// Built band by band; `J_y²` has entries on the diagonal and two off it.
pub fn lmg_hamiltonian(p: &LMGParams) -> Result<HermitianOperator> {
    let s = p.validate()?;
    let d = s.dim();
    let j = s.j();
    let casimir = j * (j + 1.0);
    let pre = -p.k / (2.0 * j);
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        let m = s.m(i);
        let jy2_diag = 0.5 * (casimir - m * m);
        h[(i, i)] = Complex64::new(pre * (m * m + p.gamma * jy2_diag), 0.0);
        if i >= 1 {
            let v = -p.g * 0.5 * s.raise_coeff(i);
            h[(i - 1, i)] = Complex64::new(v, 0.0);
            h[(i, i - 1)] = Complex64::new(v, 0.0);
        }
        if i >= 2 {
            // <m+2|J_y²|m> = -c(m) c(m+1) / 4
            let jy2_off = -0.25 * s.raise_coeff(i) * s.raise_coeff(i - 1);
            let v = pre * p.gamma * jy2_off;
            h[(i - 2, i)] = Complex64::new(v, 0.0);
            h[(i, i - 2)] = Complex64::new(v, 0.0);
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked(h))
}

/// `∂H/∂g = -J_x`.
pub fn lmg_perturbation(p: &LMGParams) -> Result<HermitianOperator> {
    let s = p.validate()?;
    let d = s.dim();
    let mut h = CMatrix::zeros(d, d);
    for i in 1..d {
        let v = Complex64::new(-0.5 * s.raise_coeff(i), 0.0);
        h[(i - 1, i)] = v;
        h[(i, i - 1)] = v;
    }
    Ok(HermitianOperator::from_matrix_unchecked(h))
}

/// The selected ground state and facts about the lowest level.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub rho: DensityMatrix,
    pub vector: CVector,
    pub energy: f64,
    pub degeneracy: usize,
    /// `E_1 - E_0`, zero in one dimension.
    pub gap: f64,
}

const HINT_MIN_OVERLAP: f64 = 1e-8;

pub fn ground_state(h: &HermitianOperator, deg_tol: f64, hint: Option<&CVector>) -> Result<GroundState> {
    let s = spectral::decompose(h, deg_tol)?;
    ground_state_from_spectrum(&s, hint)
}

/// Ground state from an existing decomposition. In a degenerate ground
/// level the hint is projected onto the level, giving the level vector of
/// largest overlap with it; without a usable hint the first basis vector is
/// taken.
pub fn ground_state_from_spectrum(s: &SpectralData, hint: Option<&CVector>) -> Result<GroundState> {
    let ground = &s.structure.clusters()[0];
    let n = ground.multiplicity;
    let mut vector = s.basis.column(0).into_owned();
    if let Some(h) = hint.filter(|_| n > 1) {
        if h.len() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                found: h.len(),
            });
        }
        let block = s.basis.columns(ground.start, n);
        let coeffs = block.adjoint() * h;
        let projected = block * coeffs;
        let norm = projected.norm();
        if norm > HINT_MIN_OVERLAP * h.norm() {
            vector = projected.unscale(norm);
            linalg::fix_phase(&mut vector);
        }
    }
    let rho = DensityMatrix::pure(&vector)?;
    Ok(GroundState {
        rho,
        vector,
        energy: s.ground_energy(),
        degeneracy: n,
        gap: s.ground_gap(),
    })
}

/// Parity `exp(iπ(J_z - j))` as a diagonal of `±1`.
pub fn spin_parity(j: f64) -> Result<CMatrix> {
    let s = Spin::new(j)?;
    let d = s.dim();
    let mut p = CMatrix::from_element(d, d, ZERO);
    for i in 0..d {
        p[(i, i)] = Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    Ok(p)
}
