//! Sudden quenches and continuously driven protocols.

use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::ground_state;
use crate::spectral::{self, HermitianOperator, MatrixJson};
use crate::thermo::{quench_report, QuConvention, ThermoReport};
use crate::{CMatrix, Complex64};

/// A sudden quench `H0 -> H0 + δg H1` at fixed state. `g0` is carried for
/// bookkeeping; `h0` already contains the dependence on it.
#[derive(Debug, Clone)]
pub struct QuenchSpec {
    pub h0: HermitianOperator,
    pub h1: HermitianOperator,
    pub g0: f64,
    pub delta_g: f64,
    pub deg_tol: f64,
    pub qu_convention: QuConvention,
}

/// Runs the quench from `rho0`, or from the ground state of `h0` if none is
/// given.
pub fn run_quench(spec: &QuenchSpec, rho0: Option<&DensityMatrix>) -> Result<ThermoReport> {
    let prepared;
    let rho = match rho0 {
        Some(r) => r,
        None => {
            prepared = ground_state(&spec.h0, spec.deg_tol, None)?.rho;
            &prepared
        }
    };
    quench_report(rho, &spec.h0, &spec.h1, spec.delta_g, spec.deg_tol, spec.qu_convention)
}

/// `e^{-iH dt} ρ e^{iH dt}`.
pub fn evolve_step(rho: &DensityMatrix, h: &HermitianOperator, dt: f64) -> Result<DensityMatrix> {
    if !dt.is_finite() {
        return Err(Error::NonFiniteParameter(format!("dt = {dt}")));
    }
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho.dim(),
        });
    }
    if dt == 0.0 {
        return Ok(rho.clone());
    }
    let u = propagator(h, dt)?;
    let mut m = &u * rho.matrix() * u.adjoint();
    linalg::hermitize(&mut m);
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

fn propagator(h: &HermitianOperator, dt: f64) -> Result<CMatrix> {
    let (values, basis) = linalg::hermitian_eigen(h.matrix())?;
    let phases: Vec<Complex64> = values.iter().map(|e| Complex64::from_polar(1.0, -e * dt)).collect();
    let mut scaled = basis.clone();
    for (j, p) in phases.iter().enumerate() {
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= p;
        }
    }
    Ok(scaled * basis.adjoint())
}

/// Hamiltonians sampled on a time grid, plus the initial state.
#[derive(Debug, Clone)]
pub struct ProtocolGrid {
    times: Vec<f64>,
    hamiltonians: Vec<HermitianOperator>,
    initial_state: DensityMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProtocolGridJson {
    times: Vec<f64>,
    hamiltonians: Vec<MatrixJson>,
    initial_state: MatrixJson,
}

impl ProtocolGrid {
    pub fn new(times: Vec<f64>, hamiltonians: Vec<HermitianOperator>, initial_state: DensityMatrix) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 time points, got {}",
                times.len()
            )));
        }
        if times.len() != hamiltonians.len() {
            return Err(Error::InvalidParams(format!(
                "{} times but {} Hamiltonians",
                times.len(),
                hamiltonians.len()
            )));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::NonFiniteParameter(format!("time {t}")));
        }
        if let Some(w) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(format!(
                "times must increase strictly, but t[{}] = {} follows t[{}] = {}",
                w + 1,
                times[w + 1],
                w,
                times[w]
            )));
        }
        let d = initial_state.dim();
        for h in &hamiltonians {
            if h.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: h.dim(),
                });
            }
        }
        Ok(Self {
            times,
            hamiltonians,
            initial_state,
        })
    }

    /// Samples `h(t)` at `n_steps + 1` equally spaced times on `[t0, t1]`.
    pub fn uniform<F>(t0: f64, t1: f64, n_steps: usize, initial_state: DensityMatrix, mut h: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<HermitianOperator>,
    {
        if n_steps == 0 {
            return Err(Error::InvalidParams("need at least one step".into()));
        }
        let dt = (t1 - t0) / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps)
            .map(|i| if i == n_steps { t1 } else { t0 + dt * i as f64 })
            .collect();
        let hamiltonians = times.iter().map(|&t| h(t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, hamiltonians, initial_state)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: ProtocolGridJson = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
        let hamiltonians = raw
            .hamiltonians
            .iter()
            .map(|m| HermitianOperator::new(m.to_matrix()?))
            .collect::<Result<Vec<_>>>()?;
        let rho = DensityMatrix::new(raw.initial_state.to_matrix()?)?;
        Self::new(raw.times, hamiltonians, rho)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn hamiltonians(&self) -> &[HermitianOperator] {
        &self.hamiltonians
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial_state
    }
}

/// Integrated work and heat of a driven protocol, with the sampled
/// integrands and Richardson-style error estimates for each integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub w_inv: f64,
    pub q_c: f64,
    pub w_u: f64,
    pub q_u: f64,
    /// `Tr{ρ_T H_T} - Tr{ρ_0 H_0}`.
    pub delta_u: f64,
    pub w_inv_error: f64,
    pub q_c_error: f64,
    pub w_u_error: f64,
    pub q_u_error: f64,
    pub w_inv_rate: Vec<f64>,
    pub q_c_rate: Vec<f64>,
    pub w_u_rate: Vec<f64>,
    pub q_u_rate: Vec<f64>,
}

impl ProtocolResult {
    /// Tolerance for the first-law residual `ΔU - W_u - Q_u`.
    pub fn closure_error(&self) -> f64 {
        self.w_u_error + self.q_u_error
    }

    /// Tolerance for `W_inv + Q_c - W_u`.
    pub fn consistency_error(&self) -> f64 {
        self.w_inv_error + self.q_c_error + self.w_u_error
    }
}

const MAX_OVERLAP_DEVIATION: f64 = 0.5;

/// Eigen-decomposition of every grid Hamiltonian with columns carried
/// continuously from step to step.
fn continuous_frames(grid: &ProtocolGrid, deg_tol: f64) -> Result<(Vec<Vec<f64>>, Vec<CMatrix>)> {
    let mut energies: Vec<Vec<f64>> = Vec::with_capacity(grid.times.len());
    let mut frames: Vec<CMatrix> = Vec::with_capacity(grid.times.len());
    for (i, h) in grid.hamiltonians.iter().enumerate() {
        let s = spectral::decompose(h, deg_tol)?;
        if !s.structure.is_nondegenerate() {
            let gap = s
                .eigenvalues
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            return Err(Error::DegeneracyCrossing {
                time: grid.times[i],
                gap,
                tol: deg_tol,
            });
        }
        match frames.last() {
            None => {
                energies.push(s.eigenvalues);
                frames.push(s.basis);
            }
            Some(prev) => {
                let (e, u) = match_columns(prev, &s.eigenvalues, &s.basis, grid.times[i - 1], grid.times[i])?;
                energies.push(e);
                frames.push(u);
            }
        }
    }
    Ok((energies, frames))
}

/// Greedy assignment on `|prev† new|`, then phases chosen so that each
/// overlap with the previous column is real and positive.
fn match_columns(prev: &CMatrix, values: &[f64], basis: &CMatrix, from: f64, to: f64) -> Result<(Vec<f64>, CMatrix)> {
    let d = values.len();
    let overlaps = prev.adjoint() * basis;
    let mut pairs: Vec<(usize, usize)> = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).collect();
    pairs.sort_by(|&(r1, c1), &(r2, c2)| {
        overlaps[(r2, c2)]
            .norm()
            .total_cmp(&overlaps[(r1, c1)].norm())
            .then((r1, c1).cmp(&(r2, c2)))
    });
    let mut row_used = vec![false; d];
    let mut col_of_row = vec![usize::MAX; d];
    let mut col_used = vec![false; d];
    for (r, c) in pairs {
        if !row_used[r] && !col_used[c] {
            row_used[r] = true;
            col_used[c] = true;
            col_of_row[r] = c;
        }
    }
    let mut e = vec![0.0; d];
    let mut u = CMatrix::zeros(d, d);
    for r in 0..d {
        let c = col_of_row[r];
        let ov = overlaps[(r, c)];
        if (1.0 - ov.norm()).abs() > MAX_OVERLAP_DEVIATION {
            return Err(Error::GridTooCoarse {
                from,
                to,
                overlap: ov.norm(),
            });
        }
        let phase = ov.conj() / ov.norm();
        e[r] = values[c];
        u.set_column(r, &(basis.column(c) * phase));
    }
    Ok((e, u))
}

/// Weights `(w_prev, w_here, w_next)` of the three-point derivative at
/// interior point `i` of a possibly non-uniform grid.
fn central_weights(t: &[f64], i: usize) -> (f64, f64, f64) {
    let hm = t[i] - t[i - 1];
    let hp = t[i + 1] - t[i];
    let wm = -hp / (hm * (hm + hp));
    let wp = hm / (hp * (hm + hp));
    (wm, -(wm + wp), wp)
}

/// Three-point stencils `(index, weight)` for the derivative at each grid
/// point: central in the interior, one-sided second order at the ends
/// (first order with only two samples).
fn derivative_stencils(t: &[f64]) -> Vec<Vec<(usize, f64)>> {
    let n = t.len();
    if n == 2 {
        let h = t[1] - t[0];
        let s = vec![(0, -1.0 / h), (1, 1.0 / h)];
        return vec![s.clone(), s];
    }
    // Derivative at `at` of the quadratic through three samples.
    let end = |i: [usize; 3], at: usize| {
        let x = t[at];
        (0..3)
            .map(|k| {
                let (a, b) = (i[(k + 1) % 3], i[(k + 2) % 3]);
                let w = ((x - t[a]) + (x - t[b])) / ((t[i[k]] - t[a]) * (t[i[k]] - t[b]));
                (i[k], w)
            })
            .collect::<Vec<_>>()
    };
    let mut out = Vec::with_capacity(n);
    out.push(end([0, 1, 2], 0));
    for i in 1..n - 1 {
        let (wm, w0, wp) = central_weights(t, i);
        out.push(vec![(i - 1, wm), (i, w0), (i + 1, wp)]);
    }
    out.push(end([n - 3, n - 2, n - 1], n - 1));
    out
}

fn derivative_matrices(stencils: &[Vec<(usize, f64)>], f: &[CMatrix]) -> Vec<CMatrix> {
    stencils
        .iter()
        .map(|st| {
            let mut acc = CMatrix::zeros(f[0].nrows(), f[0].ncols());
            for &(i, w) in st {
                acc += &f[i] * Complex64::new(w, 0.0);
            }
            acc
        })
        .collect()
}

fn derivative_values(stencils: &[Vec<(usize, f64)>], f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    stencils
        .iter()
        .map(|st| {
            let mut acc = vec![0.0; f[0].len()];
            for &(i, w) in st {
                for (a, x) in acc.iter_mut().zip(&f[i]) {
                    *a += w * x;
                }
            }
            acc
        })
        .collect()
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tw, fw)| 0.5 * (tw[1] - tw[0]) * (fw[0] + fw[1]))
        .sum()
}

/// Trapezoid value and `|I_h - I_2h| / 3`, the coarse rule using every
/// other sample (plus the last).
fn integrate(t: &[f64], f: &[f64]) -> (f64, f64) {
    let fine = trapezoid(t, f);
    if t.len() < 3 {
        return (fine, 0.0);
    }
    let mut idx: Vec<usize> = (0..t.len()).step_by(2).collect();
    if *idx.last().unwrap() != t.len() - 1 {
        idx.push(t.len() - 1);
    }
    let tc: Vec<f64> = idx.iter().map(|&i| t[i]).collect();
    let fc: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
    (fine, (fine - trapezoid(&tc, &fc)).abs() / 3.0)
}

/// Evaluates work and heat along a driven protocol. The state is carried
/// by midpoint-Hamiltonian propagation between grid times.
pub fn run_protocol(grid: &ProtocolGrid, deg_tol: f64) -> Result<ProtocolResult> {
    if !deg_tol.is_finite() || deg_tol <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "degeneracy tolerance must be positive, got {deg_tol}"
        )));
    }
    let t = &grid.times;
    let n = t.len();
    let (energies, frames) = continuous_frames(grid, deg_tol)?;

    let mut states = Vec::with_capacity(n);
    states.push(grid.initial_state.clone());
    for i in 0..n - 1 {
        let mid = grid.hamiltonians[i].add_scaled(&grid.hamiltonians[i + 1], 1.0)?;
        let mid = HermitianOperator::from_matrix_unchecked(mid.matrix() * Complex64::new(0.5, 0.0));
        states.push(evolve_step(&states[i], &mid, t[i + 1] - t[i])?);
    }

    let h_mats: Vec<CMatrix> = grid.hamiltonians.iter().map(|h| h.matrix().clone()).collect();
    let rho_mats: Vec<CMatrix> = states.iter().map(|r| r.matrix().clone()).collect();
    let stencils = derivative_stencils(t);
    let h_dot = derivative_matrices(&stencils, &h_mats);
    let rho_dot = derivative_matrices(&stencils, &rho_mats);
    let u_dot = derivative_matrices(&stencils, &frames);
    let e_dot = derivative_values(&stencils, &energies);

    let mut w_inv_rate = Vec::with_capacity(n);
    let mut q_c_rate = Vec::with_capacity(n);
    let mut w_u_rate = Vec::with_capacity(n);
    let mut q_u_rate = Vec::with_capacity(n);
    for i in 0..n {
        let rho = states[i].matrix();
        let u = &frames[i];
        let rho_e = linalg::conjugate_into(u, rho);
        w_inv_rate.push((0..e_dot[i].len()).map(|k| rho_e[(k, k)].re * e_dot[i][k]).sum());
        // Tr{ρ(u̇ h u† + u h u̇†)} = 2 Re Tr{ρ u̇ h u†}
        let h_diag = linalg::diag_matrix(&energies[i]);
        let term = &u_dot[i] * h_diag * u.adjoint();
        q_c_rate.push(2.0 * linalg::re_trace_product(rho, &term));
        w_u_rate.push(linalg::re_trace_product(rho, &h_dot[i]));
        q_u_rate.push(linalg::re_trace_product(&rho_dot[i], &h_mats[i]));
    }

    let (w_inv, w_inv_error) = integrate(t, &w_inv_rate);
    let (q_c, q_c_error) = integrate(t, &q_c_rate);
    let (w_u, w_u_error) = integrate(t, &w_u_rate);
    let (q_u, q_u_error) = integrate(t, &q_u_rate);
    let delta_u =
        linalg::re_trace_product(&rho_mats[n - 1], &h_mats[n - 1]) - linalg::re_trace_product(&rho_mats[0], &h_mats[0]);

    Ok(ProtocolResult {
        w_inv,
        q_c,
        w_u,
        q_u,
        delta_u,
        w_inv_error,
        q_c_error,
        w_u_error,
        q_u_error,
        w_inv_rate,
        q_c_rate,
        w_u_rate,
        q_u_rate,
    })
}
