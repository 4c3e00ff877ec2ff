//! Scans, derivative post-processing, the twirl self-check and CSV I/O
//! behind the `thermogauge` binary.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use thermogauge::gauge::{self, mc_twirl};
use thermogauge::linalg::{self, conjugate_out, diag_matrix, haar_unitary, random_density};
use thermogauge::models::{self, LMGParams, LZParams};
use thermogauge::spectral::{self, SpectralData};
use thermogauge::thermo::{self, QuConvention, ThermoReport};
use thermogauge::{CVector, DegeneracyStructure, DensityMatrix, HermitianOperator};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] thermogauge::Error),
    #[error("at g0 = {g0}: {source}")]
    AtPoint { g0: f64, source: thermogauge::Error },
    #[error("{0}")]
    InvalidInput(String),
    #[error("grid is not uniform: step {index} is {found}, expected {expected}")]
    NonUniformGrid { index: usize, found: f64, expected: f64 },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for numerical failures, 1 for everything caused by the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::AtPoint { source: e, .. } if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const COLUMNS: [&str; 17] = [
    "g0",
    "delta_g",
    "W_inv",
    "Q_c",
    "Q_inv",
    "W_u",
    "Q_u",
    "W_tpm",
    "delta_U",
    "S_u",
    "S_d",
    "S_GT",
    "S_Gamma",
    "C",
    "E0",
    "ground_gap",
    "ground_degeneracy",
];

/// One scan point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub g0: f64,
    pub delta_g: f64,
    pub w_inv: f64,
    pub q_c: f64,
    pub q_inv: f64,
    pub w_u: f64,
    pub q_u: f64,
    pub w_tpm: f64,
    pub delta_u: f64,
    pub s_u: f64,
    pub s_d: f64,
    pub s_gt: f64,
    pub s_gamma: f64,
    pub c: f64,
    pub e0: f64,
    pub ground_gap: f64,
    pub ground_degeneracy: usize,
}

impl ScanRow {
    pub fn from_report(g0: f64, delta_g: f64, r: &ThermoReport) -> Self {
        Self {
            g0,
            delta_g,
            w_inv: r.w_inv,
            q_c: r.q_c,
            q_inv: r.q_inv,
            w_u: r.w_u,
            q_u: r.q_u,
            w_tpm: r.tpm_avg_work,
            delta_u: r.delta_u,
            s_u: r.s_u,
            s_d: r.s_d,
            s_gt: r.s_gt,
            s_gamma: r.s_gamma,
            c: r.coherence,
            e0: r.ground_energy,
            ground_gap: r.ground_gap,
            ground_degeneracy: r.ground_degeneracy,
        }
    }

    /// Floating-point fields in [`COLUMNS`] order, degeneracy excluded.
    fn floats(&self) -> [f64; 16] {
        [
            self.g0,
            self.delta_g,
            self.w_inv,
            self.q_c,
            self.q_inv,
            self.w_u,
            self.q_u,
            self.w_tpm,
            self.delta_u,
            self.s_u,
            self.s_d,
            self.s_gt,
            self.s_gamma,
            self.c,
            self.e0,
            self.ground_gap,
        ]
    }

    /// Value of a named column.
    pub fn column(&self, name: &str) -> Option<f64> {
        let idx = COLUMNS.iter().position(|c| *c == name)?;
        Some(if idx == 16 {
            self.ground_degeneracy as f64
        } else {
            self.floats()[idx]
        })
    }

    fn to_record(&self) -> Vec<String> {
        let mut rec: Vec<String> = self.floats().iter().map(|v| format!("{v:.16e}")).collect();
        rec.push(self.ground_degeneracy.to_string());
        rec
    }

    fn from_record(rec: &csv::StringRecord, line: usize) -> CliResult<Self> {
        if rec.len() != COLUMNS.len() {
            return Err(CliError::InvalidInput(format!(
                "line {line}: expected {} fields, found {}",
                COLUMNS.len(),
                rec.len()
            )));
        }
        let f = |i: usize| -> CliResult<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| CliError::InvalidInput(format!("line {line}, column {}: {e}", COLUMNS[i])))
        };
        Ok(Self {
            g0: f(0)?,
            delta_g: f(1)?,
            w_inv: f(2)?,
            q_c: f(3)?,
            q_inv: f(4)?,
            w_u: f(5)?,
            q_u: f(6)?,
            w_tpm: f(7)?,
            delta_u: f(8)?,
            s_u: f(9)?,
            s_d: f(10)?,
            s_gt: f(11)?,
            s_gamma: f(12)?,
            c: f(13)?,
            e0: f(14)?,
            ground_gap: f(15)?,
            ground_degeneracy: rec[16]
                .parse::<usize>()
                .map_err(|e| CliError::InvalidInput(format!("line {line}, column ground_degeneracy: {e}")))?,
        })
    }
}

pub fn write_csv<W: Write>(rows: &[ScanRow], out: W) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ScanRow], path: &Path) -> CliResult<()> {
    write_csv(rows, File::create(path)?)
}

pub fn parse_csv<R: Read>(input: R) -> CliResult<Vec<ScanRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(CliError::InvalidInput(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| ScanRow::from_record(&rec?, i + 2))
        .collect()
}

pub fn read_csv(path: &Path) -> CliResult<Vec<ScanRow>> {
    parse_csv(File::open(path)?)
}

/// System whose Hamiltonian depends linearly on the field `g`.
#[derive(Debug, Clone)]
pub enum Model {
    Lz(LZParams),
    Lmg(LMGParams),
    /// `H(g) = H0 + g H1`.
    Custom {
        h0: HermitianOperator,
        h1: HermitianOperator,
    },
}

impl Model {
    pub fn hamiltonian(&self, g: f64) -> thermogauge::Result<HermitianOperator> {
        match self {
            Model::Lz(p) => models::lz_hamiltonian(&p.with_g(g)),
            Model::Lmg(p) => models::lmg_hamiltonian(&p.with_g(g)),
            Model::Custom { h0, h1 } => h0.add_scaled(h1, g),
        }
    }

    /// `∂H/∂g`.
    pub fn perturbation(&self) -> thermogauge::Result<HermitianOperator> {
        match self {
            Model::Lz(p) => models::lz_perturbation(p),
            Model::Lmg(p) => models::lmg_perturbation(p),
            Model::Custom { h0, h1 } => {
                if h0.dim() != h1.dim() {
                    return Err(thermogauge::Error::DimensionMismatch {
                        expected: h0.dim(),
                        found: h1.dim(),
                    });
                }
                Ok(h1.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub g0_min: f64,
    pub g0_max: f64,
    pub steps: usize,
    pub delta_g: f64,
    /// `None` picks `1e-8 max(1, spectral range)` of each pre-quench
    /// Hamiltonian.
    pub deg_tol: Option<f64>,
    pub qu_convention: QuConvention,
    /// Carry the previous ground state into degenerate ground levels.
    pub continuity: bool,
    pub threads: Option<usize>,
}

impl ScanConfig {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        if !self.g0_min.is_finite() || !self.g0_max.is_finite() {
            return Err(CliError::InvalidInput("g0 range must be finite".into()));
        }
        if self.steps < 2 {
            return Err(CliError::InvalidInput(format!(
                "steps must be at least 2, got {}",
                self.steps
            )));
        }
        if self.g0_min >= self.g0_max {
            return Err(CliError::InvalidInput(format!(
                "g0-min ({}) must be below g0-max ({})",
                self.g0_min, self.g0_max
            )));
        }
        let h = (self.g0_max - self.g0_min) / (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                if i == self.steps - 1 {
                    self.g0_max
                } else {
                    self.g0_min + h * i as f64
                }
            })
            .collect())
    }

    fn validate(&self) -> CliResult<()> {
        if !self.delta_g.is_finite() {
            return Err(CliError::InvalidInput(format!(
                "delta-g must be finite, got {}",
                self.delta_g
            )));
        }
        if let Some(t) = self.deg_tol {
            if !t.is_finite() || t <= 0.0 {
                return Err(CliError::InvalidInput(format!("deg-tol must be positive, got {t}")));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::InvalidInput("threads must be at least 1".into()));
        }
        Ok(())
    }
}

struct Prepared {
    spectrum: SpectralData,
    h0: HermitianOperator,
    tol: f64,
}

/// One row per grid point, in grid order. Diagonalisations and quench
/// evaluations run in parallel; only the cheap ground-state selection is
/// sequential when continuity is on.
pub fn scan(model: &Model, cfg: &ScanConfig) -> CliResult<Vec<ScanRow>> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let h1 = model.perturbation()?;
    let run = || -> CliResult<Vec<ScanRow>> {
        let prepared: Vec<Prepared> = grid
            .par_iter()
            .map(|&g0| {
                let at = |source| CliError::AtPoint { g0, source };
                let h0 = model.hamiltonian(g0).map_err(at)?;
                let (spectrum, tol) = match cfg.deg_tol {
                    Some(t) => (spectral::decompose(&h0, t).map_err(at)?, t),
                    None => {
                        let s = spectral::decompose_default(&h0).map_err(at)?;
                        let t = spectral::default_deg_tol(&s.eigenvalues);
                        (s, t)
                    }
                };
                Ok(Prepared { spectrum, h0, tol })
            })
            .collect::<CliResult<_>>()?;

        let mut states: Vec<DensityMatrix> = Vec::with_capacity(grid.len());
        let mut hint: Option<CVector> = None;
        for (p, &g0) in prepared.iter().zip(&grid) {
            let hint_ref = if cfg.continuity { hint.as_ref() } else { None };
            let gs = models::ground_state_from_spectrum(&p.spectrum, hint_ref)
                .map_err(|source| CliError::AtPoint { g0, source })?;
            states.push(gs.rho);
            hint = Some(gs.vector);
        }

        prepared
            .par_iter()
            .zip(states.par_iter())
            .zip(grid.par_iter())
            .map(|((p, rho), &g0)| {
                let r = thermo::quench_report_with_spectrum(
                    rho,
                    &p.h0,
                    &p.spectrum,
                    &h1,
                    cfg.delta_g,
                    p.tol,
                    cfg.qu_convention,
                )
                .map_err(|source| CliError::AtPoint { g0, source })?;
                Ok(ScanRow::from_report(g0, cfg.delta_g, &r))
            })
            .collect()
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::InvalidInput(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Finite-difference derivative of uniformly sampled values: central in the
/// interior, one-sided second order at the ends.
pub fn finite_difference(x: &[f64], y: &[f64], order: u8) -> CliResult<Vec<f64>> {
    if x.len() != y.len() {
        return Err(CliError::InvalidInput("x and y lengths differ".into()));
    }
    if order != 1 && order != 2 {
        return Err(CliError::InvalidInput(format!("order must be 1 or 2, got {order}")));
    }
    let n = x.len();
    if n < 3 {
        return Err(CliError::InvalidInput(format!("need at least 3 points, got {n}")));
    }
    let h = x[1] - x[0];
    for i in 1..n {
        let step = x[i] - x[i - 1];
        if h.is_nan() || h <= 0.0 || (step - h).abs() > 1e-6 * h {
            return Err(CliError::NonUniformGrid {
                index: i,
                found: step,
                expected: h,
            });
        }
    }
    let mut d = vec![0.0; n];
    if order == 1 {
        d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
        }
        d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
    } else {
        let h2 = h * h;
        for i in 1..n - 1 {
            d[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h2;
        }
        if n >= 4 {
            d[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / h2;
            d[n - 1] = (2.0 * y[n - 1] - 5.0 * y[n - 2] + 4.0 * y[n - 3] - y[n - 4]) / h2;
        } else {
            d[0] = d[1];
            d[n - 1] = d[1];
        }
    }
    Ok(d)
}

/// `(g0, derivative)` pairs of a named column.
pub fn differentiate(rows: &[ScanRow], column: &str, order: u8) -> CliResult<Vec<(f64, f64)>> {
    if !COLUMNS.contains(&column) || column == "g0" {
        return Err(CliError::UnknownColumn(column.to_string()));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.g0).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.column(column).unwrap()).collect();
    let d = finite_difference(&x, &y, order)?;
    Ok(x.into_iter().zip(d).collect())
}

pub fn write_derivative_csv<W: Write>(column: &str, order: u8, data: &[(f64, f64)], out: W) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["g0".to_string(), format!("d{order}_{column}")])?;
    for (g, v) in data {
        w.write_record([format!("{g:.16e}"), format!("{v:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwirlCheck {
    pub frobenius_error: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Absolute slack for the pass rule, covering round-off when the estimate
/// is exact and the standard error vanishes.
const TWIRL_CHECK_FLOOR: f64 = 1e-12;

/// Random Hermitian matrix whose spectrum has the given multiplicities
/// (levels `0, 1, 2, ...` in order), rotated by a Haar unitary.
pub fn hermitian_with_pattern(pattern: &[usize], rng: &mut ChaCha8Rng) -> CliResult<HermitianOperator> {
    let gamma = DegeneracyStructure::from_multiplicities(pattern)?;
    let levels: Vec<f64> = gamma
        .clusters()
        .iter()
        .enumerate()
        .flat_map(|(k, c)| std::iter::repeat_n(k as f64, c.multiplicity))
        .collect();
    let u = haar_unitary(rng, levels.len());
    let mut m = conjugate_out(&u, &diag_matrix(&levels));
    linalg::hermitize(&mut m);
    Ok(HermitianOperator::new(m)?)
}

/// Compares the Monte-Carlo twirl with the exact one for a random state of
/// a random Hamiltonian with the forced cluster pattern.
pub fn twirl_check(dim: usize, pattern: &[usize], n_samples: usize, seed: u64) -> CliResult<TwirlCheck> {
    let total: usize = pattern.iter().sum();
    if total != dim {
        return Err(thermogauge::Error::InvalidPattern(format!("pattern sums to {total}, dimension is {dim}")).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = hermitian_with_pattern(pattern, &mut rng)?;
    let s = spectral::decompose(&h, 1e-8)?;
    if s.structure.multiplicities() != pattern {
        return Err(thermogauge::Error::InternalInconsistency(format!(
            "recovered pattern {:?} differs from {pattern:?}",
            s.structure.multiplicities()
        ))
        .into());
    }
    let rho = DensityMatrix::new(random_density(&mut rng, dim))?;
    let rho_e = spectral::to_energy_basis(&rho, &s)?;
    twirl_check_state(&rho_e, &s.structure, n_samples, seed.wrapping_add(1))
}

/// [`twirl_check`] for a given energy-basis state and structure.
pub fn twirl_check_state(
    rho_e: &DensityMatrix,
    gamma: &DegeneracyStructure,
    n_samples: usize,
    seed: u64,
) -> CliResult<TwirlCheck> {
    if n_samples < 2 {
        return Err(CliError::InvalidInput(format!(
            "a standard error needs at least 2 samples, got {n_samples}"
        )));
    }
    let exact = gauge::twirl(rho_e, gamma)?;
    let (estimate, stderr) = mc_twirl(rho_e, gamma, n_samples, seed)?;
    let frobenius_error = linalg::frobenius(&(estimate.matrix() - exact.matrix()));
    Ok(TwirlCheck {
        frobenius_error,
        stderr,
        pass: frobenius_error <= 5.0 * stderr + TWIRL_CHECK_FLOOR,
    })
}
