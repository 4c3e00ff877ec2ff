//! Gauge-invariant quantum thermodynamics for finite-dimensional systems.
//!
//! The thermodynamic gauge group of a Hamiltonian `H = u h u†` is the set of
//! unitaries `u (⊕_k v_k) u†` with `v_k ∈ U(n_k)` acting inside each
//! degenerate eigenspace. Averaging a state over this group (the twirl)
//! removes everything energy measurements cannot see; work, heat and entropy
//! built on the twirled state are gauge invariant.
//!
//! Modules:
//! - [`spectral`]: Hermitian validation, eigendecomposition and the
//!   degeneracy structure.
//! - [`gauge`]: twirling, dephasing, Haar sampling of gauge elements and a
//!   Monte-Carlo estimate of the twirl.
//! - [`thermo`]: entropies and quench work/heat bookkeeping.
//! - [`models`]: Landau-Zener (with closed forms) and Lipkin-Meshkov-Glick.
//! - [`protocol`]: sudden quenches and a time-discretised evaluator for
//!   smoothly driven Hamiltonians.

pub mod density;
pub mod error;
pub mod gauge;
pub mod linalg;
pub mod models;
pub mod protocol;
pub mod spectral;
pub mod thermo;

pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use gauge::GaugeElement;
pub use spectral::{Cluster, DegeneracyStructure, HermitianOperator, SpectralData};
pub use thermo::{QuConvention, ThermoReport};

pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
