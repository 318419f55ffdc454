//! Projector-generated decoherence of an entangled spin–path qubit pair.
//!
//! Density matrices evolve under a Lindblad master equation whose generators
//! are projectors. [`lindblad`] has the closed-form solutions and an RK4
//! integrator that checks them; [`kraus::trotter_evolve`] reaches the same
//! states by repeated channel application.
//!
//! [`interferometer`] realises the same decoherence as an average over
//! path-conditioned spin rotations with Gaussian angles, and [`tomography`]
//! reconstructs states from simulated Pauli measurement counts.

pub mod cli;
pub mod error;
pub mod format;
pub mod interferometer;
pub mod kraus;
pub mod lindblad;
pub mod linalg;
pub mod measures;
pub mod state;
pub mod tomography;

pub use error::{Error, Result, Violation};
pub use lindblad::{DecoherenceMode, DecoherenceSpec, SystemHamiltonian};
pub use measures::MeasureReport;
pub use state::{BellWeights, DensityMatrix, PureState};
