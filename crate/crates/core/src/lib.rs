//! Spin-spin couplings of trapped ions in configurable axial potentials, and
//! the machinery to turn them into two-dimensional cluster states.
//!
//! The crate is organised bottom-up:
//!
//! - [`potentials`]: axial potential models, well finding and harmonic fits.
//! - [`statics`]: ion equilibrium positions, Hessian and normal modes.
//! - [`coupling`]: the gradient-induced coupling matrix `J` and phase matrices.
//! - [`spins`]: a dense state-vector simulator plus an exact phase-state
//!   representation used for graph-state verification.
//! - [`sequences`]: compilation and execution of transport schedules.
//! - [`optimizer`]: derivative-free search for periodic coupling matrices.
//!
//! Internally every frequency is angular (rad/s) and every length is in
//! metres. File formats use ordinary frequencies (Hz).

pub mod constants;
pub mod coupling;
pub mod numeric;
pub mod optimizer;
pub mod potentials;
pub mod sequences;
pub mod spins;
pub mod statics;

pub use coupling::{
    coupling_matrix, coupling_matrix_from_hessian, frequency_gradient, periodicity_residual,
    phase_matrix, CouplingError, CouplingMatrix, MagneticField, PhaseMatrix, QubitSpec,
};
pub use potentials::{AxialPotential, Derivative, IonSpecies, PotentialError, TrapGeometry, WellFit};
pub use spins::{GraphSpec, MeasurementBasis, QuantumState, SpinError};
pub use statics::{hessian, normal_modes, solve_equilibrium, IonCrystal, NormalModes, StaticsError};
