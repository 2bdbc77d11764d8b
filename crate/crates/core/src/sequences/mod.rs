//! Transport schedules that turn trap-derived couplings into two-column
//! cluster states: compilation, linting and execution.

mod compile;
mod execute;
mod library;
mod schedule;

use thiserror::Error;

use crate::coupling::CouplingError;
use crate::spins::SpinError;
use crate::statics::StaticsError;

pub use compile::{
    build_2d_schedule, ladder_graph, merge_fragment, recoupling_fragment, CompileOptions,
    DEFAULT_RAMP_DURATION, DEFAULT_TRANSPORT_DURATION,
};
pub use execute::{
    execute_schedule, fragment_unitary, ExecuteOptions, ExecutionMode, ExecutionReport,
    FinalState, WindowRecord,
};
pub use library::{CatalogWell, TrapLibrary, WellCatalog, DEFAULT_CATALOG};
pub use schedule::{
    signed_time_matrix, IntendedCoupling, PulseAxis, PulseSchedule, ScheduleStep, Stage,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("layout error: {0}")]
    Layout(String),
    #[error("zero coupling for pair ({0}, {1}); cannot time a gate")]
    ZeroCoupling(usize, usize),
    #[error("schedule violates invariant at step {step}: {reason}")]
    Lint { step: usize, reason: String },
    #[error("unknown well catalog `{0}`")]
    UnknownCatalog(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Spin(#[from] SpinError),
}

impl From<StaticsError> for SequenceError {
    fn from(e: StaticsError) -> Self {
        SequenceError::Coupling(CouplingError::Statics(e))
    }
}
