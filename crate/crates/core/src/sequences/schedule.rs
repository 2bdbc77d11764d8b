use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{SequenceError, TrapLibrary};
use crate::spins::{GraphSpec, MeasurementBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseAxis {
    X,
}

/// A coupling the compiler relied on when timing a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntendedCoupling {
    pub pair: [usize; 2],
    pub j_rad_per_s: f64,
}

/// One operation. Durations in seconds, gradients in T/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleStep {
    /// `map[ion]` is the well (in catalog `catalog`) holding each ion.
    AssignWells { catalog: String, map: Vec<usize> },
    GradientWindow {
        b_t_per_m: f64,
        duration_s: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        intended: Vec<IntendedCoupling>,
    },
    LocalPulse { qubit: usize, axis: PulseAxis },
    Transport { duration_s: f64 },
    /// Switches the gradient on if it is off, and off if it is on.
    RampMetadata { duration_s: f64 },
    Measure { qubit: usize, basis: MeasurementBasis },
}

/// Top-level grouping of consecutive steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub label: String,
    pub first_step: usize,
    pub step_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub n_qubits: usize,
    pub target_edges: Vec<[usize; 2]>,
    pub steps: Vec<ScheduleStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<Stage>,
}

impl PulseSchedule {
    pub fn target(&self) -> Result<GraphSpec, SequenceError> {
        Ok(GraphSpec::new(
            self.n_qubits,
            self.target_edges.iter().map(|e| (e[0], e[1])).collect(),
        )?)
    }

    /// Checks the structural invariants: the first step assigns wells, every
    /// later assignment directly follows a transport, transports and
    /// assignments happen with the gradient off, windows with it on,
    /// durations are non-negative and indices valid. With a library, well
    /// indices are checked against the named catalogs.
    pub fn lint(&self, library: Option<&TrapLibrary>) -> Result<(), SequenceError> {
        let n = self.n_qubits;
        let fail = |step: usize, reason: String| Err(SequenceError::Lint { step, reason });
        if n == 0 {
            return fail(0, "schedule has no qubits".into());
        }
        if let Err(e) = self.target() {
            return fail(0, format!("target graph: {e}"));
        }
        match self.steps.first() {
            Some(ScheduleStep::AssignWells { .. }) => {}
            _ => return fail(0, "first step must assign wells".into()),
        }
        let mut gradient_on = false;
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                ScheduleStep::AssignWells { catalog, map } => {
                    if gradient_on {
                        return fail(i, "wells reassigned while the gradient is on".into());
                    }
                    if i > 0 && !matches!(self.steps[i - 1], ScheduleStep::Transport { .. }) {
                        return fail(i, "well reassignment must follow a transport".into());
                    }
                    if map.len() != n {
                        return fail(i, format!("map covers {} of {n} ions", map.len()));
                    }
                    if map.windows(2).any(|w| w[1] < w[0]) {
                        return fail(i, "ions cannot pass each other".into());
                    }
                    if let Some(lib) = library {
                        let Some(cat) = lib.catalogs.get(catalog) else {
                            return fail(i, format!("unknown catalog `{catalog}`"));
                        };
                        if map.iter().any(|&w| w >= cat.wells.len()) {
                            return fail(i, format!("map names a well beyond catalog `{catalog}`"));
                        }
                    }
                }
                ScheduleStep::GradientWindow { b_t_per_m, duration_s, intended } => {
                    if !gradient_on {
                        return fail(i, "gradient window while the gradient is off".into());
                    }
                    if !(duration_s.is_finite() && *duration_s >= 0.0) || !b_t_per_m.is_finite() {
                        return fail(i, "window needs finite b and duration >= 0".into());
                    }
                    for c in intended {
                        if c.pair[0] >= n || c.pair[1] >= n || c.pair[0] == c.pair[1] {
                            return fail(i, format!("intended pair {:?} invalid", c.pair));
                        }
                    }
                }
                ScheduleStep::LocalPulse { qubit, .. } | ScheduleStep::Measure { qubit, .. } => {
                    if *qubit >= n {
                        return fail(i, format!("qubit {qubit} out of range"));
                    }
                }
                ScheduleStep::Transport { duration_s } => {
                    if gradient_on {
                        return fail(i, "transport while the gradient is on".into());
                    }
                    if !(duration_s.is_finite() && *duration_s >= 0.0) {
                        return fail(i, "duration must be >= 0".into());
                    }
                }
                ScheduleStep::RampMetadata { duration_s } => {
                    if !(duration_s.is_finite() && *duration_s >= 0.0) {
                        return fail(i, "duration must be >= 0".into());
                    }
                    gradient_on = !gradient_on;
                }
            }
        }
        let mut covered = 0;
        for (k, s) in self.stages.iter().enumerate() {
            if s.first_step != covered {
                return fail(s.first_step, format!("stage {k} does not start where the previous ended"));
            }
            covered += s.step_count;
        }
        if !self.stages.is_empty() && covered != self.steps.len() {
            return fail(covered, "stages do not cover every step".into());
        }
        Ok(())
    }
}

/// `T_ij = Σ_windows σ_i σ_j Δt`, where `σ_k = ±1` tracks the X pulses
/// applied to qubit `k` so far. Recoupling is correct when `T` is zero for
/// every unintended pair.
pub fn signed_time_matrix(steps: &[ScheduleStep], n: usize) -> Result<DMatrix<f64>, SequenceError> {
    let mut sign = vec![1.0; n];
    let mut t = DMatrix::zeros(n, n);
    for step in steps {
        match step {
            ScheduleStep::LocalPulse { qubit, .. } => {
                let s = sign.get_mut(*qubit).ok_or_else(|| {
                    SequenceError::InvalidArgument(format!("qubit {qubit} out of range"))
                })?;
                *s = -*s;
            }
            ScheduleStep::GradientWindow { duration_s, .. } => {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            t[(i, j)] += sign[i] * sign[j] * duration_s;
                        }
                    }
                }
            }
            _ => {}
        }
    }
    Ok(t)
}
