//! JSON problem and result files. Frequencies in Hz, lengths in m.

use serde::{Deserialize, Serialize};

use super::{OptimizerError, Parameters, PeriodicSearchProblem, SearchResult, DEFAULT_K_MAX};
use crate::constants::{angular_to_hz, hz_to_angular};
use crate::coupling::{MagneticField, QubitSpec};
use crate::potentials::SpeciesSpec;
use crate::spins::GraphSpec;
use crate::statics::rows;

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

fn default_gradient_factor() -> f64 {
    1.0
}

fn default_density() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncumbentSpec {
    pub well_frequencies_hz: Vec<f64>,
    pub global_hz: f64,
    pub spacing_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub edges: Vec<[usize; 2]>,
    /// Well `i` sits at `layout[i] · spacing`.
    pub layout: Vec<f64>,
    pub well_bounds_hz: Vec<[f64; 2]>,
    pub global_bounds_hz: [f64; 2],
    pub spacing_bounds_m: [f64; 2],
    pub b_t_per_m: f64,
    pub species: SpeciesSpec,
    #[serde(default = "default_gradient_factor")]
    pub gradient_factor: f64,
    #[serde(default)]
    pub symmetry_groups: Vec<Vec<usize>>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub incumbents: Vec<IncumbentSpec>,
    #[serde(default = "default_density")]
    pub scan_density: usize,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<PeriodicSearchProblem, OptimizerError> {
        let invalid = |e: String| OptimizerError::InvalidProblem(e);
        let graph = GraphSpec::new(self.layout.len(), self.edges.iter().map(|e| (e[0], e[1])).collect())
            .map_err(|e| invalid(e.to_string()))?;
        let species = self.species.build().map_err(|e| invalid(e.to_string()))?;
        let qubit = QubitSpec::new(species, self.gradient_factor)?;
        let problem = PeriodicSearchProblem {
            graph,
            layout: self.layout.clone(),
            well_bounds: self.well_bounds_hz.iter().map(|b| (hz_to_angular(b[0]), hz_to_angular(b[1]))).collect(),
            global_bounds: (hz_to_angular(self.global_bounds_hz[0]), hz_to_angular(self.global_bounds_hz[1])),
            spacing_bounds: (self.spacing_bounds_m[0], self.spacing_bounds_m[1]),
            field: MagneticField::gradient(self.b_t_per_m)?,
            qubit,
            symmetry_groups: self.symmetry_groups.clone(),
            k_max: self.k_max,
            incumbents: self
                .incumbents
                .iter()
                .map(|i| Parameters {
                    well_frequencies: i.well_frequencies_hz.iter().map(|f| hz_to_angular(*f)).collect(),
                    global_frequency: hz_to_angular(i.global_hz),
                    spacing: i.spacing_m,
                })
                .collect(),
            scan_density: self.scan_density,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn from_problem(p: &PeriodicSearchProblem) -> Self {
        Self {
            edges: p.graph.edges().iter().map(|&(a, b)| [a, b]).collect(),
            layout: p.layout.clone(),
            well_bounds_hz: p.well_bounds.iter().map(|b| [angular_to_hz(b.0), angular_to_hz(b.1)]).collect(),
            global_bounds_hz: [angular_to_hz(p.global_bounds.0), angular_to_hz(p.global_bounds.1)],
            spacing_bounds_m: [p.spacing_bounds.0, p.spacing_bounds.1],
            b_t_per_m: p.field.gradient,
            species: SpeciesSpec::from_species(&p.qubit.species),
            gradient_factor: p.qubit.gradient_factor,
            symmetry_groups: p.symmetry_groups.clone(),
            k_max: p.k_max,
            incumbents: p.incumbents.iter().map(IncumbentSpec::from_parameters).collect(),
            scan_density: p.scan_density,
        }
    }
}

impl IncumbentSpec {
    pub fn from_parameters(p: &Parameters) -> Self {
        Self {
            well_frequencies_hz: p.well_frequencies.iter().map(|w| angular_to_hz(*w)).collect(),
            global_hz: angular_to_hz(p.global_frequency),
            spacing_m: p.spacing,
        }
    }
}

/// Search result as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub parameters: IncumbentSpec,
    pub duration_s: f64,
    pub residual_rad2: f64,
    pub j_rad_per_s: Option<Vec<Vec<f64>>>,
    pub evaluations: usize,
    pub seed: u64,
}

impl SearchReport {
    pub fn new(result: &SearchResult, seed: u64) -> Self {
        Self {
            parameters: IncumbentSpec::from_parameters(&result.parameters),
            duration_s: result.duration,
            residual_rad2: result.residual,
            j_rad_per_s: result.j.as_ref().map(rows),
            evaluations: result.evaluations,
            seed,
        }
    }
}
