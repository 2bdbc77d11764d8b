//! JSON potential definitions. Frequencies are ordinary (Hz) on disk and
//! angular (rad/s) in memory.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::basis::load_basis_functions;
use super::{AxialPotential, IonSpecies, PotentialError, SegmentBasis, TrapGeometry, Well};
use crate::constants::{angular_to_hz, hz_to_angular, ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    GlobalHarmonic {
        nu1_hz: f64,
    },
    IndividualWells {
        wells: Vec<WellSpec>,
    },
    Superposed {
        parts: Vec<PotentialSpec>,
    },
    SegmentedVoltages {
        geometry: GeometrySpec,
        voltages_v: Vec<f64>,
        #[serde(default)]
        basis: BasisSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellSpec {
    pub center_m: f64,
    pub omega_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub layer_separation_m: f64,
    pub radial_gap_m: f64,
    pub electrode_thickness_m: f64,
    pub segment_length_m: f64,
    pub isolation_gap_m: f64,
    pub segment_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    #[default]
    Analytic,
    /// CSV basis table; relative paths resolve against the definition file.
    Tabulated { path: String },
}

/// Ion species on disk. Mass may be given in kg or in atomic mass units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_c: Option<f64>,
}

impl SpeciesSpec {
    pub fn build(&self) -> Result<IonSpecies, PotentialError> {
        let mass = match (self.mass_kg, self.mass_u) {
            (Some(kg), None) => kg,
            (None, Some(u)) => u * ATOMIC_MASS_UNIT,
            _ => {
                return Err(PotentialError::InvalidArgument(
                    "species needs exactly one of `mass_kg` or `mass_u`".into(),
                ))
            }
        };
        IonSpecies::new(self.name.clone(), mass, self.charge_c.unwrap_or(ELEMENTARY_CHARGE))
    }

    pub fn from_species(species: &IonSpecies) -> Self {
        Self {
            name: species.name.clone(),
            mass_kg: Some(species.mass),
            mass_u: None,
            charge_c: Some(species.charge),
        }
    }
}

impl GeometrySpec {
    pub fn build(&self) -> Result<TrapGeometry, PotentialError> {
        TrapGeometry::new(
            self.layer_separation_m,
            self.radial_gap_m,
            self.electrode_thickness_m,
            self.segment_length_m,
            self.isolation_gap_m,
            self.segment_count,
        )
    }

    pub fn from_geometry(g: &TrapGeometry) -> Self {
        Self {
            layer_separation_m: g.layer_separation,
            radial_gap_m: g.radial_gap,
            electrode_thickness_m: g.electrode_thickness,
            segment_length_m: g.segment_length,
            isolation_gap_m: g.isolation_gap,
            segment_count: g.segment_count,
        }
    }
}

impl PotentialSpec {
    /// Builds the in-memory model. `base_dir` anchors relative basis paths.
    pub fn build(&self, base_dir: &Path) -> Result<AxialPotential, PotentialError> {
        match self {
            PotentialSpec::GlobalHarmonic { nu1_hz } => {
                AxialPotential::global_harmonic(hz_to_angular(*nu1_hz))
            }
            PotentialSpec::IndividualWells { wells } => AxialPotential::individual_wells(
                wells
                    .iter()
                    .map(|w| Well { center: w.center_m, omega: hz_to_angular(w.omega_hz) })
                    .collect(),
            ),
            PotentialSpec::Superposed { parts } => AxialPotential::superposed(
                parts.iter().map(|p| p.build(base_dir)).collect::<Result<_, _>>()?,
            ),
            PotentialSpec::SegmentedVoltages { geometry, voltages_v, basis } => {
                let basis = match basis {
                    BasisSpec::Analytic => SegmentBasis::Analytic,
                    BasisSpec::Tabulated { path } => {
                        let p = base_dir.join(path);
                        SegmentBasis::Tabulated(Arc::new(load_basis_functions(&p)?))
                    }
                };
                AxialPotential::segmented(geometry.build()?, voltages_v.clone(), basis)
            }
        }
    }

    /// Inverse of [`build`](Self::build) for models without tabulated bases
    /// (a tabulated basis is written back with its source path when known).
    pub fn from_potential(p: &AxialPotential) -> Self {
        match p {
            AxialPotential::GlobalHarmonic { nu1 } => {
                PotentialSpec::GlobalHarmonic { nu1_hz: angular_to_hz(*nu1) }
            }
            AxialPotential::IndividualWells { wells } => PotentialSpec::IndividualWells {
                wells: wells
                    .iter()
                    .map(|w| WellSpec { center_m: w.center, omega_hz: angular_to_hz(w.omega) })
                    .collect(),
            },
            AxialPotential::Superposed(parts) => PotentialSpec::Superposed {
                parts: parts.iter().map(Self::from_potential).collect(),
            },
            AxialPotential::SegmentedVoltages { geometry, voltages, basis } => {
                PotentialSpec::SegmentedVoltages {
                    geometry: GeometrySpec::from_geometry(geometry),
                    voltages_v: voltages.clone(),
                    basis: match basis {
                        SegmentBasis::Analytic => BasisSpec::Analytic,
                        SegmentBasis::Tabulated(t) => BasisSpec::Tabulated {
                            path: t
                                .source()
                                .map(|p| p.display().to_string())
                                .unwrap_or_default(),
                        },
                    },
                }
            }
        }
    }
}
