//! Axial potential-energy models for ions along the trap axis.
//!
//! Four model families are supported: a global harmonic well, a set of
//! individual harmonic wells, superpositions of models, and a segmented
//! electrode model driven by per-segment voltages. All models are immutable
//! once built and can be evaluated from several threads at once.

mod basis;
mod config;
mod spline;
mod wells;

use std::fmt;

use thiserror::Error;

use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE, YB171_MASS_U};

pub use basis::{analytic_shape, load_basis_functions, BasisTable, SegmentBasis};
pub use config::{BasisSpec, GeometrySpec, PotentialSpec, SpeciesSpec, WellSpec};
pub use spline::CubicSpline;
pub use wells::{find_wells, fit_harmonic, FitOptions, WellFit, DEFAULT_FIT_WINDOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("z = {z:e} m is outside the tabulated range [{min:e}, {max:e}] m")]
    OutOfRange { z: f64, min: f64, max: f64 },
    #[error("basis table format error: {0}")]
    Format(String),
    #[error("non-finite potential value at z = {z:e} m")]
    NonFinite { z: f64 },
    #[error("no harmonic well at z = {center:e} m: {reason}")]
    NotAWell { center: f64, reason: String },
}

/// Which quantity [`AxialPotential::evaluate`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    /// Potential energy, J.
    Value,
    /// Axial slope, J/m.
    First,
    /// Axial curvature, J/m².
    Second,
}

impl Derivative {
    pub fn from_order(order: u8) -> Result<Self, PotentialError> {
        match order {
            0 => Ok(Derivative::Value),
            1 => Ok(Derivative::First),
            2 => Ok(Derivative::Second),
            _ => Err(PotentialError::InvalidArgument(format!(
                "derivative order {order} not supported (0, 1 or 2)"
            ))),
        }
    }

    pub fn order(self) -> u8 {
        match self {
            Derivative::Value => 0,
            Derivative::First => 1,
            Derivative::Second => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
}

impl IonSpecies {
    pub fn new(name: impl Into<String>, mass: f64, charge: f64) -> Result<Self, PotentialError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(PotentialError::InvalidArgument(format!("mass must be > 0, got {mass}")));
        }
        if !(charge > 0.0 && charge.is_finite()) {
            return Err(PotentialError::InvalidArgument(format!(
                "charge must be > 0, got {charge}"
            )));
        }
        Ok(Self { name: name.into(), mass, charge })
    }

    /// Singly charged ¹⁷¹Yb⁺.
    pub fn yb171() -> Self {
        Self {
            name: "171Yb+".into(),
            mass: YB171_MASS_U * ATOMIC_MASS_UNIT,
            charge: ELEMENTARY_CHARGE,
        }
    }
}

/// Electrode geometry of a segmented trap. All lengths in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapGeometry {
    pub layer_separation: f64,
    pub radial_gap: f64,
    pub electrode_thickness: f64,
    pub segment_length: f64,
    pub isolation_gap: f64,
    pub segment_count: usize,
}

impl TrapGeometry {
    pub fn new(
        layer_separation: f64,
        radial_gap: f64,
        electrode_thickness: f64,
        segment_length: f64,
        isolation_gap: f64,
        segment_count: usize,
    ) -> Result<Self, PotentialError> {
        let g = Self {
            layer_separation,
            radial_gap,
            electrode_thickness,
            segment_length,
            isolation_gap,
            segment_count,
        };
        g.validate()?;
        Ok(g)
    }

    /// Three-layer segmented microtrap with 17 segment pairs: s = 350 µm,
    /// g = 250 µm, t = 125 µm, k = 100 µm, h = 30 µm.
    pub fn three_layer_microtrap() -> Self {
        Self {
            layer_separation: 350e-6,
            radial_gap: 250e-6,
            electrode_thickness: 125e-6,
            segment_length: 100e-6,
            isolation_gap: 30e-6,
            segment_count: 17,
        }
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        let lengths = [
            self.layer_separation,
            self.radial_gap,
            self.electrode_thickness,
            self.segment_length,
            self.isolation_gap,
        ];
        if lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(PotentialError::InvalidArgument(
                "all trap geometry lengths must be positive".into(),
            ));
        }
        if self.segment_count == 0 {
            return Err(PotentialError::InvalidArgument("segment_count must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Axial pitch between neighbouring segment centres, `k + h`.
    pub fn pitch(&self) -> f64 {
        self.segment_length + self.isolation_gap
    }

    /// Centre of segment `i` (0-based); the segment array is centred on z = 0.
    pub fn segment_center(&self, i: usize) -> f64 {
        (i as f64 - (self.segment_count as f64 - 1.0) / 2.0) * self.pitch()
    }

    /// Edge width of the analytic shape functions, `(s + g)/4`.
    pub fn smoothing_width(&self) -> f64 {
        (self.layer_separation + self.radial_gap) / 4.0
    }
}

/// One individual harmonic well: centre in m, angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Well {
    pub center: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxialPotential {
    /// `½ m ν1² z²`, with `nu1` in rad/s.
    GlobalHarmonic { nu1: f64 },
    /// Independent harmonic wells `½ m ω² (z − c)²`. An ion is held by the
    /// well it is assigned to; without an assignment the nearest well acts.
    IndividualWells { wells: Vec<Well> },
    /// Sum of the parts.
    Superposed(Vec<AxialPotential>),
    /// `q Σ V_i φ_i(z)` for segment voltages `V_i` and shapes `φ_i`.
    SegmentedVoltages {
        geometry: TrapGeometry,
        voltages: Vec<f64>,
        basis: SegmentBasis,
    },
}

impl AxialPotential {
    pub fn global_harmonic(nu1: f64) -> Result<Self, PotentialError> {
        let p = AxialPotential::GlobalHarmonic { nu1 };
        p.validate()?;
        Ok(p)
    }

    pub fn individual_wells(wells: Vec<Well>) -> Result<Self, PotentialError> {
        let p = AxialPotential::IndividualWells { wells };
        p.validate()?;
        Ok(p)
    }

    pub fn superposed(parts: Vec<AxialPotential>) -> Result<Self, PotentialError> {
        let p = AxialPotential::Superposed(parts);
        p.validate()?;
        Ok(p)
    }

    pub fn segmented(
        geometry: TrapGeometry,
        voltages: Vec<f64>,
        basis: SegmentBasis,
    ) -> Result<Self, PotentialError> {
        let p = AxialPotential::SegmentedVoltages { geometry, voltages, basis };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        match self {
            AxialPotential::GlobalHarmonic { nu1 } => {
                if !(*nu1 > 0.0 && nu1.is_finite()) {
                    return Err(PotentialError::InvalidArgument(format!(
                        "global frequency must be > 0, got {nu1}"
                    )));
                }
            }
            AxialPotential::IndividualWells { wells } => {
                if wells.is_empty() {
                    return Err(PotentialError::InvalidArgument("no wells given".into()));
                }
                if wells.iter().any(|w| !(w.omega > 0.0 && w.omega.is_finite() && w.center.is_finite())) {
                    return Err(PotentialError::InvalidArgument(
                        "well frequencies must be > 0 and centres finite".into(),
                    ));
                }
                if wells.windows(2).any(|w| w[1].center <= w[0].center) {
                    return Err(PotentialError::InvalidArgument(
                        "well centres must be strictly increasing".into(),
                    ));
                }
            }
            AxialPotential::Superposed(parts) => {
                if parts.is_empty() {
                    return Err(PotentialError::InvalidArgument("empty superposition".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
            AxialPotential::SegmentedVoltages { geometry, voltages, basis } => {
                geometry.validate()?;
                if voltages.len() != geometry.segment_count {
                    return Err(PotentialError::InvalidArgument(format!(
                        "{} voltages for {} segments",
                        voltages.len(),
                        geometry.segment_count
                    )));
                }
                if voltages.iter().any(|v| !v.is_finite()) {
                    return Err(PotentialError::InvalidArgument("non-finite voltage".into()));
                }
                if let Some(k) = basis.segment_count() {
                    if k != geometry.segment_count {
                        return Err(PotentialError::InvalidArgument(format!(
                            "basis table has {k} segments, geometry has {}",
                            geometry.segment_count
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Potential energy or its axial derivative at `z`.
    pub fn evaluate(
        &self,
        species: &IonSpecies,
        z: f64,
        order: Derivative,
    ) -> Result<f64, PotentialError> {
        self.evaluate_in_well(species, z, None, order)
    }

    /// As [`evaluate`](Self::evaluate), but an ion held in individual well
    /// `well` feels only that well from any `IndividualWells` component.
    pub fn evaluate_in_well(
        &self,
        species: &IonSpecies,
        z: f64,
        well: Option<usize>,
        order: Derivative,
    ) -> Result<f64, PotentialError> {
        let m = species.mass;
        let value = match self {
            AxialPotential::GlobalHarmonic { nu1 } => harmonic(m * nu1 * nu1, z, order),
            AxialPotential::IndividualWells { wells } => {
                let w = match well {
                    Some(i) => *wells.get(i).ok_or_else(|| {
                        PotentialError::InvalidArgument(format!(
                            "well index {i} out of range ({} wells)",
                            wells.len()
                        ))
                    })?,
                    None => nearest_well(wells, z),
                };
                harmonic(m * w.omega * w.omega, z - w.center, order)
            }
            AxialPotential::Superposed(parts) => {
                let mut sum = 0.0;
                for p in parts {
                    sum += p.evaluate_in_well(species, z, well, order)?;
                }
                sum
            }
            AxialPotential::SegmentedVoltages { geometry, voltages, basis } => {
                let mut sum = 0.0;
                for (i, v) in voltages.iter().enumerate() {
                    if *v == 0.0 {
                        continue;
                    }
                    let phi = match basis {
                        SegmentBasis::Analytic => analytic_shape(geometry, i, z, order.order()),
                        SegmentBasis::Tabulated(t) => t.shape(i, z, order.order())?,
                    };
                    sum += v * phi;
                }
                if let SegmentBasis::Tabulated(t) = basis {
                    // Range check also when every voltage is zero.
                    let (lo, hi) = t.range();
                    if !(lo..=hi).contains(&z) {
                        return Err(PotentialError::OutOfRange { z, min: lo, max: hi });
                    }
                }
                species.charge * sum
            }
        };
        if !value.is_finite() {
            return Err(PotentialError::NonFinite { z });
        }
        Ok(value)
    }

    /// The individual wells of this model, if it has an `IndividualWells`
    /// component.
    pub fn individual_wells_component(&self) -> Option<&[Well]> {
        match self {
            AxialPotential::IndividualWells { wells } => Some(wells),
            AxialPotential::Superposed(parts) => {
                parts.iter().find_map(|p| p.individual_wells_component())
            }
            _ => None,
        }
    }

    /// Whether the model grows without bound away from the origin.
    pub fn is_confining_everywhere(&self) -> bool {
        match self {
            AxialPotential::GlobalHarmonic { .. } | AxialPotential::IndividualWells { .. } => true,
            AxialPotential::Superposed(parts) => parts.iter().any(|p| p.is_confining_everywhere()),
            AxialPotential::SegmentedVoltages { .. } => false,
        }
    }

    /// Interval on which the model may be evaluated.
    pub fn valid_range(&self) -> (f64, f64) {
        match self {
            AxialPotential::SegmentedVoltages { basis: SegmentBasis::Tabulated(t), .. } => t.range(),
            AxialPotential::Superposed(parts) => parts.iter().fold(
                (f64::NEG_INFINITY, f64::INFINITY),
                |(lo, hi), p| {
                    let (a, b) = p.valid_range();
                    (lo.max(a), hi.min(b))
                },
            ),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Interval ions may occupy before they count as escaped.
    pub fn confinement_range(&self) -> (f64, f64) {
        if self.is_confining_everywhere() {
            return self.valid_range();
        }
        let (lo, hi) = self.scan_range();
        let (vlo, vhi) = self.valid_range();
        (lo.max(vlo), hi.min(vhi))
    }

    /// A finite interval that contains every feature of the model, used as
    /// the default region for well searches and initial guesses.
    pub fn scan_range(&self) -> (f64, f64) {
        match self {
            AxialPotential::GlobalHarmonic { .. } => (-1e-3, 1e-3),
            AxialPotential::IndividualWells { wells } => {
                let first = wells[0].center;
                let last = wells[wells.len() - 1].center;
                let margin = 0.5 * (last - first).max(100e-6);
                (first - margin, last + margin)
            }
            AxialPotential::SegmentedVoltages { geometry, basis, .. } => match basis {
                SegmentBasis::Tabulated(t) => t.range(),
                SegmentBasis::Analytic => {
                    let edge = geometry.segment_center(geometry.segment_count - 1)
                        + 0.5 * geometry.segment_length
                        + 4.0 * geometry.smoothing_width();
                    (-edge, edge)
                }
            },
            AxialPotential::Superposed(parts) => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for p in parts {
                    let (a, b) = p.scan_range();
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                let (vlo, vhi) = self.valid_range();
                (lo.max(vlo), hi.min(vhi))
            }
        }
    }
}

impl fmt::Display for AxialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::constants::angular_to_hz;
        match self {
            AxialPotential::GlobalHarmonic { nu1 } => {
                write!(f, "global harmonic {:.6} kHz", angular_to_hz(*nu1) / 1e3)
            }
            AxialPotential::IndividualWells { wells } => {
                write!(f, "{} individual wells [", wells.len())?;
                for (i, w) in wells.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{:.3} µm @ {:.3} kHz", w.center * 1e6, angular_to_hz(w.omega) / 1e3)?;
                }
                write!(f, "]")
            }
            AxialPotential::Superposed(parts) => {
                write!(f, "superposition(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
            AxialPotential::SegmentedVoltages { geometry, voltages, basis } => {
                let kind = match basis {
                    SegmentBasis::Analytic => "analytic basis".to_string(),
                    SegmentBasis::Tabulated(t) => match t.source() {
                        Some(p) => format!("tabulated basis {}", p.display()),
                        None => "tabulated basis".to_string(),
                    },
                };
                write!(f, "{} segments, {kind}, voltages {:?} V", geometry.segment_count, voltages)
            }
        }
    }
}

fn harmonic(stiffness: f64, x: f64, order: Derivative) -> f64 {
    match order {
        Derivative::Value => 0.5 * stiffness * x * x,
        Derivative::First => stiffness * x,
        Derivative::Second => stiffness,
    }
}

fn nearest_well(wells: &[Well], z: f64) -> Well {
    let idx = wells.partition_point(|w| w.center < z);
    if idx == 0 {
        wells[0]
    } else if idx == wells.len() {
        wells[idx - 1]
    } else if (z - wells[idx - 1].center) <= (wells[idx].center - z) {
        wells[idx - 1]
    } else {
        wells[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_angular;
    use std::sync::Arc;

    fn yb() -> IonSpecies {
        IonSpecies::yb171()
    }

    #[test]
    fn harmonic_value_matches_definition() {
        let nu = hz_to_angular(200e3);
        let p = AxialPotential::global_harmonic(nu).unwrap();
        let z = 3.7e-6;
        let u = p.evaluate(&yb(), z, Derivative::Value).unwrap();
        assert_eq!(u, 0.5 * yb().mass * nu * nu * z * z);
        assert_eq!(p.evaluate(&yb(), 0.0, Derivative::First).unwrap(), 0.0);
    }

    #[test]
    fn superposition_adds_curvatures() {
        let wells = AxialPotential::individual_wells(vec![
            Well { center: -10e-6, omega: hz_to_angular(300e3) },
            Well { center: 10e-6, omega: hz_to_angular(100e3) },
        ])
        .unwrap();
        let global = AxialPotential::global_harmonic(hz_to_angular(150e3)).unwrap();
        let sum = AxialPotential::superposed(vec![wells.clone(), global.clone()]).unwrap();
        for z in [-12e-6, -1e-6, 4e-6, 11e-6] {
            for d in [Derivative::Value, Derivative::First, Derivative::Second] {
                let a = wells.evaluate(&yb(), z, d).unwrap() + global.evaluate(&yb(), z, d).unwrap();
                assert_eq!(sum.evaluate(&yb(), z, d).unwrap(), a);
            }
        }
    }

    #[test]
    fn well_assignment_overrides_nearest() {
        let wells = AxialPotential::individual_wells(vec![
            Well { center: 0.0, omega: 1e6 },
            Well { center: 5e-6, omega: 2e6 },
        ])
        .unwrap();
        let s = yb();
        let near = wells.evaluate(&s, 4e-6, Derivative::Second).unwrap();
        let held = wells.evaluate_in_well(&s, 4e-6, Some(0), Derivative::Second).unwrap();
        assert!((near / (s.mass * 4e12) - 1.0).abs() < 1e-15);
        assert!((held / (s.mass * 1e12) - 1.0).abs() < 1e-15);
        assert!(wells.evaluate_in_well(&s, 0.0, Some(2), Derivative::Value).is_err());
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(AxialPotential::global_harmonic(0.0).is_err());
        assert!(AxialPotential::individual_wells(vec![
            Well { center: 1e-6, omega: 1.0 },
            Well { center: 0.0, omega: 1.0 },
        ])
        .is_err());
        assert!(AxialPotential::segmented(
            TrapGeometry::three_layer_microtrap(),
            vec![0.0; 3],
            SegmentBasis::Analytic
        )
        .is_err());
        assert!(IonSpecies::new("x", -1.0, 1.0).is_err());
        assert!(Derivative::from_order(3).is_err());
    }

    #[test]
    fn tabulated_basis_reports_range_errors() {
        let table = BasisTable::from_columns(vec![-1e-3, 0.0, 1e-3], vec![vec![0.0, 1.0, 0.0]]).unwrap();
        let g = TrapGeometry { segment_count: 1, ..TrapGeometry::three_layer_microtrap() };
        let p = AxialPotential::segmented(g, vec![1.0], SegmentBasis::Tabulated(Arc::new(table)))
            .unwrap();
        assert!(matches!(
            p.evaluate(&yb(), 2e-3, Derivative::Value),
            Err(PotentialError::OutOfRange { .. })
        ));
        assert_eq!(p.evaluate(&yb(), 0.0, Derivative::Value).unwrap(), yb().charge);
    }

    #[test]
    fn segment_centres_are_symmetric() {
        let g = TrapGeometry::three_layer_microtrap();
        assert_eq!(g.segment_center(8), 0.0);
        assert!((g.segment_center(0) + g.segment_center(16)).abs() < 1e-18);
        assert!((g.pitch() - 130e-6).abs() < 1e-18);
    }
}
