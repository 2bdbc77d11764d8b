use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SequenceError;
use crate::constants::hz_to_angular;
use crate::potentials::{AxialPotential, Well};

/// Name of the catalog produced by [`TrapLibrary::uniform`].
pub const DEFAULT_CATALOG: &str = "uniform_260um_200kHz";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogWell {
    pub center_m: f64,
    pub frequency_hz: f64,
}

/// Harmonic wells the transport stages move ions between, optionally on
/// top of a global harmonic confinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellCatalog {
    pub wells: Vec<CatalogWell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_hz: Option<f64>,
}

impl WellCatalog {
    /// `count` wells of one frequency, equally spaced and centred on 0.
    pub fn uniform(count: usize, spacing_m: f64, frequency_hz: f64) -> Self {
        let offset = 0.5 * (count.saturating_sub(1)) as f64 * spacing_m;
        Self {
            wells: (0..count)
                .map(|i| CatalogWell { center_m: i as f64 * spacing_m - offset, frequency_hz })
                .collect(),
            global_hz: None,
        }
    }

    pub fn potential(&self) -> Result<AxialPotential, SequenceError> {
        let wells = AxialPotential::individual_wells(
            self.wells
                .iter()
                .map(|w| Well { center: w.center_m, omega: hz_to_angular(w.frequency_hz) })
                .collect(),
        )
        .map_err(crate::statics::StaticsError::from)?;
        Ok(match self.global_hz {
            None => wells,
            Some(f) => AxialPotential::superposed(vec![
                AxialPotential::global_harmonic(hz_to_angular(f))
                    .map_err(crate::statics::StaticsError::from)?,
                wells,
            ])
            .map_err(crate::statics::StaticsError::from)?,
        })
    }
}

/// Named well catalogs referenced by schedules. Unknown top-level keys,
/// such as a unit statement, are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrapLibrary {
    pub catalogs: BTreeMap<String, WellCatalog>,
}

impl TrapLibrary {
    /// One catalog, [`DEFAULT_CATALOG`]: `wells` wells at 260 µm and
    /// 2π·200 kHz.
    pub fn uniform(wells: usize) -> Self {
        let mut catalogs = BTreeMap::new();
        catalogs.insert(DEFAULT_CATALOG.to_string(), WellCatalog::uniform(wells, 260e-6, 200e3));
        Self { catalogs }
    }

    pub fn get(&self, name: &str) -> Result<&WellCatalog, SequenceError> {
        self.catalogs.get(name).ok_or_else(|| SequenceError::UnknownCatalog(name.to_string()))
    }
}
