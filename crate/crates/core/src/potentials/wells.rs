//! Local-minimum search and local harmonic fits.

use nalgebra::{Matrix3, Vector3};

use super::{AxialPotential, Derivative, IonSpecies, PotentialError};
use crate::numeric::golden_section_min;

/// Default half-width of the fit window, 40 µm.
pub const DEFAULT_FIT_WINDOW: f64 = 40e-6;

/// Samples used for a least-squares fit (odd, so the centre is sampled).
const FIT_SAMPLES: usize = 41;
/// Curvature below this fraction of the sampled potential scale is a plateau.
const PLATEAU_TOLERANCE: f64 = 1e-6;
/// Golden-section refinement stops below this bracket width (m).
const REFINE_TOLERANCE: f64 = 1e-12;

/// A local minimum with its harmonic approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellFit {
    /// m
    pub center: f64,
    /// rad/s
    pub omega: f64,
    /// Half-width of the fit interval, m.
    pub fit_window: f64,
    /// RMS misfit divided by the rise of the fitted parabola over the window.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Requested half-width of the fit interval; shrunk automatically when
    /// neighbouring minima are closer.
    pub window: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { window: DEFAULT_FIT_WINDOW }
    }
}

/// Least-squares quadratic fit of the potential over
/// `[center − window, center + window]`.
pub fn fit_harmonic(
    potential: &AxialPotential,
    species: &IonSpecies,
    center: f64,
    window: f64,
) -> Result<WellFit, PotentialError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(PotentialError::InvalidArgument(format!("fit window must be > 0, got {window}")));
    }
    let u0 = potential.evaluate(species, center, Derivative::Value)?;
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    let mut samples = Vec::with_capacity(FIT_SAMPLES);
    let mut scale = u0.abs();
    let half = (FIT_SAMPLES / 2) as f64;
    for i in 0..FIT_SAMPLES {
        let x = (i as f64 - half) / half;
        let u = potential.evaluate(species, center + x * window, Derivative::Value)?;
        scale = scale.max(u.abs());
        let y = u - u0;
        let row = Vector3::new(1.0, x, x * x);
        ata += row * row.transpose();
        aty += row * y;
        samples.push((x, y));
    }
    let coeffs = ata.lu().solve(&aty).ok_or_else(|| PotentialError::NotAWell {
        center,
        reason: "singular fit system".into(),
    })?;
    let (a0, a1, a2) = (coeffs[0], coeffs[1], coeffs[2]);
    if !(a2 > PLATEAU_TOLERANCE * scale) || scale == 0.0 {
        return Err(PotentialError::NotAWell {
            center,
            reason: if a2 <= 0.0 {
                "non-positive fitted curvature".into()
            } else {
                "curvature indistinguishable from a plateau".into()
            },
        });
    }
    let sse: f64 = samples
        .iter()
        .map(|(x, y)| {
            let r = y - (a0 + a1 * x + a2 * x * x);
            r * r
        })
        .sum();
    let rms = (sse / FIT_SAMPLES as f64).sqrt();
    let curvature = 2.0 * a2 / (window * window);
    let vertex = center - a1 / (2.0 * a2) * window;
    Ok(WellFit {
        center: vertex,
        omega: (curvature / species.mass).sqrt(),
        fit_window: window,
        fit_residual: rms / a2,
    })
}

/// All local minima of the potential inside `z_range`, sorted by centre.
///
/// Minima are bracketed on a uniform grid, refined by golden-section search
/// and then characterised with [`fit_harmonic`].
pub fn find_wells(
    potential: &AxialPotential,
    species: &IonSpecies,
    z_range: (f64, f64),
    grid_step: f64,
    options: &FitOptions,
) -> Result<Vec<WellFit>, PotentialError> {
    let (lo, hi) = z_range;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(PotentialError::InvalidArgument(format!("empty z range [{lo}, {hi}]")));
    }
    if !(grid_step > 0.0) {
        return Err(PotentialError::InvalidArgument(format!("grid step must be > 0, got {grid_step}")));
    }
    let n = ((hi - lo) / grid_step).ceil() as usize + 1;
    let mut zs: Vec<f64> = (0..n).map(|i| (lo + i as f64 * grid_step).min(hi)).collect();
    // Round-off can put the last two nodes at almost the same place, which
    // would fake a minimum at the boundary.
    zs.dedup_by(|b, a| *b - *a < 1e-6 * grid_step);
    let n = zs.len();
    let mut us = Vec::with_capacity(n);
    for &z in &zs {
        let u = potential.evaluate(species, z, Derivative::Value)?;
        if !u.is_finite() {
            return Err(PotentialError::NonFinite { z });
        }
        us.push(u);
    }

    let brackets: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| us[i] < us[i - 1] && us[i] <= us[i + 1])
        .collect();

    let mut centers = Vec::with_capacity(brackets.len());
    for &i in &brackets {
        let (z, _) = golden_section_min(
            |z| potential.evaluate(species, z, Derivative::Value).unwrap_or(f64::INFINITY),
            zs[i - 1],
            zs[i + 1],
            REFINE_TOLERANCE,
        );
        centers.push(polish_on_slope(potential, species, z, zs[i - 1], zs[i + 1]));
    }

    let mut out = Vec::with_capacity(centers.len());
    for (k, &c) in centers.iter().enumerate() {
        let mut window = options.window;
        // Stay clear of neighbouring minima and of the scan boundary.
        if k > 0 {
            window = window.min(0.45 * (c - centers[k - 1]));
        }
        if k + 1 < centers.len() {
            window = window.min(0.45 * (centers[k + 1] - c));
        }
        let (vlo, vhi) = potential.valid_range();
        window = window.min(c - vlo).min(vhi - c);
        let mut fit = fit_harmonic(potential, species, c, window)?;
        fit.center = c;
        out.push(fit);
    }
    Ok(out)
}

/// A few safeguarded Newton steps on the slope; golden-section search is
/// limited by round-off in the energy, the slope is not.
fn polish_on_slope(
    potential: &AxialPotential,
    species: &IonSpecies,
    mut z: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    for _ in 0..4 {
        let (Ok(g), Ok(c)) = (
            potential.evaluate(species, z, Derivative::First),
            potential.evaluate(species, z, Derivative::Second),
        ) else {
            break;
        };
        if !(c > 0.0) || g == 0.0 {
            break;
        }
        let next = z - g / c;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let improved = potential
            .evaluate(species, next, Derivative::First)
            .map(|g2| g2.abs() < g.abs())
            .unwrap_or(false);
        if !improved {
            break;
        }
        z = next;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_angular;
    use crate::potentials::{SegmentBasis, TrapGeometry, Well};

    #[test]
    fn exact_parabola_fits_exactly() {
        let s = IonSpecies::yb171();
        let omega = hz_to_angular(350e3);
        let c = 12.5e-6;
        let p = AxialPotential::individual_wells(vec![Well { center: c, omega }]).unwrap();
        let fit = fit_harmonic(&p, &s, c + 3e-6, 20e-6).unwrap();
        assert!((fit.center - c).abs() < 1e-15);
        assert!((fit.omega / omega - 1.0).abs() < 1e-12);
        assert!(fit.fit_residual < 1e-10);
    }

    #[test]
    fn quartic_perturbation_shifts_frequency_by_window_squared() {
        // U = ½ m ω0² z² (1 + (z/L)²): modelled as a tabulated one-segment basis.
        let s = IonSpecies::yb171();
        let omega0 = hz_to_angular(200e3);
        let l = 500e-6;
        let z: Vec<f64> = (0..=4000).map(|i| -1e-3 + i as f64 * 0.5e-6).collect();
        let col: Vec<f64> = z
            .iter()
            .map(|v| 0.5 * s.mass * omega0 * omega0 * v * v * (1.0 + (v / l).powi(2)) / s.charge)
            .collect();
        let table = crate::potentials::BasisTable::from_columns(z, vec![col]).unwrap();
        let g = TrapGeometry { segment_count: 1, ..TrapGeometry::three_layer_microtrap() };
        let p = AxialPotential::segmented(g, vec![1.0], SegmentBasis::Tabulated(table.into())).unwrap();
        for window in [10e-6, 20e-6, 40e-6] {
            let fit = fit_harmonic(&p, &s, 0.0, window).unwrap();
            let rel = fit.omega / omega0 - 1.0;
            let bound = 2.0 * (window / l).powi(2);
            assert!(rel > 0.0 && rel < bound, "window {window}: rel {rel}, bound {bound}");
        }
    }

    #[test]
    fn negative_curvature_is_not_a_well() {
        let s = IonSpecies::yb171();
        let g = TrapGeometry::three_layer_microtrap();
        let mut v = vec![0.0; 17];
        v[8] = 1.0;
        let p = AxialPotential::segmented(g, v, SegmentBasis::Analytic).unwrap();
        assert!(matches!(
            fit_harmonic(&p, &s, 0.0, 20e-6),
            Err(PotentialError::NotAWell { .. })
        ));
        let flat = {
            let g = TrapGeometry::three_layer_microtrap();
            AxialPotential::segmented(g, vec![0.0; 17], SegmentBasis::Analytic).unwrap()
        };
        assert!(matches!(
            fit_harmonic(&flat, &s, 0.0, 20e-6),
            Err(PotentialError::NotAWell { .. })
        ));
    }

    #[test]
    fn global_harmonic_has_single_well_at_origin() {
        let s = IonSpecies::yb171();
        let nu = hz_to_angular(200e3);
        let p = AxialPotential::global_harmonic(nu).unwrap();
        let wells = find_wells(&p, &s, (-100e-6, 100e-6), 0.7e-6, &FitOptions::default()).unwrap();
        assert_eq!(wells.len(), 1);
        assert!(wells[0].center.abs() < 1e-12);
        assert!((wells[0].omega / nu - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_search_arguments() {
        let s = IonSpecies::yb171();
        let p = AxialPotential::global_harmonic(1e6).unwrap();
        assert!(find_wells(&p, &s, (1.0, 0.0), 1e-6, &FitOptions::default()).is_err());
        assert!(find_wells(&p, &s, (0.0, 1.0), 0.0, &FitOptions::default()).is_err());
        assert!(fit_harmonic(&p, &s, 0.0, -1.0).is_err());
    }

    #[test]
    fn monotone_potential_has_no_wells() {
        let s = IonSpecies::yb171();
        let p = AxialPotential::global_harmonic(1e6).unwrap();
        let wells = find_wells(&p, &s, (10e-6, 50e-6), 1e-6, &FitOptions::default()).unwrap();
        assert!(wells.is_empty());
    }
}
