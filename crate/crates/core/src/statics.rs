//! Equilibrium positions, axial Hessian and normal modes of a linear ion
//! crystal.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{angular_to_hz, coulomb_constant};
use crate::potentials::{
    find_wells, AxialPotential, Derivative, FitOptions, IonSpecies, PotentialError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaticsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("equilibrium solver did not converge after {iterations} iterations (gradient norm {residual:e} N)")]
    Convergence { iterations: usize, residual: f64 },
    #[error("ion {ion} escaped the confining region (z = {position:e} m)")]
    Confinement { ion: usize, position: f64 },
    #[error("ions {first} and {second} coincide (separation {distance:e} m)")]
    Singularity { first: usize, second: usize, distance: f64 },
    #[error("unstable crystal: Hessian eigenvalue {index} is {eigenvalue:e}")]
    UnstableCrystal { index: usize, eigenvalue: f64 },
    #[error("potential has individual wells; an ion-to-well assignment is required for {ions} ions and {wells} wells")]
    AssignmentRequired { ions: usize, wells: usize },
}

/// Minimum ion separation accepted by [`hessian`], m.
const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Gradient tolerance relative to the characteristic Coulomb force
    /// `q²/(4π ε0 d²)` at the mean spacing `d`.
    pub tolerance: f64,
    /// Overrides the potential's own confinement range.
    pub search_range: Option<(f64, f64)>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-9, search_range: None }
    }
}

/// Ions at equilibrium in an axial potential.
#[derive(Debug, Clone, PartialEq)]
pub struct IonCrystal {
    pub species: IonSpecies,
    /// Strictly increasing, m.
    pub positions: Vec<f64>,
    pub potential: AxialPotential,
    /// Individual well holding each ion, when the potential has them.
    pub wells: Option<Vec<usize>>,
    /// Total energy at `positions`, J.
    pub energy: f64,
    /// Euclidean norm of the force residual, N.
    pub gradient_norm: f64,
    pub iterations: usize,
}

impl IonCrystal {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Eigenfrequencies and eigenvectors of the axial Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    /// Ascending, rad/s.
    pub frequencies: Vec<f64>,
    /// Row `j` is the unit eigenvector of mode `j`, so `A = Dᵀ diag(m ν²) D`.
    pub modes: DMatrix<f64>,
    /// J/m²
    pub hessian: DMatrix<f64>,
    /// kg
    pub mass: f64,
}

/// JSON export of a crystal and its modes. Frequencies in Hz; `mode_matrix`
/// is row-major with one mode per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModesReport {
    pub species: String,
    pub mass_kg: f64,
    pub positions_m: Vec<f64>,
    pub frequencies_hz: Vec<f64>,
    pub mode_matrix: Vec<Vec<f64>>,
    pub hessian_j_per_m2: Vec<Vec<f64>>,
}

impl NormalModes {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn report(&self, crystal: &IonCrystal) -> ModesReport {
        ModesReport {
            species: crystal.species.name.clone(),
            mass_kg: self.mass,
            positions_m: crystal.positions.clone(),
            frequencies_hz: self.frequencies.iter().map(|w| angular_to_hz(*w)).collect(),
            mode_matrix: rows(&self.modes),
            hessian_j_per_m2: rows(&self.hessian),
        }
    }
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Solves for `n` ions with default settings. For potentials with
/// individual wells and exactly `n` wells, ion `i` sits in well `i`.
pub fn solve_equilibrium(
    potential: &AxialPotential,
    species: &IonSpecies,
    n: usize,
    initial_guess: Option<&[f64]>,
) -> Result<IonCrystal, StaticsError> {
    solve_equilibrium_with(potential, species, n, None, initial_guess, &SolverOptions::default())
}

/// Full-control equilibrium solve.
///
/// `wells[i]` names the individual well holding ion `i`; the list must be
/// non-decreasing since ions cannot pass each other. Minimises
/// `Σ U(z_i) + Σ_{i<j} q²/(4π ε0 |z_i − z_j|)` by damped Newton iteration
/// with a backtracking line search that never lets two ions swap.
pub fn solve_equilibrium_with(
    potential: &AxialPotential,
    species: &IonSpecies,
    n: usize,
    wells: Option<&[usize]>,
    initial_guess: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<IonCrystal, StaticsError> {
    if n == 0 {
        return Err(StaticsError::InvalidArgument("need at least one ion".into()));
    }
    let wells = resolve_assignment(potential, n, wells)?;
    let model = EnergyModel {
        potential,
        species,
        wells: wells.as_deref(),
        kq: coulomb_constant(species.charge),
    };

    let mut z = match initial_guess {
        Some(g) => {
            if g.len() != n {
                return Err(StaticsError::InvalidArgument(format!(
                    "initial guess has {} positions for {n} ions",
                    g.len()
                )));
            }
            if g.windows(2).any(|w| w[1] <= w[0]) || g.iter().any(|v| !v.is_finite()) {
                return Err(StaticsError::InvalidArgument(
                    "initial guess must be finite and strictly increasing".into(),
                ));
            }
            g.to_vec()
        }
        None => default_guess(&model, n)?,
    };

    let range = options.search_range.unwrap_or_else(|| potential.confinement_range());
    let mut energy = model.energy(&z)?;
    let mut gnorm = f64::INFINITY;
    for iteration in 0..options.max_iterations {
        let (g, roundoff) = model.gradient(&z)?;
        gnorm = g.norm();
        let force_scale = model.characteristic_force(&z)?;
        if gnorm < options.tolerance * force_scale || gnorm <= 16.0 * f64::EPSILON * roundoff {
            return Ok(IonCrystal {
                species: species.clone(),
                positions: z,
                potential: potential.clone(),
                wells,
                energy,
                gradient_norm: gnorm,
                iterations: iteration,
            });
        }
        let h = model.hessian(&z)?;
        let step = newton_direction(h, &g);
        let slope = g.dot(&step);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
            if trial.windows(2).any(|w| w[1] <= w[0]) {
                alpha *= 0.5;
                continue;
            }
            if let Some((ion, &pos)) =
                trial.iter().enumerate().find(|(_, p)| !(range.0..=range.1).contains(*p))
            {
                // Out of range: an escape if the energy still drops there.
                match model.energy(&trial) {
                    Ok(e) if e < energy => {
                        return Err(StaticsError::Confinement { ion, position: pos })
                    }
                    _ => {
                        alpha *= 0.5;
                        continue;
                    }
                }
            }
            let e_trial = model.energy(&trial)?;
            let armijo = e_trial <= energy + 1e-4 * alpha * slope;
            let flat = (e_trial - energy).abs() <= 1e-12 * energy.abs().max(f64::MIN_POSITIVE);
            if armijo || (flat && model.gradient(&trial)?.0.norm() < gnorm) {
                accepted = Some((trial, e_trial));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, e)) => {
                z = trial;
                energy = e;
            }
            None => break,
        }
    }
    Err(StaticsError::Convergence { iterations: options.max_iterations, residual: gnorm })
}

/// Axial Hessian `A` of the total energy at the crystal's positions.
pub fn hessian(crystal: &IonCrystal) -> Result<DMatrix<f64>, StaticsError> {
    let model = EnergyModel {
        potential: &crystal.potential,
        species: &crystal.species,
        wells: crystal.wells.as_deref(),
        kq: coulomb_constant(crystal.species.charge),
    };
    model.hessian(&crystal.positions)
}

/// Diagonalises `A`; frequencies `ν_j = sqrt(λ_j / m)` in ascending order.
pub fn normal_modes(a: &DMatrix<f64>, mass: f64) -> Result<NormalModes, StaticsError> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(StaticsError::InvalidArgument("Hessian must be square and non-empty".into()));
    }
    if !(mass > 0.0) {
        return Err(StaticsError::InvalidArgument(format!("mass must be > 0, got {mass}")));
    }
    let scale = a.amax();
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(StaticsError::InvalidArgument("Hessian is not symmetric".into()));
            }
        }
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut frequencies = Vec::with_capacity(n);
    let mut modes = DMatrix::<f64>::zeros(n, n);
    for (row, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if !(lambda > 0.0) {
            return Err(StaticsError::UnstableCrystal { index: row, eigenvalue: lambda });
        }
        frequencies.push((lambda / mass).sqrt());
        let v = eig.eigenvectors.column(k);
        let v = v / v.norm();
        let pivot = v.iter().copied().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for col in 0..n {
            modes[(row, col)] = sign * v[col];
        }
    }
    Ok(NormalModes { frequencies, modes, hessian: a.clone(), mass })
}

/// Convenience: Hessian plus modes for a solved crystal.
pub fn crystal_modes(crystal: &IonCrystal) -> Result<NormalModes, StaticsError> {
    normal_modes(&hessian(crystal)?, crystal.species.mass)
}

fn resolve_assignment(
    potential: &AxialPotential,
    n: usize,
    wells: Option<&[usize]>,
) -> Result<Option<Vec<usize>>, StaticsError> {
    let catalog = potential.individual_wells_component();
    match (catalog, wells) {
        (None, None) => Ok(None),
        (None, Some(_)) => Err(StaticsError::InvalidArgument(
            "well assignment given but the potential has no individual wells".into(),
        )),
        (Some(c), None) if c.len() == n => Ok(Some((0..n).collect())),
        (Some(c), None) => Err(StaticsError::AssignmentRequired { ions: n, wells: c.len() }),
        (Some(c), Some(w)) => {
            if w.len() != n {
                return Err(StaticsError::InvalidArgument(format!(
                    "assignment lists {} ions, expected {n}",
                    w.len()
                )));
            }
            if w.iter().any(|&i| i >= c.len()) {
                return Err(StaticsError::InvalidArgument("assignment names a missing well".into()));
            }
            if w.windows(2).any(|p| p[1] < p[0]) {
                return Err(StaticsError::InvalidArgument(
                    "assignment must be non-decreasing along the chain".into(),
                ));
            }
            Ok(Some(w.to_vec()))
        }
    }
}

struct EnergyModel<'a> {
    potential: &'a AxialPotential,
    species: &'a IonSpecies,
    wells: Option<&'a [usize]>,
    kq: f64,
}

impl EnergyModel<'_> {
    fn trap(&self, ion: usize, z: f64, order: Derivative) -> Result<f64, PotentialError> {
        self.potential
            .evaluate_in_well(self.species, z, self.wells.map(|w| w[ion]), order)
    }

    fn energy(&self, z: &[f64]) -> Result<f64, StaticsError> {
        let mut e = 0.0;
        for (i, &zi) in z.iter().enumerate() {
            e += self.trap(i, zi, Derivative::Value)?;
            for &zj in &z[i + 1..] {
                e += self.kq / (zj - zi).abs();
            }
        }
        Ok(e)
    }

    /// Gradient and a magnitude scale for its round-off.
    fn gradient(&self, z: &[f64]) -> Result<(DVector<f64>, f64), StaticsError> {
        let n = z.len();
        let mut g = DVector::zeros(n);
        let mut scale = 0.0;
        for i in 0..n {
            let slope = self.trap(i, z[i], Derivative::First)?;
            let curv = self.trap(i, z[i], Derivative::Second)?;
            let mut gi = slope;
            let mut si = slope.abs() + curv.abs() * z[i].abs();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = z[i] - z[j];
                let f = self.kq / (d * d);
                gi -= f * d.signum();
                si += f;
            }
            g[i] = gi;
            scale += si * si;
        }
        Ok((g, scale.sqrt()))
    }

    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>, StaticsError> {
        let n = z.len();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = self.trap(i, z[i], Derivative::Second)?;
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = (z[j] - z[i]).abs();
                if d < MIN_SEPARATION {
                    return Err(StaticsError::Singularity { first: i, second: j, distance: d });
                }
                let c = 2.0 * self.kq / (d * d * d);
                h[(i, j)] = -c;
                h[(j, i)] = -c;
                h[(i, i)] += c;
                h[(j, j)] += c;
            }
        }
        Ok(h)
    }

    /// `q²/(4π ε0 d²)` at the mean spacing; for one ion `d` is the length
    /// scale set by the local curvature.
    fn characteristic_force(&self, z: &[f64]) -> Result<f64, StaticsError> {
        let d = if z.len() >= 2 {
            (z[z.len() - 1] - z[0]) / (z.len() - 1) as f64
        } else {
            let curv = self.trap(0, z[0], Derivative::Second)?;
            if curv > 0.0 {
                (self.kq / curv).cbrt()
            } else {
                1e-6
            }
        };
        Ok(self.kq / (d * d))
    }
}

fn newton_direction(mut h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let diag_max = h.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..80 {
        if let Some(chol) = h.clone().cholesky() {
            return -chol.solve(g);
        }
        let add = if shift == 0.0 { 1e-8 * diag_max } else { shift };
        shift += add;
        for i in 0..h.nrows() {
            h[(i, i)] += add;
        }
    }
    -g / diag_max
}

fn default_guess(model: &EnergyModel<'_>, n: usize) -> Result<Vec<f64>, StaticsError> {
    let spread = |center: f64, curvature: f64, count: usize| -> Vec<f64> {
        if count == 1 {
            return vec![center];
        }
        let ell = (model.kq / curvature).cbrt();
        let span = 2.0 * ell * (count as f64).powf(0.56);
        (0..count)
            .map(|i| center - 0.5 * span + span * i as f64 / (count - 1) as f64)
            .collect()
    };

    if let (Some(wells), Some(catalog)) = (model.wells, model.potential.individual_wells_component()) {
        let mut out = Vec::with_capacity(n);
        let mut start = 0;
        while start < n {
            let w = wells[start];
            let end = start + wells[start..].iter().take_while(|&&x| x == w).count();
            let c = catalog[w].center;
            let slope = model.trap(start, c, Derivative::First)?;
            let curv = model.trap(start, c, Derivative::Second)?;
            let centre = if curv > 0.0 { c - slope / curv } else { c };
            out.extend(spread(centre, curv.max(f64::MIN_POSITIVE), end - start));
            start = end;
        }
        // Neighbouring groups can overlap when wells are close; keep order.
        for i in 1..out.len() {
            if out[i] <= out[i - 1] {
                out[i] = out[i - 1] + 1e-7;
            }
        }
        return Ok(out);
    }

    let (lo, hi) = model.potential.scan_range();
    let minima = find_wells(
        model.potential,
        model.species,
        (lo, hi),
        (hi - lo) / 20_000.0,
        &FitOptions { window: (hi - lo) / 2000.0 },
    )
    .unwrap_or_default();
    if minima.len() == n && n > 1 {
        return Ok(minima.iter().map(|w| w.center).collect());
    }
    let deepest = minima
        .iter()
        .map(|w| {
            let u = model
                .potential
                .evaluate(model.species, w.center, Derivative::Value)
                .unwrap_or(f64::INFINITY);
            (u, w)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, w)| *w)
        .ok_or_else(|| StaticsError::Confinement { ion: 0, position: f64::NAN })?;
    let curv = model.species.mass * deepest.omega * deepest.omega;
    Ok(spread(deepest.center, curv, n))
}
