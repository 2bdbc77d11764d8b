//! Derivative-free search for trap parameters whose coupling matrix makes
//! one gradient pulse produce a target graph state: edge phases `π/4` and
//! all other phases multiples of `2π`.

mod config;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::constants::hz_to_angular;
use crate::coupling::{
    crystal_couplings, periodicity_residual, phase_matrix, CouplingError, MagneticField, QubitSpec,
};
use crate::numeric::golden_section_min;
use crate::potentials::{AxialPotential, Well};
use crate::spins::GraphSpec;

pub use config::{IncumbentSpec, ProblemSpec, SearchReport};

/// Residual assigned to parameter sets without a stable crystal, rad².
pub const INFEASIBLE_PENALTY: f64 = 1e3;
/// Default cap on the number of extra `2π` windings scanned.
pub const DEFAULT_K_MAX: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("parameters outside bounds: {0}")]
    OutOfBounds(String),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

/// One point of the search space. Frequencies in rad/s, spacing in m.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub well_frequencies: Vec<f64>,
    pub global_frequency: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSearchProblem {
    pub graph: GraphSpec,
    /// Well `i` is centred at `layout[i] · spacing`.
    pub layout: Vec<f64>,
    /// Per-well frequency bounds, rad/s.
    pub well_bounds: Vec<(f64, f64)>,
    /// rad/s
    pub global_bounds: (f64, f64),
    /// m
    pub spacing_bounds: (f64, f64),
    pub field: MagneticField,
    pub qubit: QubitSpec,
    /// Wells forced to share one frequency.
    pub symmetry_groups: Vec<Vec<usize>>,
    pub k_max: usize,
    /// Known parameter sets injected into the initial population.
    pub incumbents: Vec<Parameters>,
    /// Duration grid points per fastest phase period.
    pub scan_density: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub residual: f64,
    /// s
    pub duration: f64,
    pub feasible: bool,
    /// rad/s; absent for infeasible candidates.
    pub j: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub parameters: Parameters,
    pub duration: f64,
    pub residual: f64,
    pub j: Option<DMatrix<f64>>,
    pub evaluations: usize,
    /// Best residual after each evaluation.
    pub history: Vec<f64>,
}

impl PeriodicSearchProblem {
    /// Problem with bounds `±relative` around `centre`, which also becomes
    /// the only incumbent.
    pub fn around(
        graph: GraphSpec,
        layout: Vec<f64>,
        centre: Parameters,
        relative: f64,
        qubit: QubitSpec,
        field: MagneticField,
        symmetry_groups: Vec<Vec<usize>>,
    ) -> Self {
        let b = |v: f64| (v * (1.0 - relative), v * (1.0 + relative));
        Self {
            graph,
            layout,
            well_bounds: centre.well_frequencies.iter().map(|&w| b(w)).collect(),
            global_bounds: b(centre.global_frequency),
            spacing_bounds: b(centre.spacing),
            field,
            qubit,
            symmetry_groups,
            k_max: DEFAULT_K_MAX,
            incumbents: vec![centre],
            scan_density: 40,
        }
    }

    /// Three ions on a triangle graph: wells at −20, 0, 20 µm with
    /// 2π·(277, 100, 277) kHz over a 2π·100 kHz global trap, 100 T/m.
    pub fn triangle_reference(relative: f64) -> Self {
        Self::around(
            GraphSpec::complete(3),
            vec![-1.0, 0.0, 1.0],
            Parameters {
                well_frequencies: vec![hz_to_angular(277e3), hz_to_angular(100e3), hz_to_angular(277e3)],
                global_frequency: hz_to_angular(100e3),
                spacing: 20e-6,
            },
            relative,
            QubitSpec::yb171(),
            MagneticField { offset: 0.0, gradient: 100.0 },
            vec![vec![0, 2]],
        )
    }

    /// Four ions on a path graph: wells at −10, −5, 5, 10 µm with
    /// 2π·(415, 280, 280, 415) kHz over a 2π·239 kHz global trap, 100 T/m.
    pub fn four_ion_path_reference(relative: f64) -> Self {
        Self::around(
            GraphSpec::path(4),
            vec![-2.0, -1.0, 1.0, 2.0],
            Parameters {
                well_frequencies: [415e3, 280e3, 280e3, 415e3].map(hz_to_angular).to_vec(),
                global_frequency: hz_to_angular(239e3),
                spacing: 5e-6,
            },
            relative,
            QubitSpec::yb171(),
            MagneticField { offset: 0.0, gradient: 100.0 },
            vec![vec![0, 3], vec![1, 2]],
        )
    }

    pub fn wells(&self) -> usize {
        self.layout.len()
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidProblem(m));
        let n = self.wells();
        if n < 2 {
            return bad("need at least two wells".into());
        }
        if self.graph.n() != n || self.well_bounds.len() != n {
            return bad(format!(
                "graph has {} vertices and {} well bounds for {n} wells",
                self.graph.n(),
                self.well_bounds.len()
            ));
        }
        if self.graph.edges().is_empty() {
            return bad("graph has no edges".into());
        }
        if self.layout.windows(2).any(|w| w[1] <= w[0]) {
            return bad("layout multipliers must be strictly increasing".into());
        }
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !self.well_bounds.iter().all(|&b| ordered(b) && b.0 > 0.0)
            || !ordered(self.global_bounds)
            || self.global_bounds.0 < 0.0
            || !ordered(self.spacing_bounds)
            || self.spacing_bounds.0 <= 0.0
        {
            return bad("bounds must be finite, ordered and positive".into());
        }
        let mut seen = vec![false; n];
        for g in &self.symmetry_groups {
            for &i in g {
                if i >= n || seen[i] {
                    return bad(format!("symmetry groups overlap or name well {i}"));
                }
                seen[i] = true;
            }
        }
        if self.scan_density < 4 {
            return bad("scan density must be at least 4".into());
        }
        Ok(())
    }

    /// Free coordinates: one frequency per symmetry group (ungrouped wells
    /// are singleton groups), then global frequency, then spacing.
    fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = self.symmetry_groups.clone();
        for i in 0..self.wells() {
            if !groups.iter().any(|g| g.contains(&i)) {
                groups.push(vec![i]);
            }
        }
        groups.retain(|g| !g.is_empty());
        groups.sort_by_key(|g| *g.iter().min().unwrap_or(&0));
        groups
    }

    fn box_bounds(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .groups()
            .iter()
            .map(|g| {
                g.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), &i| {
                    (lo.max(self.well_bounds[i].0), hi.min(self.well_bounds[i].1))
                })
            })
            .collect();
        out.push(self.global_bounds);
        out.push(self.spacing_bounds);
        out
    }

    fn decode(&self, x: &[f64]) -> Parameters {
        let groups = self.groups();
        let mut f = vec![0.0; self.wells()];
        for (g, v) in groups.iter().zip(x) {
            for &i in g {
                f[i] = *v;
            }
        }
        Parameters { well_frequencies: f, global_frequency: x[groups.len()], spacing: x[groups.len() + 1] }
    }

    fn encode(&self, p: &Parameters) -> Vec<f64> {
        let mut x: Vec<f64> = self.groups().iter().map(|g| p.well_frequencies[g[0]]).collect();
        x.push(p.global_frequency);
        x.push(p.spacing);
        x
    }

    fn in_bounds(&self, p: &Parameters) -> Result<(), OptimizerError> {
        let tol = |lo: f64, hi: f64, v: f64| v >= lo - 1e-12 * lo.abs() && v <= hi + 1e-12 * hi.abs();
        if p.well_frequencies.len() != self.wells() {
            return Err(OptimizerError::OutOfBounds(format!(
                "{} well frequencies for {} wells",
                p.well_frequencies.len(),
                self.wells()
            )));
        }
        for (i, (&w, &(lo, hi))) in p.well_frequencies.iter().zip(&self.well_bounds).enumerate() {
            if !tol(lo, hi, w) {
                return Err(OptimizerError::OutOfBounds(format!("well {i} frequency {w}")));
            }
        }
        for g in &self.symmetry_groups {
            if g.windows(2).any(|w| p.well_frequencies[w[0]] != p.well_frequencies[w[1]]) {
                return Err(OptimizerError::OutOfBounds(format!("symmetry group {g:?} broken")));
            }
        }
        if !tol(self.global_bounds.0, self.global_bounds.1, p.global_frequency) {
            return Err(OptimizerError::OutOfBounds("global frequency".into()));
        }
        if !tol(self.spacing_bounds.0, self.spacing_bounds.1, p.spacing) {
            return Err(OptimizerError::OutOfBounds("spacing".into()));
        }
        Ok(())
    }

    pub fn potential(&self, p: &Parameters) -> Result<AxialPotential, OptimizerError> {
        let wells = AxialPotential::individual_wells(
            self.layout
                .iter()
                .zip(&p.well_frequencies)
                .map(|(&m, &omega)| Well { center: m * p.spacing, omega })
                .collect(),
        )
        .map_err(|e| CouplingError::Statics(e.into()))?;
        if p.global_frequency > 0.0 {
            let g = AxialPotential::global_harmonic(p.global_frequency)
                .map_err(|e| CouplingError::Statics(e.into()))?;
            Ok(AxialPotential::superposed(vec![g, wells]).map_err(|e| CouplingError::Statics(e.into()))?)
        } else {
            Ok(wells)
        }
    }
}

/// Minimum of the periodicity residual over durations `[0, T_max]` with
/// `T_max = 4π (k_max + 1) / min_edge |J|`: the window in which every edge
/// phase `Θ = J t / 2` passes through `π/4 + 2πk` for `k ≤ k_max`.
///
/// Grid search with `density` points per period of the fastest phase, then
/// golden-section refinement around the five best grid minima.
pub fn scan_duration(
    j: &DMatrix<f64>,
    graph: &GraphSpec,
    k_max: usize,
    density: usize,
) -> Result<(f64, f64), OptimizerError> {
    let edge_min = graph
        .edges()
        .iter()
        .map(|&(a, b)| j[(a, b)].abs())
        .fold(f64::INFINITY, f64::min);
    if !(edge_min > 0.0) || !edge_min.is_finite() {
        return Ok((INFEASIBLE_PENALTY, 0.0));
    }
    let j_max = j.amax();
    let t_max = 4.0 * std::f64::consts::PI * (k_max as f64 + 1.0) / edge_min;
    let periods = t_max * j_max / (4.0 * std::f64::consts::PI);
    let points = ((periods * density as f64).ceil() as usize).clamp(64, 2_000_000);
    let dt = t_max / points as f64;

    let cm = crate::coupling::CouplingMatrix { j: j.clone(), provenance: String::new() };
    let residual = |t: f64| -> f64 {
        phase_matrix(&cm, t.max(0.0))
            .and_then(|th| periodicity_residual(&th, graph.edges()))
            .unwrap_or(INFEASIBLE_PENALTY)
    };
    let values: Vec<f64> = (0..=points).map(|i| residual(i as f64 * dt)).collect();
    let mut minima: Vec<usize> = (0..=points)
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i == points || values[i] <= values[i + 1];
            left && right
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(5);

    let mut best = (values[0], 0.0);
    for &i in &minima {
        let lo = (i as f64 - 1.0).max(0.0) * dt;
        let hi = ((i + 1).min(points)) as f64 * dt;
        let (t, r) = golden_section_min(residual, lo, hi, dt * 1e-9);
        let cand = if r < values[i] { (r, t) } else { (values[i], i as f64 * dt) };
        if cand.0 < best.0 {
            best = cand;
        }
    }
    Ok(best)
}

/// Scores one parameter set. Unstable or unsolvable crystals receive
/// [`INFEASIBLE_PENALTY`] and `feasible = false`.
pub fn evaluate_candidate(
    problem: &PeriodicSearchProblem,
    parameters: &Parameters,
) -> Result<Evaluation, OptimizerError> {
    problem.validate()?;
    problem.in_bounds(parameters)?;
    Ok(evaluate_unchecked(problem, parameters))
}

fn evaluate_unchecked(problem: &PeriodicSearchProblem, p: &Parameters) -> Evaluation {
    let infeasible = Evaluation { residual: INFEASIBLE_PENALTY, duration: 0.0, feasible: false, j: None };
    let Ok(potential) = problem.potential(p) else {
        return infeasible;
    };
    let n = problem.wells();
    let identity: Vec<usize> = (0..n).collect();
    let Ok(j) = crystal_couplings(&potential, &problem.qubit, &problem.field, n, Some(&identity)) else {
        return infeasible;
    };
    match scan_duration(&j.j, &problem.graph, problem.k_max, problem.scan_density) {
        Ok((residual, duration)) if residual < INFEASIBLE_PENALTY => {
            Evaluation { residual, duration, feasible: true, j: Some(j.j) }
        }
        _ => infeasible,
    }
}

/// Differential evolution (rand/1/bin, F = 0.7, CR = 0.9) over the bounded
/// box. Incumbents within bounds seed the population, the rest is drawn
/// from a ChaCha8 stream seeded with `seed`. Candidates of one generation
/// are evaluated in parallel and merged in index order, so the result is a
/// function of `(problem, seed, budget)` alone.
pub fn search(
    problem: &PeriodicSearchProblem,
    seed: u64,
    budget: usize,
) -> Result<SearchResult, OptimizerError> {
    problem.validate()?;
    if budget == 0 {
        return Err(OptimizerError::InvalidProblem("budget must be at least 1".into()));
    }
    let bounds = problem.box_bounds();
    if bounds.iter().any(|(lo, hi)| lo > hi) {
        return Err(OptimizerError::InvalidProblem("symmetry groups have disjoint bounds".into()));
    }
    let dim = bounds.len();
    let pop_size = (10 * dim).clamp(8, 40).min(budget.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect()
    };

    let mut population: Vec<Vec<f64>> = problem
        .incumbents
        .iter()
        .filter(|p| problem.in_bounds(p).is_ok())
        .map(|p| problem.encode(p))
        .take(pop_size)
        .collect();
    while population.len() < pop_size {
        population.push(sample(&mut rng));
    }

    let evaluate_all = |xs: &[Vec<f64>]| -> Vec<Evaluation> {
        xs.par_iter().map(|x| evaluate_unchecked(problem, &problem.decode(x))).collect()
    };

    let mut history = Vec::with_capacity(budget);
    let mut best: Option<(Vec<f64>, Evaluation)> = None;
    let mut record = |x: &Vec<f64>, e: &Evaluation, history: &mut Vec<f64>| {
        if best.as_ref().is_none_or(|(_, b)| e.residual < b.residual) {
            best = Some((x.clone(), e.clone()));
        }
        history.push(best.as_ref().map(|(_, b)| b.residual).unwrap_or(INFEASIBLE_PENALTY));
    };

    let mut scores = evaluate_all(&population);
    for (x, e) in population.iter().zip(&scores) {
        record(x, e, &mut history);
    }

    while history.len() < budget {
        let remaining = budget - history.len();
        let count = remaining.min(pop_size);
        let mut trials = Vec::with_capacity(count);
        for i in 0..count {
            let pick = |rng: &mut ChaCha8Rng, exclude: &[usize]| loop {
                let r = rng.random_range(0..pop_size);
                if !exclude.contains(&r) {
                    break r;
                }
            };
            let a = pick(&mut rng, &[i]);
            let b = pick(&mut rng, &[i, a]);
            let c = pick(&mut rng, &[i, a, b]);
            let forced = rng.random_range(0..dim);
            let trial: Vec<f64> = (0..dim)
                .map(|d| {
                    let cross = d == forced || rng.random::<f64>() < 0.9;
                    let (lo, hi) = bounds[d];
                    if !cross || hi <= lo {
                        return population[i][d].clamp(lo, hi);
                    }
                    let v = population[a][d] + 0.7 * (population[b][d] - population[c][d]);
                    // Reflect into the box.
                    let v = if v < lo { lo + (lo - v).min(hi - lo) } else { v };
                    if v > hi { hi - (v - hi).min(hi - lo) } else { v }
                })
                .collect();
            trials.push(trial);
        }
        let trial_scores = evaluate_all(&trials);
        for (i, (x, e)) in trials.into_iter().zip(trial_scores).enumerate() {
            record(&x, &e, &mut history);
            if e.residual <= scores[i].residual {
                population[i] = x;
                scores[i] = e;
            }
        }
    }

    let (x, e) = best.ok_or_else(|| OptimizerError::InvalidProblem("no evaluation".into()))?;
    Ok(SearchResult {
        parameters: problem.decode(&x),
        duration: e.duration,
        residual: e.residual,
        j: e.j,
        evaluations: history.len(),
        history,
    })
}
