//! Subcommands other than `reproduce`.

use std::path::Path;

use ioncluster::coupling::{calibrate_units, couplings_of, MagneticField, QubitSpec};
use ioncluster::optimizer::{search, ProblemSpec, SearchReport};
use ioncluster::potentials::{find_wells, FitOptions, PotentialSpec, SpeciesSpec, DEFAULT_FIT_WINDOW};
use ioncluster::sequences::{
    build_2d_schedule, execute_schedule, CompileOptions, ExecuteOptions, ExecutionMode, PulseSchedule,
    ScheduleStep, TrapLibrary,
};
use ioncluster::statics::{crystal_modes, solve_equilibrium_with, SolverOptions};
use ioncluster::{AxialPotential, Derivative, IonSpecies};
use serde::{Deserialize, Serialize};

use crate::error::{input, numeric, CliError};
use crate::output::Run;

fn one() -> f64 {
    1.0
}

/// Crystal definition shared by `couplings` and `modes`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalConfig {
    pub potential: PotentialSpec,
    pub species: SpeciesSpec,
    pub n_ions: usize,
    #[serde(default)]
    pub b_t_per_m: f64,
    #[serde(default = "one")]
    pub gradient_factor: f64,
    /// Well index per ion for individual-well potentials.
    #[serde(default)]
    pub wells: Option<Vec<usize>>,
    #[serde(default)]
    pub initial_positions_m: Option<Vec<f64>>,
}

struct Crystal {
    potential: AxialPotential,
    species: IonSpecies,
    config: CrystalConfig,
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn load_crystal(run: &mut Run, path: &Path) -> Result<Crystal, CliError> {
    let config: CrystalConfig = run.read_json(path)?;
    let potential = config.potential.build(base_dir(path)).map_err(input)?;
    let species = config.species.build().map_err(input)?;
    if config.n_ions == 0 {
        return Err(input("n_ions must be at least 1"));
    }
    Ok(Crystal { potential, species, config })
}

fn solve(c: &Crystal) -> Result<ioncluster::IonCrystal, CliError> {
    solve_equilibrium_with(
        &c.potential,
        &c.species,
        c.config.n_ions,
        c.config.wells.as_deref(),
        c.config.initial_positions_m.as_deref(),
        &SolverOptions::default(),
    )
    .map_err(numeric)
}

pub fn couplings(run: &mut Run, config: &Path) -> Result<(), CliError> {
    let c = load_crystal(run, config)?;
    let qubit = QubitSpec::new(c.species.clone(), c.config.gradient_factor).map_err(input)?;
    let field = MagneticField::gradient(c.config.b_t_per_m).map_err(input)?;
    let crystal = solve(&c)?;
    let modes = crystal_modes(&crystal).map_err(numeric)?;
    let j = couplings_of(&crystal, &qubit, &field).map_err(numeric)?;
    let (convention, _) = calibrate_units().map_err(numeric)?;

    let mut report = j.report();
    report.unit_convention = convention;
    run.text("couplings.csv", j.to_csv());
    run.json("couplings.json", &report)?;
    run.json("modes.json", &modes.report(&crystal))?;

    let n = j.len();
    let mut max = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            max = max.max(j.get(a, b).abs());
        }
    }
    run.metric("j_max_rad_per_s", max);
    run.metric("j_max_quoted_hz", convention.quote(max));
    if n >= 2 {
        run.metric("j_12_rad_per_s", j.get(0, 1));
    }
    run.metric("lowest_mode_hz", modes.frequencies[0] / (2.0 * std::f64::consts::PI));
    Ok(())
}

pub fn modes(run: &mut Run, config: &Path) -> Result<(), CliError> {
    let c = load_crystal(run, config)?;
    let crystal = solve(&c)?;
    let modes = crystal_modes(&crystal).map_err(numeric)?;
    let report = modes.report(&crystal);
    for (k, f) in report.frequencies_hz.iter().enumerate() {
        run.metric(format!("mode_{}_hz", k + 1), *f);
    }
    run.json("modes.json", &report)?;
    Ok(())
}

fn default_grid() -> f64 {
    0.5e-6
}

fn default_window() -> f64 {
    DEFAULT_FIT_WINDOW
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellsConfig {
    pub potential: PotentialSpec,
    pub species: SpeciesSpec,
    #[serde(default)]
    pub z_range_m: Option<[f64; 2]>,
    #[serde(default = "default_grid")]
    pub grid_step_m: f64,
    #[serde(default = "default_window")]
    pub fit_window_m: f64,
}

#[derive(Serialize)]
struct WellRow {
    center_m: f64,
    frequency_hz: f64,
    fit_window_m: f64,
    fit_residual: f64,
}

#[derive(Serialize)]
struct WellsReport {
    z_range_m: [f64; 2],
    wells: Vec<WellRow>,
    spacings_m: Vec<f64>,
}

pub fn wells(run: &mut Run, path: &Path) -> Result<(), CliError> {
    let config: WellsConfig = run.read_json(path)?;
    let potential = config.potential.build(base_dir(path)).map_err(input)?;
    let species = config.species.build().map_err(input)?;
    let (lo, hi) = match config.z_range_m {
        Some([a, b]) => (a, b),
        None => potential.scan_range(),
    };
    let fits = find_wells(&potential, &species, (lo, hi), config.grid_step_m, &FitOptions {
        window: config.fit_window_m,
    })
    .map_err(numeric)?;

    let mut csv = String::from("z_m,potential_energy_j\n");
    let samples = ((hi - lo) / config.grid_step_m).ceil() as usize + 1;
    for i in 0..samples {
        let z = (lo + i as f64 * config.grid_step_m).min(hi);
        let u = potential.evaluate(&species, z, Derivative::Value).map_err(numeric)?;
        csv.push_str(&format!("{z:e},{u:e}\n"));
    }
    let report = WellsReport {
        z_range_m: [lo, hi],
        wells: fits
            .iter()
            .map(|f| WellRow {
                center_m: f.center,
                frequency_hz: f.omega / (2.0 * std::f64::consts::PI),
                fit_window_m: f.fit_window,
                fit_residual: f.fit_residual,
            })
            .collect(),
        spacings_m: fits.windows(2).map(|w| w[1].center - w[0].center).collect(),
    };
    run.metric("well_count", fits.len() as f64);
    run.json("wells.json", &report)?;
    run.text("potential.csv", csv);
    Ok(())
}

/// Catalog set covering every well a schedule assigns, all in the
/// default uniform catalog.
fn default_library(schedule: &PulseSchedule) -> TrapLibrary {
    let wells = schedule
        .steps
        .iter()
        .filter_map(|s| match s {
            ScheduleStep::AssignWells { map, .. } => map.iter().max().map(|w| w + 1),
            _ => None,
        })
        .max()
        .unwrap_or(1);
    TrapLibrary::uniform(wells)
}

pub fn schedule_build(run: &mut Run, rows: usize, gradient: f64) -> Result<(), CliError> {
    if rows == 0 || rows % 4 != 0 {
        return Err(input(format!("--rows must be a positive multiple of 4, got {rows}")));
    }
    if !(gradient > 0.0 && gradient.is_finite()) {
        return Err(input(format!("--gradient must be positive, got {gradient}")));
    }
    let library = TrapLibrary::uniform(2 * rows);
    let options = CompileOptions { gradient, ..CompileOptions::default() };
    let schedule = build_2d_schedule(rows, &library, &QubitSpec::yb171(), &options).map_err(numeric)?;
    run.metric("stages", schedule.stages.len() as f64);
    run.metric("steps", schedule.steps.len() as f64);
    run.json("schedule.json", &schedule)?;
    run.json("library.json", &library)?;
    Ok(())
}

pub fn schedule_run(
    run: &mut Run,
    config: &Path,
    library: Option<&Path>,
    mode: ExecutionMode,
    seed: u64,
) -> Result<(), CliError> {
    let schedule: PulseSchedule = run.read_json(config)?;
    let library = match library {
        Some(path) => run.read_json(path)?,
        None => default_library(&schedule),
    };
    schedule.lint(Some(&library)).map_err(input)?;
    let options = ExecuteOptions { mode, seed };
    let (_, report) =
        execute_schedule(&schedule, &library, &QubitSpec::yb171(), &options).map_err(numeric)?;
    run.metric("fidelity", report.fidelity);
    run.metric(
        "min_stabilizer",
        report.stabilizers.iter().copied().fold(f64::INFINITY, f64::min),
    );
    run.metric("gradient_time_s", report.gradient_time_s);
    run.metric("schedule_wall_clock_s", report.wall_clock_s);
    run.json("execution.json", &report)?;
    Ok(())
}

pub fn periodic_search(run: &mut Run, config: &Path, seed: u64, budget: usize) -> Result<(), CliError> {
    let spec: ProblemSpec = run.read_json(config)?;
    let problem = spec.build().map_err(input)?;
    if budget == 0 {
        return Err(input("--budget must be at least 1"));
    }
    let result = search(&problem, seed, budget).map_err(numeric)?;
    let mut history = String::from("evaluation,best_residual_rad2\n");
    for (i, r) in result.history.iter().enumerate() {
        history.push_str(&format!("{},{r:e}\n", i + 1));
    }
    run.metric("residual_rad2", result.residual);
    run.metric("duration_s", result.duration);
    run.metric("evaluations", result.evaluations as f64);
    run.json("search.json", &SearchReport::new(&result, seed))?;
    run.text("search_history.csv", history);
    Ok(())
}
