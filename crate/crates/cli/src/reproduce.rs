//! Regression datasets with stored expectations.

use clap::ValueEnum;
use ioncluster::constants::hz_to_angular;
use ioncluster::coupling::{
    calibrate_units, coupling_matrix_from_hessian, crystal_couplings, frequency_gradient, CouplingMatrix,
    MagneticField, QubitSpec, UnitConvention,
};
use ioncluster::optimizer::{evaluate_candidate, PeriodicSearchProblem};
use ioncluster::potentials::Well;
use ioncluster::sequences::{
    build_2d_schedule, execute_schedule, CompileOptions, ExecuteOptions, ExecutionMode, ScheduleStep,
    TrapLibrary,
};
use ioncluster::statics::{hessian, solve_equilibrium};
use ioncluster::AxialPotential;

use crate::error::{numeric, CliError};
use crate::output::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Eight ions in one harmonic well, plus the two- and four-ion benchmarks.
    Chain,
    /// Six ions in individual wells where one pair dominates.
    WellSelection,
    /// Three-ion periodicity parameters.
    Triangle,
    /// Four-ion periodicity parameters.
    FourQubit,
    /// Transport schedule for a 4 x 2 cluster.
    Transport,
}

pub fn reproduce(run: &mut Run, target: Target, seed: u64) -> Result<(), CliError> {
    let (convention, _) = calibrate_units().map_err(numeric)?;
    match target {
        Target::Chain => chain(run, convention),
        Target::WellSelection => well_selection(run, convention),
        Target::Triangle => triangle(run, convention),
        Target::FourQubit => four_qubit(run, convention),
        Target::Transport => transport(run, seed),
    }
}

fn yb_couplings(potential: &AxialPotential, n: usize, wells: Option<&[usize]>) -> Result<CouplingMatrix, CliError> {
    let field = MagneticField::gradient(100.0).map_err(numeric)?;
    crystal_couplings(potential, &QubitSpec::yb171(), &field, n, wells).map_err(numeric)
}

fn global(hz: f64) -> Result<AxialPotential, CliError> {
    AxialPotential::global_harmonic(hz_to_angular(hz)).map_err(numeric)
}

fn chain(run: &mut Run, convention: UnitConvention) -> Result<(), CliError> {
    let potential = global(200e3)?;
    let two = yb_couplings(&potential, 2, None)?;
    run.check_relative("two_ion_j12_hz", convention.quote(two.get(0, 1)), 3.0e3, 0.10);
    let four = yb_couplings(&potential, 4, None)?;
    run.check_relative("four_ion_j14_hz", convention.quote(four.get(0, 3)), 1.24e3, 0.10);

    let n = 8;
    let qubit = QubitSpec::yb171();
    let field = MagneticField::gradient(100.0).map_err(numeric)?;
    let crystal = solve_equilibrium(&potential, &qubit.species, n, None).map_err(numeric)?;
    let modes_route = ioncluster::coupling::couplings_of(&crystal, &qubit, &field).map_err(numeric)?;
    let eps = vec![frequency_gradient(&qubit, &field); n];
    let inverse_route =
        coupling_matrix_from_hessian(&hessian(&crystal).map_err(numeric)?, &eps).map_err(numeric)?;
    let scale = modes_route.j.amax();
    let routes = (&modes_route.j - &inverse_route.j).amax() / scale;
    run.check("chain_route_agreement", routes, 0.0, "<= 1e-9 relative", routes <= 1e-9);
    let mut mirror = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            mirror = mirror.max((modes_route.get(a, b) - modes_route.get(n - 1 - a, n - 1 - b)).abs());
        }
    }
    run.check("chain_mirror_symmetry", mirror / scale, 0.0, "<= 1e-9 relative", mirror / scale <= 1e-9);
    let decays = (0..n).all(|a| {
        (a + 1..n).collect::<Vec<_>>().windows(2).all(|w| modes_route.get(a, w[1]) < modes_route.get(a, w[0]))
    });
    run.check("chain_decay_with_distance", decays as u8 as f64, 1.0, "every row decreasing", decays);

    for a in 0..n - 1 {
        run.metric(format!("j_{}{}_hz", a + 1, a + 2), convention.quote(modes_route.get(a, a + 1)));
    }
    run.text("chain_couplings.csv", modes_route.to_csv());
    let mut report = modes_route.report();
    report.unit_convention = convention;
    run.json("chain_couplings.json", &report)
}

/// Cumulative well positions (centred) for the reference spacings.
fn well_selection_potential() -> Result<AxialPotential, CliError> {
    let spacings = [320e-6, 138e-6, 297e-6, 266e-6, 279e-6];
    let frequencies = [1.65e6, 0.35e6, 0.27e6, 1.16e6, 0.83e6, 0.98e6];
    let mut z = vec![0.0];
    for s in spacings {
        z.push(z[z.len() - 1] + s);
    }
    let mid = 0.5 * z[z.len() - 1];
    AxialPotential::individual_wells(
        z.iter()
            .zip(frequencies)
            .map(|(&c, f)| Well { center: c - mid, omega: hz_to_angular(f) })
            .collect(),
    )
    .map_err(numeric)
}

fn well_selection(run: &mut Run, convention: UnitConvention) -> Result<(), CliError> {
    let wells: Vec<usize> = (0..6).collect();
    let j = yb_couplings(&well_selection_potential()?, 6, Some(&wells))?;
    let j23 = j.get(1, 2);
    run.check_relative("j23_hz", convention.quote(j23), 0.610, 0.15);
    let other = [0, 2, 3, 4].iter().map(|&a| j.get(a, a + 1).abs()).fold(0.0, f64::max);
    let dominance = j23 / other;
    run.check("j23_dominance", dominance, 100.0, ">= 100", dominance >= 100.0);
    for a in 0..5 {
        run.metric(format!("j_{}{}_hz", a + 1, a + 2), convention.quote(j.get(a, a + 1)));
    }
    run.text("well_selection_couplings.csv", j.to_csv());
    let mut report = j.report();
    report.unit_convention = convention;
    run.json("well_selection_couplings.json", &report)
}

fn periodic(run: &mut Run, problem: &PeriodicSearchProblem, name: &str) -> Result<CouplingMatrix, CliError> {
    let eval = evaluate_candidate(problem, &problem.incumbents[0]).map_err(numeric)?;
    let j = eval.j.ok_or_else(|| numeric(format!("{name} parameters give an unstable crystal")))?;
    run.metric("residual_rad2", eval.residual);
    run.metric("duration_s", eval.duration);
    let j = CouplingMatrix { j, provenance: format!("{name} reference parameters") };
    run.text(&format!("{name}_couplings.csv"), j.to_csv());
    Ok(j)
}

fn triangle(run: &mut Run, convention: UnitConvention) -> Result<(), CliError> {
    let j = periodic(run, &PeriodicSearchProblem::triangle_reference(0.2), "triangle")?;
    run.check_relative("j21_over_j31", j.get(1, 0) / j.get(2, 0), 9.02, 0.02);
    run.check_relative("j21_hz", convention.quote(j.get(1, 0)), 785.0, 0.15);
    run.check_relative("j31_hz", convention.quote(j.get(2, 0)), 87.0, 0.15);
    Ok(())
}

fn four_qubit(run: &mut Run, convention: UnitConvention) -> Result<(), CliError> {
    let j = periodic(run, &PeriodicSearchProblem::four_ion_path_reference(0.2), "four_qubit")?;
    let j41 = j.get(3, 0);
    run.check_relative("j32_over_j41", j.get(2, 1) / j41, 4.15, 0.02);
    run.check_relative("j21_over_j41", j.get(1, 0) / j41, 4.12, 0.02);
    run.check_relative("j31_over_j41", j.get(2, 0) / j41, 1.98, 0.02);
    run.check_relative("j41_hz", convention.quote(j41), 105.0, 0.15);
    Ok(())
}

fn stage_gradient_time(steps: &[ScheduleStep], first: usize, count: usize) -> f64 {
    steps[first..first + count]
        .iter()
        .map(|s| match s {
            ScheduleStep::GradientWindow { duration_s, .. } => *duration_s,
            _ => 0.0,
        })
        .sum()
}

fn transport(run: &mut Run, seed: u64) -> Result<(), CliError> {
    let library = TrapLibrary::uniform(8);
    let qubit = QubitSpec::yb171();
    let schedule = build_2d_schedule(4, &library, &qubit, &CompileOptions::default()).map_err(numeric)?;
    run.check("stage_count", schedule.stages.len() as f64, 5.0, "exact", schedule.stages.len() == 5);
    let times: Vec<f64> = schedule
        .stages
        .iter()
        .map(|s| stage_gradient_time(&schedule.steps, s.first_step, s.step_count))
        .collect();
    run.check_relative("pair_gate_time_s", times[0], 0.52e-3, 0.05);
    run.check_relative("recoupling_gate_time_s", times[2], 1.3e-3, 0.05);

    for (mode, name) in [(ExecutionMode::Ideal, "ideal"), (ExecutionMode::Residual, "residual")] {
        let (_, report) = execute_schedule(&schedule, &library, &qubit, &ExecuteOptions { mode, seed })
            .map_err(numeric)?;
        let min = report.stabilizers.iter().copied().fold(f64::INFINITY, f64::min);
        match mode {
            ExecutionMode::Ideal => {
                run.check("ideal_min_stabilizer", min, 1.0, "within 1e-9", (min - 1.0).abs() <= 1e-9)
            }
            ExecutionMode::Residual => {
                run.check("residual_fidelity", report.fidelity, 1.0, ">= 0.99", report.fidelity >= 0.99)
            }
        }
        run.metric(format!("{name}_fidelity"), report.fidelity);
        run.json(&format!("execution_{name}.json"), &report)?;
    }
    run.json("schedule.json", &schedule)?;
    run.json("library.json", &library)
}
