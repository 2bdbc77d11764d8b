use std::f64::consts::PI;

use ioncluster::coupling::QubitSpec;
use ioncluster::sequences::{
    build_2d_schedule, execute_schedule, ladder_graph, CompileOptions, ExecuteOptions, ExecutionMode,
    PulseSchedule, ScheduleStep, SequenceError, TrapLibrary,
};

fn compile(rows: usize) -> (PulseSchedule, TrapLibrary) {
    let lib = TrapLibrary::uniform(2 * rows);
    let s = build_2d_schedule(rows, &lib, &QubitSpec::yb171(), &CompileOptions::default()).unwrap();
    (s, lib)
}

fn run(s: &PulseSchedule, lib: &TrapLibrary, mode: ExecutionMode) -> f64 {
    execute_schedule(s, lib, &QubitSpec::yb171(), &ExecuteOptions { mode, seed: 1 }).unwrap().1.fidelity
}

#[test]
fn four_rows_target_is_ladder() {
    let (s, _) = compile(4);
    let mut want: Vec<[usize; 2]> = (0..7).map(|i| [i, i + 1]).collect();
    want.extend([[0, 3], [2, 5], [4, 7]]);
    want.sort();
    assert_eq!(s.target_edges, want);
    assert_eq!(ladder_graph(4).unwrap().edges().len(), 10);
}

#[test]
fn eight_rows_merge_two_blocks() {
    let (s, lib) = compile(8);
    assert_eq!(s.n_qubits, 16);
    assert_eq!(s.stages.len(), 6);
    let merge = &s.stages[5];
    let map = s.steps[merge.first_step..]
        .iter()
        .find_map(|st| match st {
            ScheduleStep::AssignWells { map, .. } => Some(map.clone()),
            _ => None,
        })
        .unwrap();
    assert!(map[6..10].iter().all(|&w| w == map[6]));
    assert!(map[5] != map[6] && map[10] != map[6]);
    let target = s.target().unwrap();
    assert!(target.has_edge(7, 8) && target.has_edge(6, 9));

    assert!(run(&s, &lib, ExecutionMode::Ideal) > 1.0 - 1e-9);
    assert!(run(&s, &lib, ExecutionMode::Residual) > 0.99);
}

#[test]
fn window_error_costs_cos_squared_per_pair() {
    let (mut s, lib) = compile(4);
    let first = s.steps.iter().position(|st| matches!(st, ScheduleStep::GradientWindow { .. })).unwrap();
    if let ScheduleStep::GradientWindow { duration_s, .. } = &mut s.steps[first] {
        *duration_s *= 1.01;
    }
    // Four pairs, each over-rotated by δ = π/400: |⟨G|e^{iδZZ}|G⟩|² = cos²δ.
    let expected = (PI / 400.0).cos().powi(8);
    let got = run(&s, &lib, ExecutionMode::Ideal);
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn schedule_file_shape() {
    let (s, _) = compile(4);
    let v: serde_json::Value = serde_json::to_value(&s).unwrap();
    assert_eq!(v["n_qubits"], 8);
    assert!(v["target_edges"].is_array());
    let kinds: Vec<&str> = v["steps"].as_array().unwrap().iter().map(|st| st["kind"].as_str().unwrap()).collect();
    for k in ["assign_wells", "ramp_metadata", "gradient_window", "local_pulse", "transport"] {
        assert!(kinds.contains(&k), "{k}");
    }
    let back: PulseSchedule = serde_json::from_value(v).unwrap();
    assert_eq!(back, s);
}

fn lint_reason(s: &PulseSchedule, lib: &TrapLibrary) -> String {
    match s.lint(Some(lib)) {
        Err(SequenceError::Lint { reason, .. }) => reason,
        other => panic!("expected a lint error, got {other:?}"),
    }
}

#[test]
fn linter_rejects_malformed_schedules() {
    let (s, lib) = compile(4);
    assert!(s.lint(Some(&lib)).is_ok());

    let mut no_assign = s.clone();
    no_assign.steps.remove(0);
    assert!(lint_reason(&no_assign, &lib).contains("first step"));

    let mut moving = s.clone();
    let ramp = moving.steps.iter().position(|st| matches!(st, ScheduleStep::RampMetadata { .. })).unwrap();
    moving.steps.insert(ramp + 1, ScheduleStep::Transport { duration_s: 1e-5 });
    assert!(lint_reason(&moving, &lib).contains("gradient is on"));

    let mut negative = s.clone();
    if let Some(ScheduleStep::GradientWindow { duration_s, .. }) =
        negative.steps.iter_mut().find(|st| matches!(st, ScheduleStep::GradientWindow { .. }))
    {
        *duration_s = -1.0;
    }
    assert!(lint_reason(&negative, &lib).contains("duration"));

    let small = TrapLibrary::uniform(3);
    assert!(lint_reason(&s, &small).contains("beyond catalog"));

    assert!(build_2d_schedule(6, &lib, &QubitSpec::yb171(), &CompileOptions::default()).is_err());
}
