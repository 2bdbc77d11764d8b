//! Compiler from a row count to the staged transport schedule of an
//! `n × 2` cluster state.

use std::f64::consts::PI;
use std::ops::Range;

use super::schedule::{IntendedCoupling, PulseAxis, PulseSchedule, ScheduleStep, Stage};
use super::{SequenceError, TrapLibrary, DEFAULT_CATALOG};
use crate::coupling::{crystal_couplings, CouplingMatrix, MagneticField, QubitSpec};
use crate::spins::GraphSpec;

/// Adiabatic transport time, well above `2π/ν ≈ 5 µs` at 200 kHz.
pub const DEFAULT_TRANSPORT_DURATION: f64 = 50e-6;
/// Gradient ramp time, well above the `≈ 0.1 µs` Zeeman period.
pub const DEFAULT_RAMP_DURATION: f64 = 10e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    /// T/m
    pub gradient: f64,
    pub catalog: String,
    pub transport_duration: f64,
    pub ramp_duration: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            gradient: 100.0,
            catalog: DEFAULT_CATALOG.to_string(),
            transport_duration: DEFAULT_TRANSPORT_DURATION,
            ramp_duration: DEFAULT_RAMP_DURATION,
        }
    }
}

/// Target graph for `rows` rows (`2·rows` qubits in chain order): the path
/// plus third-neighbour bonds `(i, i+3)` for even `i`.
pub fn ladder_graph(rows: usize) -> Result<GraphSpec, SequenceError> {
    let n = 2 * rows;
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    edges.extend((0..n.saturating_sub(3)).step_by(2).map(|i| (i, i + 3)));
    Ok(GraphSpec::new(n, edges)?)
}

fn block_of(range: &Range<usize>) -> Result<[usize; 4], SequenceError> {
    if range.len() != 4 {
        return Err(SequenceError::Layout(format!(
            "block {range:?} must hold exactly four contiguous qubits"
        )));
    }
    Ok([range.start, range.start + 1, range.start + 2, range.start + 3])
}

fn local_coupling(j: &CouplingMatrix, a: usize, b: usize) -> Result<f64, SequenceError> {
    if j.len() != 4 {
        return Err(SequenceError::Layout(format!(
            "block coupling matrix must be 4x4, got {}x{}",
            j.len(),
            j.len()
        )));
    }
    Ok(j.get(a, b))
}

/// Emits windows whose X-frame (set of sign-flipped qubits) follows
/// `windows`, with pulses on the symmetric difference between consecutive
/// frames, and returns to the empty frame at the end.
fn framed_windows(
    windows: &[(f64, Vec<usize>)],
    b: f64,
    intended: &[IntendedCoupling],
) -> Vec<ScheduleStep> {
    let mut steps = Vec::new();
    let mut frame: Vec<usize> = Vec::new();
    let mut switch_to = |target: &[usize], steps: &mut Vec<ScheduleStep>| {
        let mut flips: Vec<usize> = frame
            .iter()
            .filter(|q| !target.contains(q))
            .chain(target.iter().filter(|q| !frame.contains(q)))
            .copied()
            .collect();
        flips.sort_unstable();
        for q in flips {
            steps.push(ScheduleStep::LocalPulse { qubit: q, axis: PulseAxis::X });
        }
        frame = target.to_vec();
    };
    for (duration, set) in windows {
        switch_to(set, &mut steps);
        steps.push(ScheduleStep::GradientWindow {
            b_t_per_m: b,
            duration_s: *duration,
            intended: intended.to_vec(),
        });
    }
    switch_to(&[], &mut steps);
    steps
}

fn gate_time(j: f64, pair: (usize, usize)) -> Result<f64, SequenceError> {
    if j == 0.0 || !j.is_finite() {
        return Err(SequenceError::ZeroCoupling(pair.0, pair.1));
    }
    Ok(PI / (2.0 * j.abs()))
}

/// Four windows of `t/4`, `t = π/(2 J_ad)`, with X pulses on the inner
/// qubits in the order `[E, X_b, E, X_b X_c, E, X_b, E, X_b X_c]`. Every
/// coupling touching `b` or `c` changes sign for half the time and cancels;
/// the outer pair accumulates `Θ = π/4`.
fn recouple_steps(blocks: &[[usize; 4]], j_target: f64, b: f64) -> Result<Vec<ScheduleStep>, SequenceError> {
    let t = gate_time(j_target, (blocks[0][0], blocks[0][3]))?;
    let set = |f: &dyn Fn(&[usize; 4]) -> Vec<usize>| blocks.iter().flat_map(f).collect::<Vec<_>>();
    let windows = vec![
        (t / 4.0, vec![]),
        (t / 4.0, set(&|q| vec![q[1]])),
        (t / 4.0, set(&|q| vec![q[2]])),
        (t / 4.0, set(&|q| vec![q[1], q[2]])),
    ];
    let intended: Vec<IntendedCoupling> = blocks
        .iter()
        .map(|q| IntendedCoupling { pair: [q[0], q[3]], j_rad_per_s: j_target })
        .collect();
    Ok(framed_windows(&windows, b, &intended))
}

/// Simultaneous `π/4` phases on the outer pair `(a, d)` and the inner pair
/// `(b, c)` of each block, every other block coupling cancelled. Windows
/// `x, x, |z|, |z|` with `x = (T_ad + T_bc)/4`, `z = (T_ad − T_bc)/4` and
/// `T = π/(2J)`; frames `∅, {b,c}` then `{c}, {b}` when `z ≥ 0` or
/// `{a}, {d}` when `z < 0`.
fn merge_steps(
    blocks: &[[usize; 4]],
    j_ad: f64,
    j_bc: f64,
    b: f64,
) -> Result<Vec<ScheduleStep>, SequenceError> {
    let t_ad = gate_time(j_ad, (blocks[0][0], blocks[0][3]))?;
    let t_bc = gate_time(j_bc, (blocks[0][1], blocks[0][2]))?;
    let x = 0.25 * (t_ad + t_bc);
    let z = 0.25 * (t_ad - t_bc);
    let set = |f: &dyn Fn(&[usize; 4]) -> Vec<usize>| blocks.iter().flat_map(f).collect::<Vec<_>>();
    let (third, fourth) = if z >= 0.0 {
        (set(&|q| vec![q[2]]), set(&|q| vec![q[1]]))
    } else {
        (set(&|q| vec![q[0]]), set(&|q| vec![q[3]]))
    };
    let windows = vec![
        (x, vec![]),
        (x, set(&|q| vec![q[1], q[2]])),
        (z.abs(), third),
        (z.abs(), fourth),
    ];
    let intended: Vec<IntendedCoupling> = blocks
        .iter()
        .flat_map(|q| {
            [
                IntendedCoupling { pair: [q[0], q[3]], j_rad_per_s: j_ad },
                IntendedCoupling { pair: [q[1], q[2]], j_rad_per_s: j_bc },
            ]
        })
        .collect();
    Ok(framed_windows(&windows, b, &intended))
}

/// Selective-recoupling fragment entangling the outer qubits of `block`.
/// `j_block` holds the block's couplings in local indices `0..4`.
pub fn recoupling_fragment(
    block: Range<usize>,
    j_block: &CouplingMatrix,
    b: f64,
) -> Result<Vec<ScheduleStep>, SequenceError> {
    let q = block_of(&block)?;
    let j = local_coupling(j_block, 0, 3)?;
    if j == 0.0 {
        return Err(SequenceError::ZeroCoupling(q[0], q[3]));
    }
    recouple_steps(&[q], j, b)
}

/// Fragment entangling the outer pair and the inner pair of `block` at once.
pub fn merge_fragment(
    block: Range<usize>,
    j_block: &CouplingMatrix,
    b: f64,
) -> Result<Vec<ScheduleStep>, SequenceError> {
    let q = block_of(&block)?;
    let j_ad = local_coupling(j_block, 0, 3)?;
    let j_bc = local_coupling(j_block, 1, 2)?;
    merge_steps(&[q], j_ad, j_bc, b)
}

enum Plan {
    Pairs(Vec<(usize, usize)>),
    Recouple(Vec<[usize; 4]>),
    Merge(Vec<[usize; 4]>),
}

struct StageLayout {
    label: String,
    map: Vec<usize>,
    plan: Plan,
}

/// Well maps for `k` blocks of eight ions. Block `β` uses wells from
/// `8β + 1`; a trailing merge stage joins neighbouring blocks through ions
/// `8β + 6 … 8β + 9` in a single well.
fn stage_layouts(k: usize) -> Vec<StageLayout> {
    let n = 8 * k;
    let per_block = |f: &dyn Fn(usize) -> usize| -> Vec<usize> {
        (0..n).map(|ion| 8 * (ion / 8) + 1 + f(ion % 8)).collect()
    };
    let mut out = Vec::new();

    let pairs1: Vec<(usize, usize)> = (0..n).step_by(2).map(|i| (i, i + 1)).collect();
    out.push(StageLayout {
        label: "pair wells: ions (0,1), (2,3), ... share a well".into(),
        map: per_block(&|i| i / 2),
        plan: Plan::Pairs(pairs1),
    });

    let pairs2: Vec<(usize, usize)> = (0..k)
        .flat_map(|b| [(1, 2), (3, 4), (5, 6)].map(|(x, y)| (8 * b + x, 8 * b + y)))
        .collect();
    out.push(StageLayout {
        label: "re-paired wells: ions (1,2), (3,4), (5,6) share a well, ends single".into(),
        map: per_block(&|i| match i {
            0 => 0,
            7 => 4,
            _ => 1 + (i - 1) / 2,
        }),
        plan: Plan::Pairs(pairs2),
    });

    for s in [0usize, 2, 4] {
        let blocks: Vec<[usize; 4]> = (0..k)
            .map(|b| {
                let f = 8 * b + s;
                [f, f + 1, f + 2, f + 3]
            })
            .collect();
        out.push(StageLayout {
            label: format!("four-ion wells at block offset {s}: entangle ions {s} and {}", s + 3),
            map: per_block(&move |i| {
                if i < s {
                    i
                } else if i < s + 4 {
                    s
                } else {
                    i - 3
                }
            }),
            plan: Plan::Recouple(blocks),
        });
    }

    if k > 1 {
        let blocks: Vec<[usize; 4]> = (0..k - 1)
            .map(|b| {
                let f = 8 * b + 6;
                [f, f + 1, f + 2, f + 3]
            })
            .collect();
        let mut map = Vec::with_capacity(n);
        let mut well = 1;
        let mut ion = 0;
        while ion < n {
            if blocks.iter().any(|q| q[0] == ion) {
                map.extend([well; 4]);
                ion += 4;
            } else {
                map.push(well);
                ion += 1;
            }
            well += 1;
        }
        out.push(StageLayout {
            label: "merge: ions 8b+6 ... 8b+9 share a well between neighbouring blocks".into(),
            map,
            plan: Plan::Merge(blocks),
        });
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Compiles the staged transport schedule for an `rows × 2` cluster.
///
/// `rows` must be a positive multiple of 4. Each block of eight ions runs
/// the five stages (two pairing stages, three recoupling stages) in
/// parallel with the other blocks; for more than one block a final stage
/// merges neighbouring blocks. Gate durations are set from couplings
/// computed for each stage's well assignment; where parallel gates differ
/// slightly, their mean sets the shared duration and is recorded as the
/// intended coupling.
pub fn build_2d_schedule(
    rows: usize,
    library: &TrapLibrary,
    qubit: &QubitSpec,
    options: &CompileOptions,
) -> Result<PulseSchedule, SequenceError> {
    if rows == 0 || rows % 4 != 0 {
        return Err(SequenceError::Layout(format!("rows must be a positive multiple of 4, got {rows}")));
    }
    let n = 2 * rows;
    let catalog = library.get(&options.catalog)?;
    let potential = catalog.potential()?;
    let field = MagneticField::gradient(options.gradient)?;
    let b = options.gradient;

    let mut steps = Vec::new();
    let mut stages = Vec::new();
    for (index, layout) in stage_layouts(rows / 4).into_iter().enumerate() {
        if let Some(&w) = layout.map.iter().max() {
            if w >= catalog.wells.len() {
                return Err(SequenceError::Layout(format!(
                    "stage {} needs {} wells, catalog `{}` has {}",
                    index + 1,
                    w + 1,
                    options.catalog,
                    catalog.wells.len()
                )));
            }
        }
        let j = crystal_couplings(&potential, qubit, &field, n, Some(&layout.map))?;
        let first = steps.len();
        if index > 0 {
            steps.push(ScheduleStep::Transport { duration_s: options.transport_duration });
        }
        steps.push(ScheduleStep::AssignWells { catalog: options.catalog.clone(), map: layout.map });
        steps.push(ScheduleStep::RampMetadata { duration_s: options.ramp_duration });
        match layout.plan {
            Plan::Pairs(pairs) => {
                let js: Vec<f64> = pairs.iter().map(|&(a, c)| j.get(a, c)).collect();
                let jbar = mean(&js);
                let t = gate_time(jbar, pairs[0])?;
                steps.push(ScheduleStep::GradientWindow {
                    b_t_per_m: b,
                    duration_s: t,
                    intended: pairs
                        .iter()
                        .map(|&(a, c)| IntendedCoupling { pair: [a, c], j_rad_per_s: jbar })
                        .collect(),
                });
            }
            Plan::Recouple(blocks) => {
                let js: Vec<f64> = blocks.iter().map(|q| j.get(q[0], q[3])).collect();
                steps.extend(recouple_steps(&blocks, mean(&js), b)?);
            }
            Plan::Merge(blocks) => {
                let ad: Vec<f64> = blocks.iter().map(|q| j.get(q[0], q[3])).collect();
                let bc: Vec<f64> = blocks.iter().map(|q| j.get(q[1], q[2])).collect();
                steps.extend(merge_steps(&blocks, mean(&ad), mean(&bc), b)?);
            }
        }
        steps.push(ScheduleStep::RampMetadata { duration_s: options.ramp_duration });
        stages.push(Stage { label: layout.label, first_step: first, step_count: steps.len() - first });
    }

    let target = ladder_graph(rows)?;
    let schedule = PulseSchedule {
        n_qubits: n,
        target_edges: target.edges().iter().map(|&(a, c)| [a, c]).collect(),
        steps,
        stages,
    };
    schedule.lint(Some(library))?;
    Ok(schedule)
}
