//! Projective measurement and the two-column reuse protocol.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use super::{apply_degree_corrections, plus_state, GraphSpec, QuantumState, SpinError};
use crate::coupling::PhaseMatrix;

/// Outcome `+1` corresponds to `|0⟩` for Z and to
/// `|b+(θ)⟩ = (|0⟩ + e^{iθ}|1⟩)/√2` for an equatorial angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementBasis {
    X,
    Y,
    Z,
    /// Equatorial basis at angle θ (radians) from X towards Y.
    Angle(f64),
}

impl MeasurementBasis {
    /// `(b+, b−)` as kets.
    pub fn vectors(self) -> [[Complex64; 2]; 2] {
        let equatorial = |theta: f64| {
            let e = Complex64::from_polar(FRAC_1_SQRT_2, theta);
            let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
            [[r, e], [r, -e]]
        };
        match self {
            MeasurementBasis::Z => {
                let one = Complex64::new(1.0, 0.0);
                let zero = Complex64::new(0.0, 0.0);
                [[one, zero], [zero, one]]
            }
            MeasurementBasis::X => equatorial(0.0),
            MeasurementBasis::Y => equatorial(FRAC_PI_2),
            MeasurementBasis::Angle(t) => equatorial(t),
        }
    }
}

/// Seeded measurement of qubit `k`; returns the outcome `±1` and the
/// collapsed, renormalised state (qubit `k` stays in the register).
pub fn measure_qubit(
    state: &QuantumState,
    k: usize,
    basis: MeasurementBasis,
    rng_seed: u64,
) -> Result<(i8, QuantumState), SpinError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    measure_qubit_with_rng(state, k, basis, &mut rng)
}

pub fn measure_qubit_with_rng<R: Rng + ?Sized>(
    state: &QuantumState,
    k: usize,
    basis: MeasurementBasis,
    rng: &mut R,
) -> Result<(i8, QuantumState), SpinError> {
    state.check_index(k)?;
    let [plus, minus] = basis.vectors();
    let p_plus = probability(state, k, plus);
    let outcome: i8 = if rng.random::<f64>() < p_plus { 1 } else { -1 };
    let v = if outcome == 1 { plus } else { minus };
    let bit = 1usize << k;
    let mut amps = state.amplitudes.clone();
    for x in 0..amps.len() {
        if x & bit == 0 {
            let c = v[0].conj() * amps[x] + v[1].conj() * amps[x | bit];
            amps[x] = v[0] * c;
            amps[x | bit] = v[1] * c;
        }
    }
    Ok((outcome, QuantumState::from_amplitudes(amps)?))
}

fn probability(state: &QuantumState, k: usize, ket: [Complex64; 2]) -> f64 {
    let bit = 1usize << k;
    let a = &state.amplitudes;
    (0..a.len())
        .filter(|x| x & bit == 0)
        .map(|x| (ket[0].conj() * a[x] + ket[1].conj() * a[x | bit]).norm_sqr())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Pauli byproduct: the physical column equals `Π X^x Z^z` applied to the
/// ideal one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliFrame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl PauliFrame {
    pub fn identity(n: usize) -> Self {
        Self { x: vec![false; n], z: vec![false; n] }
    }

    /// Removes the byproduct (up to a global phase).
    pub fn undo(&self, state: &mut QuantumState) -> Result<(), SpinError> {
        for (r, (&x, &z)) in self.x.iter().zip(&self.z).enumerate() {
            if x {
                state.apply_pauli_x(r)?;
            }
            if z {
                state.apply_pauli_z(r)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnReuseRound {
    pub requested_angles: Vec<f64>,
    /// Angles actually used; sign-adapted to the frame in adaptive mode.
    pub measured_angles: Vec<f64>,
    pub outcomes: Vec<i8>,
    /// Frame after this round.
    pub frame: PauliFrame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReuseTranscript {
    pub rounds: Vec<ColumnReuseRound>,
    /// Physical state of the surviving column.
    pub final_state: QuantumState,
    pub frame: PauliFrame,
    /// `final_state` with the frame removed. In adaptive mode this equals
    /// the ideal logical output for every outcome record.
    pub corrected_state: QuantumState,
    pub adaptive: bool,
}

/// Simulates an `n_rows × (columns.len() + 1)` cluster with two physical
/// columns.
///
/// Each round appends a fresh `|+⟩` column, entangles it with the data
/// column (horizontal bonds) and along itself (vertical bonds) through
/// `π/4` Ising evolution plus degree corrections, then measures the data
/// column at the round's angles and discards it. The logical map per round
/// is `CZ_vertical · ⊗_r H diag(1, e^{−iθ_r})`.
///
/// In adaptive mode a row carrying an X byproduct is measured at `−θ`, which
/// keeps the byproduct Pauli; in non-adaptive mode the requested angles are
/// used verbatim, as in a direct measurement of the full cluster.
pub fn simulate_column_reuse(
    input: &QuantumState,
    columns: &[Vec<f64>],
    rng_seed: u64,
    adaptive: bool,
) -> Result<ColumnReuseTranscript, SpinError> {
    let n = input.n();
    if 2 * n > super::MAX_QUBITS {
        return Err(SpinError::Capacity { n: 2 * n, cap: super::MAX_QUBITS });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut data = input.clone();
    let mut frame = PauliFrame::identity(n);
    let mut rounds = Vec::with_capacity(columns.len());

    let mut edges: Vec<(usize, usize)> = (0..n).map(|r| (r, n + r)).collect();
    edges.extend((1..n).map(|r| (n + r - 1, n + r)));
    let bonds = GraphSpec::new(2 * n, edges)?;
    let mut theta = PhaseMatrix::zeros(2 * n);
    for &(a, b) in bonds.edges() {
        theta.set(a, b, FRAC_PI_4);
    }

    for angles in columns {
        if angles.len() != n {
            return Err(SpinError::DimensionMismatch { expected: n, got: angles.len() });
        }
        let mut joint = data.tensor(&plus_state(n)?)?;
        joint.apply_phase_evolution(&theta)?;
        apply_degree_corrections(&mut joint, &bonds)?;

        let mut measured = Vec::with_capacity(n);
        let mut outcomes = Vec::with_capacity(n);
        for r in 0..n {
            let angle = if adaptive && frame.x[r] { -angles[r] } else { angles[r] };
            // Earlier rows were contracted away, so row r is now qubit 0.
            let (o, collapsed) =
                measure_qubit_with_rng(&joint, 0, MeasurementBasis::Angle(angle), &mut rng)?;
            let [plus, minus] = MeasurementBasis::Angle(angle).vectors();
            joint = collapsed.contract_qubit(0, if o == 1 { plus } else { minus })?;
            measured.push(angle);
            outcomes.push(o);
        }

        let m: Vec<bool> = (0..n).map(|r| (outcomes[r] == -1) ^ frame.z[r]).collect();
        let z_next: Vec<bool> = (0..n)
            .map(|r| {
                let up = r > 0 && m[r - 1];
                let down = r + 1 < n && m[r + 1];
                frame.x[r] ^ up ^ down
            })
            .collect();
        frame = PauliFrame { x: m, z: z_next };
        rounds.push(ColumnReuseRound {
            requested_angles: angles.clone(),
            measured_angles: measured,
            outcomes,
            frame: frame.clone(),
        });
        data = joint;
    }

    let mut corrected = data.clone();
    frame.undo(&mut corrected)?;
    Ok(ColumnReuseTranscript { rounds, final_state: data, frame, corrected_state: corrected, adaptive })
}
