//! State-vector simulation of ion qubits under Ising phase evolution, local
//! pulses and projective measurement.
//!
//! Bit convention: qubit 0 is the least significant bit of the basis index,
//! and the Z eigenvalue of a qubit is `s = +1` for bit 0 and `s = −1` for
//! bit 1.

mod graph;
mod measure;
mod phase_state;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::PhaseMatrix;

pub use graph::GraphSpec;
pub use measure::{
    measure_qubit, measure_qubit_with_rng, simulate_column_reuse, ColumnReuseRound,
    ColumnReuseTranscript, MeasurementBasis, PauliFrame,
};
pub use phase_state::IsingPhaseState;

/// Largest register held as a dense vector (16384 amplitudes).
pub const MAX_QUBITS: usize = 14;

/// Text stored with every exported state.
pub const BIT_CONVENTION: &str = "qubit 0 is the least significant bit; bit 0 has Z eigenvalue +1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("{n} qubits exceed the capacity of {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("qubit {index} out of range for {n} qubits")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Pure state of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateExport {
    pub n: usize,
    pub bit_convention: String,
    /// `(re, im)` per basis index.
    pub amplitudes: Vec<(f64, f64)>,
}

fn check_capacity(n: usize) -> Result<(), SpinError> {
    if n == 0 {
        return Err(SpinError::InvalidArgument("need at least one qubit".into()));
    }
    if n > MAX_QUBITS {
        return Err(SpinError::Capacity { n, cap: MAX_QUBITS });
    }
    Ok(())
}

/// `|+⟩^⊗n`.
pub fn plus_state(n: usize) -> Result<QuantumState, SpinError> {
    check_capacity(n)?;
    let dim = 1usize << n;
    let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    Ok(QuantumState { n, amplitudes: vec![a; dim] })
}

impl QuantumState {
    /// Computational basis state `|index⟩`.
    pub fn basis_state(n: usize, index: usize) -> Result<Self, SpinError> {
        check_capacity(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(SpinError::IndexOutOfRange { index, n });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// Wraps amplitudes after normalising them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SpinError> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(SpinError::InvalidArgument(format!("{dim} is not a register dimension")));
        }
        let n = dim.trailing_zeros() as usize;
        check_capacity(n)?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(SpinError::InvalidArgument("amplitudes must have finite, non-zero norm".into()));
        }
        Ok(Self { n, amplitudes: amplitudes.into_iter().map(|a| a / norm).collect() })
    }

    /// Tensor product with `self` on the low bits.
    pub fn tensor(&self, high: &QuantumState) -> Result<QuantumState, SpinError> {
        let n = self.n + high.n;
        check_capacity(n)?;
        let mut amplitudes = Vec::with_capacity(1 << n);
        for h in &high.amplitudes {
            for l in &self.amplitudes {
                amplitudes.push(l * h);
            }
        }
        Ok(QuantumState { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_index(&self, k: usize) -> Result<(), SpinError> {
        if k >= self.n {
            return Err(SpinError::IndexOutOfRange { index: k, n: self.n });
        }
        Ok(())
    }

    /// Multiplies `|x⟩` by `exp(i Σ_{i<j} Θ_ij s_i s_j)`.
    pub fn apply_phase_evolution(&mut self, theta: &PhaseMatrix) -> Result<(), SpinError> {
        if theta.len() != self.n {
            return Err(SpinError::DimensionMismatch { expected: self.n, got: theta.len() });
        }
        let pairs: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, theta.get(i, j)))
            .filter(|&(_, _, t)| t != 0.0)
            .collect();
        for (x, a) in self.amplitudes.iter_mut().enumerate() {
            let mut phase = 0.0;
            for &(i, j, t) in &pairs {
                // s_i s_j = +1 when the bits agree.
                if ((x >> i) ^ (x >> j)) & 1 == 0 {
                    phase += t;
                } else {
                    phase -= t;
                }
            }
            *a *= Complex64::from_polar(1.0, phase);
        }
        Ok(())
    }

    pub fn apply_pauli_x(&mut self, k: usize) -> Result<(), SpinError> {
        self.check_index(k)?;
        let bit = 1usize << k;
        for x in 0..self.amplitudes.len() {
            if x & bit == 0 {
                self.amplitudes.swap(x, x | bit);
            }
        }
        Ok(())
    }

    /// Multiplies amplitudes by `exp(i θ s_k)`.
    pub fn apply_local_z_rotation(&mut self, k: usize, angle: f64) -> Result<(), SpinError> {
        self.check_index(k)?;
        let plus = Complex64::from_polar(1.0, angle);
        let minus = plus.conj();
        let bit = 1usize << k;
        for (x, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if x & bit == 0 { plus } else { minus };
        }
        Ok(())
    }

    pub fn apply_hadamard(&mut self, k: usize) -> Result<(), SpinError> {
        self.check_index(k)?;
        let bit = 1usize << k;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for x in 0..self.amplitudes.len() {
            if x & bit == 0 {
                let (a, b) = (self.amplitudes[x], self.amplitudes[x | bit]);
                self.amplitudes[x] = (a + b) * r;
                self.amplitudes[x | bit] = (a - b) * r;
            }
        }
        Ok(())
    }

    /// Multiplies the `|1⟩` component of qubit `k` by `e^{iφ}`.
    pub fn apply_phase_gate(&mut self, k: usize, phi: f64) -> Result<(), SpinError> {
        self.check_index(k)?;
        let bit = 1usize << k;
        let p = Complex64::from_polar(1.0, phi);
        for (x, a) in self.amplitudes.iter_mut().enumerate() {
            if x & bit != 0 {
                *a *= p;
            }
        }
        Ok(())
    }

    pub fn apply_pauli_z(&mut self, k: usize) -> Result<(), SpinError> {
        self.apply_phase_gate(k, std::f64::consts::PI)
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<(), SpinError> {
        self.check_index(a)?;
        self.check_index(b)?;
        if a == b {
            return Err(SpinError::InvalidArgument("CZ needs two distinct qubits".into()));
        }
        let mask = (1usize << a) | (1usize << b);
        for (x, amp) in self.amplitudes.iter_mut().enumerate() {
            if x & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Applies `⟨bra|` to qubit `k`, removing it from the register, and
    /// renormalises. Errors if the result vanishes.
    pub fn contract_qubit(&self, k: usize, bra: [Complex64; 2]) -> Result<QuantumState, SpinError> {
        self.check_index(k)?;
        if self.n == 1 {
            return Err(SpinError::InvalidArgument("cannot remove the last qubit".into()));
        }
        let low = (1usize << k) - 1;
        let dim = 1usize << (self.n - 1);
        let mut out = Vec::with_capacity(dim);
        for y in 0..dim {
            let x0 = (y & low) | ((y & !low) << 1);
            let x1 = x0 | (1 << k);
            out.push(bra[0].conj() * self.amplitudes[x0] + bra[1].conj() * self.amplitudes[x1]);
        }
        let norm = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-300) {
            return Err(SpinError::InvalidArgument("projection has zero probability".into()));
        }
        Ok(QuantumState { n: self.n - 1, amplitudes: out.into_iter().map(|a| a / norm).collect() })
    }

    pub fn export(&self) -> StateExport {
        StateExport {
            n: self.n,
            bit_convention: BIT_CONVENTION.to_string(),
            amplitudes: self.amplitudes.iter().map(|a| (a.re, a.im)).collect(),
        }
    }
}

/// `Π_{(a,b)∈E} CZ_ab |+⟩^⊗n`.
pub fn graph_state(graph: &GraphSpec) -> Result<QuantumState, SpinError> {
    let mut s = plus_state(graph.n())?;
    for &(a, b) in graph.edges() {
        s.apply_cz(a, b)?;
    }
    Ok(s)
}

/// `⟨K_a⟩` with `K_a = X_a Π_{b∈N(a)} Z_b`.
pub fn stabilizer_expectations(state: &QuantumState, graph: &GraphSpec) -> Result<Vec<f64>, SpinError> {
    if graph.n() != state.n {
        return Err(SpinError::DimensionMismatch { expected: state.n, got: graph.n() });
    }
    let mut out = Vec::with_capacity(state.n);
    for a in 0..state.n {
        let zmask: usize = graph.neighbours(a).iter().map(|&b| 1usize << b).sum();
        let bit = 1usize << a;
        let mut e = Complex64::new(0.0, 0.0);
        for (x, amp) in state.amplitudes.iter().enumerate() {
            let sign = if (x & zmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            e += state.amplitudes[x ^ bit].conj() * amp * sign;
        }
        out.push(e.re);
    }
    Ok(out)
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64, SpinError> {
    if a.n != b.n {
        return Err(SpinError::DimensionMismatch { expected: a.n, got: b.n });
    }
    let overlap: Complex64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
    Ok(overlap.norm_sqr().min(1.0))
}

/// Applies `exp(−i deg(a) π/4 s_a)` to every vertex, turning `π/4` Ising
/// evolution on the edges of `graph` into `Π CZ` up to a global phase.
pub fn apply_degree_corrections(state: &mut QuantumState, graph: &GraphSpec) -> Result<(), SpinError> {
    if graph.n() != state.n {
        return Err(SpinError::DimensionMismatch { expected: state.n, got: graph.n() });
    }
    for a in 0..state.n {
        let deg = graph.degree(a);
        if deg > 0 {
            state.apply_local_z_rotation(a, -(deg as f64) * std::f64::consts::FRAC_PI_4)?;
        }
    }
    Ok(())
}
