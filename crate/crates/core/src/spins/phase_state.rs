//! States of the form `exp(i Σ Θ_ij s_i s_j + i Σ h_a s_a) |+⟩^⊗n`.
//!
//! Ising evolution, local Z rotations and X pulses keep a state in this
//! family, so a transport schedule can be followed for registers larger than
//! the dense cap. An X pulse on qubit `k` flips the sign of every phase term
//! containing `s_k`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{GraphSpec, QuantumState, SpinError};
use crate::coupling::PhaseMatrix;

/// Largest register for which [`IsingPhaseState::fidelity_to_graph_state`]
/// enumerates all basis states.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct IsingPhaseState {
    theta: DMatrix<f64>,
    h: Vec<f64>,
}

impl IsingPhaseState {
    pub fn plus(n: usize) -> Result<Self, SpinError> {
        if n == 0 {
            return Err(SpinError::InvalidArgument("need at least one qubit".into()));
        }
        Ok(Self { theta: DMatrix::zeros(n, n), h: vec![0.0; n] })
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// Accumulated pair phases (symmetric, zero diagonal).
    pub fn pair_phases(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn local_phases(&self) -> &[f64] {
        &self.h
    }

    pub fn apply_phase_evolution(&mut self, theta: &PhaseMatrix) -> Result<(), SpinError> {
        if theta.len() != self.n() {
            return Err(SpinError::DimensionMismatch { expected: self.n(), got: theta.len() });
        }
        for i in 0..self.n() {
            for j in 0..self.n() {
                if i != j {
                    self.theta[(i, j)] += theta.get(i, j);
                }
            }
        }
        Ok(())
    }

    pub fn apply_local_z_rotation(&mut self, k: usize, angle: f64) -> Result<(), SpinError> {
        self.check(k)?;
        self.h[k] += angle;
        Ok(())
    }

    /// `X_k` up to a global phase.
    pub fn apply_pauli_x(&mut self, k: usize) -> Result<(), SpinError> {
        self.check(k)?;
        self.h[k] = -self.h[k];
        for j in 0..self.n() {
            if j != k {
                self.theta[(k, j)] = -self.theta[(k, j)];
                self.theta[(j, k)] = -self.theta[(j, k)];
            }
        }
        Ok(())
    }

    fn check(&self, k: usize) -> Result<(), SpinError> {
        if k >= self.n() {
            return Err(SpinError::IndexOutOfRange { index: k, n: self.n() });
        }
        Ok(())
    }

    /// Closed form of `⟨K_a⟩`:
    /// `½ Σ_{s_a} e^{2i s_a h_a} Π_{c∉N(a)} cos 2Θ_ac Π_{c∈N(a)} i s_a sin 2Θ_ac`.
    pub fn stabilizer_expectations(&self, graph: &GraphSpec) -> Result<Vec<f64>, SpinError> {
        let n = self.n();
        if graph.n() != n {
            return Err(SpinError::DimensionMismatch { expected: n, got: graph.n() });
        }
        let mut out = Vec::with_capacity(n);
        for a in 0..n {
            let mut total = Complex64::new(0.0, 0.0);
            for sa in [1.0, -1.0] {
                let mut term = Complex64::from_polar(1.0, 2.0 * sa * self.h[a]);
                for c in 0..n {
                    if c == a {
                        continue;
                    }
                    let t = 2.0 * self.theta[(a, c)];
                    term *= if graph.has_edge(a, c) {
                        Complex64::new(0.0, sa * t.sin())
                    } else {
                        Complex64::new(t.cos(), 0.0)
                    };
                }
                total += term;
            }
            out.push(0.5 * total.re);
        }
        Ok(out)
    }

    fn phase_of(&self, x: usize) -> f64 {
        let n = self.n();
        let s = |k: usize| if (x >> k) & 1 == 0 { 1.0 } else { -1.0 };
        let mut phi = 0.0;
        for i in 0..n {
            let si = s(i);
            phi += self.h[i] * si;
            for j in i + 1..n {
                phi += self.theta[(i, j)] * si * s(j);
            }
        }
        phi
    }

    /// `|⟨G|ψ⟩|²` by enumeration of all `2^n` basis states.
    pub fn fidelity_to_graph_state(&self, graph: &GraphSpec) -> Result<f64, SpinError> {
        let n = self.n();
        if graph.n() != n {
            return Err(SpinError::DimensionMismatch { expected: n, got: graph.n() });
        }
        if n > ENUMERATION_LIMIT {
            return Err(SpinError::Capacity { n, cap: ENUMERATION_LIMIT });
        }
        let masks: Vec<usize> = graph.edges().iter().map(|&(a, b)| (1 << a) | (1 << b)).collect();
        let mut overlap = Complex64::new(0.0, 0.0);
        for x in 0..1usize << n {
            let parity = masks.iter().filter(|&&m| x & m == m).count() % 2;
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            overlap += Complex64::from_polar(sign, self.phase_of(x));
        }
        let norm = (1usize << n) as f64;
        Ok((overlap.norm_sqr() / (norm * norm)).min(1.0))
    }

    /// Dense copy; only for registers within the dense cap.
    pub fn to_dense(&self) -> Result<QuantumState, SpinError> {
        let n = self.n();
        if n > super::MAX_QUBITS {
            return Err(SpinError::Capacity { n, cap: super::MAX_QUBITS });
        }
        let a = ((1usize << n) as f64).sqrt().recip();
        QuantumState::from_amplitudes(
            (0..1usize << n).map(|x| Complex64::from_polar(a, self.phase_of(x))).collect(),
        )
    }
}
