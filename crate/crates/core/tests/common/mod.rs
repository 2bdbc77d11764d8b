//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's solvers.

#![allow(dead_code)]

pub const HBAR: f64 = 1.054_571_817e-34;
pub const MU_B: f64 = 9.274_010_078_3e-24;
pub const E: f64 = 1.602_176_634e-19;
pub const EPS0: f64 = 8.854_187_812_8e-12;
pub const U: f64 = 1.660_539_066_60e-27;
pub const M_YB: f64 = 170.936_325_8 * U;

pub fn coulomb_k() -> f64 {
    E * E / (4.0 * std::f64::consts::PI * EPS0)
}

/// Ion `i` feels `½ m (ω0² z² + ω_i² (z − c_i)²)`.
#[derive(Clone, Debug)]
pub struct Trap {
    pub mass: f64,
    pub omega0: f64,
    /// Per-ion `(centre, ω)`; empty for a purely global trap.
    pub wells: Vec<(f64, f64)>,
}

impl Trap {
    pub fn global(omega0: f64) -> Self {
        Self { mass: M_YB, omega0, wells: Vec::new() }
    }

    fn curvature(&self, i: usize) -> f64 {
        let w = self.wells.get(i).map_or(0.0, |w| w.1);
        self.mass * (self.omega0 * self.omega0 + w * w)
    }

    fn force_free_point(&self, i: usize) -> f64 {
        match self.wells.get(i) {
            Some(&(c, w)) => w * w * c / (self.omega0 * self.omega0 + w * w),
            None => 0.0,
        }
    }
}

/// Gauss–Seidel coordinate minimisation of the chain energy. Each sweep
/// minimises exactly along one coordinate with a bracketed Newton search
/// between its neighbours.
pub fn brute_force_positions(trap: &Trap, n: usize, spread: f64) -> Vec<f64> {
    let k = coulomb_k();
    let mut z: Vec<f64> = if trap.wells.is_empty() {
        (0..n).map(|i| spread * (i as f64 - 0.5 * (n as f64 - 1.0))).collect()
    } else {
        trap.wells.iter().map(|w| w.0).collect()
    };
    for _sweep in 0..200_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let a = trap.curvature(i);
            let z0 = trap.force_free_point(i);
            let slope = |x: f64| -> (f64, f64) {
                let mut g = a * (x - z0);
                let mut h = a;
                for (j, &zj) in z.iter().enumerate() {
                    if j != i {
                        let d = x - zj;
                        g -= k * d.signum() / (d * d);
                        h += 2.0 * k / d.abs().powi(3);
                    }
                }
                (g, h)
            };
            let mut lo = if i > 0 { z[i - 1] } else { f64::NEG_INFINITY };
            let mut hi = if i + 1 < n { z[i + 1] } else { f64::INFINITY };
            let mut x = z[i];
            for _ in 0..200 {
                let (g, h) = slope(x);
                if g > 0.0 {
                    hi = hi.min(x);
                } else {
                    lo = lo.max(x);
                }
                let mut next = x - g / h;
                if !(next > lo && next < hi) {
                    next = if lo.is_finite() && hi.is_finite() {
                        0.5 * (lo + hi)
                    } else if lo.is_finite() {
                        x + (x - lo).abs().max(spread)
                    } else {
                        x - (hi - x).abs().max(spread)
                    };
                }
                if (next - x).abs() <= 4e-16 * x.abs().max(spread) {
                    x = next;
                    break;
                }
                x = next;
            }
            change = change.max((x - z[i]).abs());
            z[i] = x;
        }
        if change <= 1e-15 * spread {
            break;
        }
    }
    z
}

/// Analytic Hessian of the chain energy at `z`.
pub fn hessian(trap: &Trap, z: &[f64]) -> Vec<Vec<f64>> {
    let k = coulomb_k();
    let n = z.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = trap.curvature(i);
        for j in 0..n {
            if i != j {
                let c = 2.0 * k / (z[i] - z[j]).abs().powi(3);
                a[i][i] += c;
                a[i][j] = -c;
            }
        }
    }
    a
}

/// Gauss–Jordan inversion with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    let pivot = a[c].clone();
                    for (v, pv) in a[r].iter_mut().zip(pivot) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `J = (ħ/2) ε² A⁻¹` off the diagonal, `ε = μ_B b / ħ`.
pub fn couplings(trap: &Trap, z: &[f64], b: f64) -> Vec<Vec<f64>> {
    let eps = MU_B * b / HBAR;
    let inv = invert(&hessian(trap, z));
    let n = z.len();
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 0.5 * HBAR * eps * eps * inv[i][j] }).collect())
        .collect()
}

/// Length scale `(k / (m ω²))^{1/3}` of a global harmonic trap.
pub fn length_scale(omega: f64) -> f64 {
    (coulomb_k() / (M_YB * omega * omega)).cbrt()
}
