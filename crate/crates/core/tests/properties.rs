use std::f64::consts::FRAC_PI_4;

use ioncluster::constants::hz_to_angular;
use ioncluster::coupling::{
    coupling_matrix, coupling_matrix_from_hessian, crystal_couplings, frequency_gradient, periodicity_residual,
    phase_matrix, CouplingMatrix, MagneticField, PhaseMatrix, QubitSpec,
};
use ioncluster::optimizer::{scan_duration, search, PeriodicSearchProblem};
use ioncluster::potentials::Well;
use ioncluster::sequences::{recoupling_fragment, signed_time_matrix};
use ioncluster::spins::{apply_degree_corrections, fidelity, graph_state, plus_state};
use ioncluster::statics::crystal_modes;
use ioncluster::{hessian, AxialPotential, GraphSpec, IonSpecies, QuantumState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn global_j(n: usize, nu_hz: f64, b: f64) -> DMatrix<f64> {
    let p = AxialPotential::global_harmonic(hz_to_angular(nu_hz)).unwrap();
    crystal_couplings(&p, &QubitSpec::yb171(), &MagneticField::gradient(b).unwrap(), n, None).unwrap().j
}

fn max_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax();
    (a - b).amax() / scale
}

fn random_theta(n: usize, values: &[f64]) -> PhaseMatrix {
    let mut t = PhaseMatrix::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            t.set(i, j, values[k % values.len()]);
            k += 1;
        }
    }
    t
}

fn random_state(n: usize, seed: &[f64]) -> QuantumState {
    let amps = (0..1usize << n)
        .map(|x| Complex64::new(seed[x % seed.len()] + 0.1 * x as f64, seed[(x + 1) % seed.len()]))
        .collect();
    QuantumState::from_amplitudes(amps).unwrap()
}

fn graph_from_mask(n: usize, mask: u32) -> GraphSpec {
    let mut edges = Vec::new();
    let mut bit = 0;
    for a in 0..n {
        for b in a + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((a, b));
            }
            bit += 1;
        }
    }
    GraphSpec::new(n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn couplings_scale_with_gradient_and_trap(n in 2usize..7, nu in 80e3f64..400e3, b in 10.0f64..200.0) {
        let base = global_j(n, nu, b);
        prop_assert!(max_rel(&global_j(n, nu, 2.0 * b), &(base.clone() * 4.0)) < 1e-6);
        prop_assert!(max_rel(&global_j(n, 2.0 * nu, b), &(base * 0.25)) < 1e-6);
    }

    #[test]
    fn mode_sum_equals_inverse_hessian(
        n in 2usize..6,
        freqs in prop::collection::vec(150e3f64..600e3, 6),
        spacing in 4e-6f64..30e-6,
        global in 50e3f64..300e3,
    ) {
        let wells = (0..n)
            .map(|i| Well { center: (i as f64 - 0.5 * (n - 1) as f64) * spacing, omega: hz_to_angular(freqs[i]) })
            .collect();
        let p = AxialPotential::superposed(vec![
            AxialPotential::global_harmonic(hz_to_angular(global)).unwrap(),
            AxialPotential::individual_wells(wells).unwrap(),
        ]).unwrap();
        let map: Vec<usize> = (0..n).collect();
        let c = ioncluster::statics::solve_equilibrium_with(
            &p, &IonSpecies::yb171(), n, Some(&map), None, &Default::default(),
        ).unwrap();
        let modes = crystal_modes(&c).unwrap();
        let eps = vec![frequency_gradient(&QubitSpec::yb171(), &MagneticField::gradient(100.0).unwrap()); n];
        let a = coupling_matrix(&modes, &eps).unwrap();
        let b = coupling_matrix_from_hessian(&hessian(&c).unwrap(), &eps).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert!((a.get(i, j) - b.get(i, j)).abs() <= 1e-10 * b.get(i, j).abs().max(1e-12 * b.j.amax()));
                }
            }
        }
    }

    #[test]
    fn operations_preserve_norm(n in 1usize..6, seed in prop::collection::vec(-1.0f64..1.0, 8), angles in prop::collection::vec(-7.0f64..7.0, 15)) {
        let mut s = random_state(n, &seed);
        s.apply_phase_evolution(&random_theta(n, &angles)).unwrap();
        for k in 0..n {
            s.apply_pauli_x(k).unwrap();
            s.apply_local_z_rotation(k, angles[k]).unwrap();
            s.apply_hadamard(k).unwrap();
        }
        prop_assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_evolutions_commute(n in 2usize..6, a in prop::collection::vec(-7.0f64..7.0, 15), b in prop::collection::vec(-7.0f64..7.0, 15)) {
        let (ta, tb) = (random_theta(n, &a), random_theta(n, &b));
        let mut s1 = plus_state(n).unwrap();
        s1.apply_local_z_rotation(0, 0.3).unwrap();
        let mut s2 = s1.clone();
        s1.apply_phase_evolution(&ta).unwrap();
        s1.apply_phase_evolution(&tb).unwrap();
        s2.apply_phase_evolution(&tb).unwrap();
        s2.apply_phase_evolution(&ta).unwrap();
        for (x, y) in s1.amplitudes().iter().zip(s2.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn degree_corrections_give_graph_state(n in 1usize..8, mask in any::<u32>()) {
        let g = graph_from_mask(n, mask);
        let mut theta = PhaseMatrix::zeros(n);
        for &(a, b) in g.edges() {
            theta.set(a, b, FRAC_PI_4);
        }
        let mut s = plus_state(n).unwrap();
        s.apply_phase_evolution(&theta).unwrap();
        apply_degree_corrections(&mut s, &g).unwrap();
        prop_assert!(fidelity(&s, &graph_state(&g).unwrap()).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn recoupling_cancels_inner_couplings(vals in prop::collection::vec(100.0f64..5000.0, 6), b in 1.0f64..200.0) {
        let mut j = DMatrix::zeros(4, 4);
        let mut k = 0;
        for r in 0..4 {
            for c in r + 1..4 {
                j[(r, c)] = vals[k];
                j[(c, r)] = vals[k];
                k += 1;
            }
        }
        let steps = recoupling_fragment(0..4, &CouplingMatrix { j: j.clone(), provenance: String::new() }, b).unwrap();
        let t = signed_time_matrix(&steps, 4).unwrap();
        let full = std::f64::consts::PI / (2.0 * j[(0, 3)]);
        prop_assert!((t[(0, 3)] - full).abs() <= 1e-12 * full);
        for (r, c) in [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)] {
            prop_assert!(t[(r, c)].abs() <= 1e-12 * full);
        }
        // Accumulated Θ on the target is π/4 for the scheduled windows.
        let theta = phase_matrix(&CouplingMatrix { j, provenance: String::new() }, full).unwrap();
        prop_assert!((theta.get(0, 3) - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn residual_is_non_negative_and_periodic(vals in prop::collection::vec(-20.0f64..20.0, 6), k in -3i32..4) {
        let g = GraphSpec::path(4);
        let t = random_theta(4, &vals);
        let r = periodicity_residual(&t, g.edges()).unwrap();
        prop_assert!(r >= 0.0);
        let mut shifted = t.clone();
        shifted.set(0, 2, t.get(0, 2) + 2.0 * std::f64::consts::PI * k as f64);
        prop_assert!((periodicity_residual(&shifted, g.edges()).unwrap() - r).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn search_history_is_monotone(seed in any::<u64>(), budget in 1usize..60) {
        let p = PeriodicSearchProblem::triangle_reference(0.2);
        let r = search(&p, seed, budget).unwrap();
        prop_assert!(r.evaluations <= budget);
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(r.history.last().copied(), Some(r.residual));
    }

    #[test]
    fn duration_scan_is_resolution_stable(scale in 0.9f64..1.1) {
        for p in [PeriodicSearchProblem::triangle_reference(0.2), PeriodicSearchProblem::four_ion_path_reference(0.2)] {
            let n = p.wells();
            let map: Vec<usize> = (0..n).collect();
            let mut params = p.incumbents[0].clone();
            params.global_frequency *= scale.clamp(0.81, 1.19);
            let j = crystal_couplings(&p.potential(&params).unwrap(), &p.qubit, &p.field, n, Some(&map)).unwrap().j;
            let (coarse, _) = scan_duration(&j, &p.graph, p.k_max, p.scan_density).unwrap();
            let (fine, _) = scan_duration(&j, &p.graph, p.k_max, 2 * p.scan_density).unwrap();
            prop_assert!((coarse - fine).abs() <= 0.05 * fine.max(1e-6), "{coarse} vs {fine}");
        }
    }
}

#[test]
fn equal_edge_couplings_are_exact_at_quarter_turn() {
    let g = GraphSpec::path(4);
    let mut j = DMatrix::zeros(4, 4);
    for &(a, b) in g.edges() {
        j[(a, b)] = 2000.0;
        j[(b, a)] = 2000.0;
    }
    let (r, t) = scan_duration(&j, &g, 4, 40).unwrap();
    assert!(r < 1e-12);
    let theta = phase_matrix(&CouplingMatrix { j, provenance: String::new() }, t).unwrap();
    let turns = (theta.get(0, 1) - FRAC_PI_4) / (2.0 * std::f64::consts::PI);
    assert!((turns - turns.round()).abs() < 1e-6);
}
