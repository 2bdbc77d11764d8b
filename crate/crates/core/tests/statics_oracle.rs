mod common;

use common::{brute_force_positions, length_scale, Trap};
use ioncluster::constants::hz_to_angular;
use ioncluster::coupling::{crystal_couplings, MagneticField, QubitSpec};
use ioncluster::potentials::Well;
use ioncluster::statics::crystal_modes;
use ioncluster::{solve_equilibrium, AxialPotential, IonSpecies};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn two_and_three_ions_match_closed_form() {
    let nu = hz_to_angular(200e3);
    let l = length_scale(nu);
    let p = AxialPotential::global_harmonic(nu).unwrap();

    let c2 = solve_equilibrium(&p, &IonSpecies::yb171(), 2, None).unwrap();
    let a2 = 0.25f64.cbrt() * l;
    assert!(rel(c2.positions[1], a2) < 1e-9 && rel(-c2.positions[0], a2) < 1e-9);
    let m2 = crystal_modes(&c2).unwrap();
    assert!(rel(m2.frequencies[0], nu) < 1e-9);
    assert!(rel(m2.frequencies[1], 3f64.sqrt() * nu) < 1e-9);

    let c3 = solve_equilibrium(&p, &IonSpecies::yb171(), 3, None).unwrap();
    let a3 = 1.25f64.cbrt() * l;
    assert!(c3.positions[1].abs() < 1e-9 * a3);
    assert!(rel(c3.positions[2], a3) < 1e-9);
    let m3 = crystal_modes(&c3).unwrap();
    for (f, r) in m3.frequencies.iter().zip([1.0, 3f64.sqrt(), (29.0f64 / 5.0).sqrt()]) {
        assert!(rel(*f, r * nu) < 1e-9, "{f} vs {}", r * nu);
    }
}

#[test]
fn longer_chains_match_coordinate_descent() {
    let nu = hz_to_angular(200e3);
    let l = length_scale(nu);
    let p = AxialPotential::global_harmonic(nu).unwrap();
    for n in 4..=8 {
        let ours = solve_equilibrium(&p, &IonSpecies::yb171(), n, None).unwrap();
        let oracle = brute_force_positions(&Trap::global(nu), n, l);
        for (a, b) in ours.positions.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-7 * b.abs().max(0.1 * l), "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn eight_ion_couplings_match_direct_inversion() {
    let nu = hz_to_angular(200e3);
    let p = AxialPotential::global_harmonic(nu).unwrap();
    let field = MagneticField::gradient(100.0).unwrap();
    let ours = crystal_couplings(&p, &QubitSpec::yb171(), &field, 8, None).unwrap();
    let trap = Trap::global(nu);
    let z = brute_force_positions(&trap, 8, length_scale(nu));
    let oracle = common::couplings(&trap, &z, 100.0);
    for i in 0..8 {
        for j in 0..8 {
            if i != j {
                assert!(rel(ours.get(i, j), oracle[i][j]) < 1e-7, "({i},{j})");
            }
        }
    }
    // Nearest-neighbour couplings are largest at the chain ends and
    // smallest in the middle.
    let nn: Vec<f64> = (0..7).map(|i| ours.get(i, i + 1)).collect();
    assert!(nn[0] > nn[1] && nn[1] > nn[2] && nn[2] > nn[3]);
    for i in 0..7 {
        assert!(rel(nn[i], nn[6 - i]) < 1e-9);
    }
}

#[test]
fn individual_wells_match_coordinate_descent() {
    let wells = [(-30e-6, 400e3), (-8e-6, 250e3), (12e-6, 300e3), (35e-6, 500e3)];
    let global = hz_to_angular(150e3);
    let potential = AxialPotential::superposed(vec![
        AxialPotential::global_harmonic(global).unwrap(),
        AxialPotential::individual_wells(
            wells.iter().map(|&(c, f)| Well { center: c, omega: hz_to_angular(f) }).collect(),
        )
        .unwrap(),
    ])
    .unwrap();
    let assign: Vec<usize> = (0..4).collect();
    let field = MagneticField::gradient(100.0).unwrap();
    let ours = crystal_couplings(&potential, &QubitSpec::yb171(), &field, 4, Some(&assign)).unwrap();

    let trap = Trap {
        mass: common::M_YB,
        omega0: global,
        wells: wells.iter().map(|&(c, f)| (c, hz_to_angular(f))).collect(),
    };
    let z = brute_force_positions(&trap, 4, 10e-6);
    let oracle = common::couplings(&trap, &z, 100.0);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!(rel(ours.get(i, j), oracle[i][j]) < 1e-7, "({i},{j})");
            }
        }
    }
}
