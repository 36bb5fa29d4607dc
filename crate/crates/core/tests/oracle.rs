mod common;

use std::f64::consts::PI;

use common::*;
use phasecomp::catalog;
use phasecomp::expansion::expand_u11;
use phasecomp::su2::{propagator_at, rectangular_propagator, resonant_propagator};
use phasecomp::{ErrorModel, Errors};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_matrix_close(lib: [[C; 2]; 2], oracle: &M2, tol: f64) {
    for r in 0..2 {
        for c in 0..2 {
            let d = (lib[r][c] - oracle[(r, c)]).norm();
            assert!(d < tol, "entry ({r},{c}): {} vs {} (diff {d:e})", lib[r][c], oracle[(r, c)]);
        }
    }
}

#[test]
fn resonant_pulses_match_rotation_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let area = rng.random_range(-4.0 * PI..4.0 * PI);
        let phase = rng.random_range(-4.0 * PI..4.0 * PI);
        let lib = resonant_propagator(area, phase).matrix();
        assert_matrix_close(lib, &rotation(C::new(area, 0.0), C::new(phase, 0.0)), 1e-14);
    }
}

#[test]
fn rectangular_pulses_match_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut cases: Vec<(f64, f64, f64, f64)> = (0..200)
        .map(|_| {
            (
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(0.01..3.0),
                rng.random_range(-PI..PI),
            )
        })
        .collect();
    // through and around the small-argument branch
    cases.extend([(0.0, 0.0, 1.0, 0.3), (1e-9, 0.0, 1.0, 0.0), (0.0, 3e-9, 2.0, 1.0), (2e-8, -1e-8, 0.5, 2.0)]);
    for (rabi, detuning, duration, phase) in cases {
        let lib = rectangular_propagator(rabi, detuning, duration, phase).unwrap().matrix();
        let expm = rectangular_expm(C::new(rabi, 0.0), C::new(detuning, 0.0), duration, C::new(phase, 0.0));
        assert_matrix_close(lib, &expm, 1e-12);
        let closed = rectangular(C::new(rabi, 0.0), C::new(detuning, 0.0), duration, C::new(phase, 0.0));
        assert_matrix_close(lib, &closed, 1e-12);
    }
}

#[test]
fn closed_form_exponential_matches_expm_off_the_real_axis() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let z = |rng: &mut ChaCha8Rng| C::new(rng.random_range(-4.0..4.0), rng.random_range(-0.5..0.5));
        let (rabi, detuning, phi) = (z(&mut rng), z(&mut rng), z(&mut rng));
        let a = rectangular(rabi, detuning, 1.0, phi);
        let b = rectangular_expm(rabi, detuning, 1.0, phi);
        assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()), "{a} vs {b}");
    }
}

#[test]
fn three_pulse_train_by_brute_force() {
    let seq = catalog::get_sequence("B3").unwrap();
    let train = pi_train(&[0.0, 2.0 / 3.0, 0.0]);
    let oracle = double_matrix(&train, C::new(0.2, 0.0), C::new(0.0, 0.0));
    let lib = propagator_at(&seq, ErrorModel::Double, &Errors::double(0.2, 0.0));
    assert_matrix_close(lib.matrix(), &oracle, 1e-14);
}

#[test]
fn five_pulse_train_with_phase_error() {
    let seq = catalog::get_sequence("Phi5").unwrap();
    let train = pi_train(&[0.0, 0.7433, 0.3951, 0.7433, 0.0]);
    let oracle = double_matrix(&train, C::new(0.0, 0.0), C::new(0.1, 0.0));
    let lib = propagator_at(&seq, ErrorModel::Double, &Errors::double(0.0, 0.1));
    assert_matrix_close(lib.matrix(), &oracle, 1e-14);
}

#[test]
fn catalog_propagators_match_oracle_under_both_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for entry in catalog::entries() {
        let seq = entry.to_sequence().unwrap();
        let train = pulses(&entry.phases_pi, &entry.areas_pi);
        for _ in 0..20 {
            let (a, d, e) = (
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.3..0.3),
            );
            let lib = propagator_at(&seq, ErrorModel::Double, &Errors::double(a, e));
            assert_matrix_close(lib.matrix(), &double_matrix(&train, C::new(a, 0.0), C::new(e, 0.0)), 1e-12);
            let lib = propagator_at(&seq, ErrorModel::Triple, &Errors::triple(a, d, e));
            let oracle = triple_matrix(&train, C::new(a, 0.0), C::new(d, 0.0), C::new(e, 0.0));
            assert_matrix_close(lib.matrix(), &oracle, 1e-12);
        }
    }
}

#[test]
fn low_order_coefficients_match_real_step_richardson() {
    // measured worst case 3.8e-6 relative at h = 5e-3
    let h = 5e-3;
    for entry in catalog::entries().iter().filter(|e| e.model == ErrorModel::Double) {
        let train = pulses(&entry.phases_pi, &entry.areas_pi);
        let table = expand_u11(&entry.to_sequence().unwrap(), ErrorModel::Double, &[2, 2]).unwrap();
        let f = |a: f64, e: f64| double_u11(&train, C::new(a, 0.0), C::new(e, 0.0));
        for (idx, c) in &table.entries {
            if idx[0] + idx[1] > 2 || c.norm() <= 1e-8 {
                continue;
            }
            let fd = mixed_richardson(&f, idx[0], idx[1], h) / (factorial(idx[0]) * factorial(idx[1]));
            let rel = (fd - c).norm() / c.norm();
            assert!(rel < 5e-5, "{} {idx:?}: jet {c} vs fd {fd} (rel {rel:e})", entry.name);
        }
    }
}

#[test]
fn contour_oracle_reproduces_known_series() {
    // exp(3a + 2e) has coefficients 3^j 2^k / (j! k!)
    let f = |z: &[C]| (z[0] * 3.0 + z[1] * 2.0).exp();
    for j in 0..6 {
        for k in 0..3 {
            let (c, _) = oracle_coefficient(f, &[j, k], &[3.0, 2.0]);
            let exact = 3f64.powi(j as i32) * 2f64.powi(k as i32) / (factorial(j) * factorial(k));
            assert!((c.re - exact).abs() < 1e-12 * exact && c.im.abs() < 1e-12 * exact, "{j},{k}: {c}");
        }
    }
}
