//! Properties of the interferometer matrix and the Fock-space simulator.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sixport_core::oracle::{default_herald_max, fock_amplitude, herald_distribution, herald_state, HeraldSpec};
use sixport_core::unitary::{closed_form, compose, phase_matrix, tritter1_matrix, tritter2_matrix, TransferMatrix};

#[test]
fn unitarity_and_periodicity_on_random_phases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    assert!(tritter1_matrix().is_unitary(1e-12));
    assert!(tritter2_matrix().is_unitary(1e-12));
    for _ in 0..1000 {
        let phi = rng.random_range(0.0..=TAU);
        let u = compose(phi).unwrap();
        assert!(phase_matrix(phi).is_unitary(1e-12));
        assert!(u.is_unitary(1e-12), "phi={phi}");
        assert!(u.max_deviation(&compose(phi + TAU).unwrap()) < 1e-12);
        let product = tritter2_matrix() * phase_matrix(phi) * tritter1_matrix();
        assert!(product.max_deviation(&u) < 1e-12);
    }
}

#[test]
fn closed_form_entries_are_uniform() {
    for phi in [0.3, 1.0, PI, 4.2] {
        let u = closed_form(phi);
        for i in 1..=3 {
            for j in 1..=3 {
                let reference = if i == j { u.u(1, 1) } else { u.u(1, 2) };
                assert_eq!(u.u(i, j), reference);
            }
        }
    }
    assert!(compose(0.0).unwrap().max_deviation(&TransferMatrix::identity()) < 1e-14);
}

#[test]
fn single_photon_transitions_are_matrix_entries() {
    let u = compose(2.2).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let mut n_in = [0; 3];
            let mut n_out = [0; 3];
            n_in[j] = 1;
            n_out[i] = 1;
            assert_eq!(fock_amplitude(&u, n_in, n_out).unwrap(), u.entry(i, j));
        }
    }
}

#[test]
fn amplitude_transpose_invariance() {
    let u = compose(0.9).unwrap();
    let m = TransferMatrix::new([
        [u.entry(0, 0), u.entry(0, 1) * C64::new(0.0, 1.0), u.entry(0, 2)],
        [u.entry(1, 0), u.entry(1, 1), -u.entry(1, 2)],
        [u.entry(2, 0) * 0.5, u.entry(2, 1), u.entry(2, 2)],
    ]);
    for (n_in, n_out) in [([3, 1, 0], [1, 1, 2]), ([2, 2, 1], [0, 4, 1]), ([1, 0, 4], [2, 2, 1])] {
        let a = fock_amplitude(&m, n_in, n_out).unwrap();
        let b = fock_amplitude(&m.transpose(), n_out, n_in).unwrap();
        assert!((a - b).norm() < 1e-13);
    }
}

#[test]
fn distributions_are_complete() {
    for (n2, n3) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        for alpha in [0.5, 2.0, 4.0] {
            for phi in [0.5, PI, 5.0] {
                let d = herald_distribution(n2, n3, alpha, phi, default_herald_max(n2, n3, alpha, phi), None).unwrap();
                assert!((d.total - 1.0).abs() < 1e-8, "({n2},{n3}) alpha={alpha} phi={phi}: {}", d.total);
            }
        }
    }
}

#[test]
fn identity_device_selection_rules() {
    for (n2, n3) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        for (m2, m3) in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)] {
            let spec = HeraldSpec::new(n2, n3, m2, m3, 1.5, 0.0);
            match herald_state(&spec, None) {
                Ok(r) => {
                    assert_eq!((m2, m3), (n2, n3));
                    assert!((r.probability - 1.0).abs() < 1e-12);
                }
                Err(_) => assert_ne!((m2, m3), (n2, n3)),
            }
        }
    }
}

#[test]
fn probability_converges_in_cutoff() {
    for (alpha, phi) in [(2.0, 1.0), (4.0, PI), (6.0, 5.5)] {
        let spec = HeraldSpec::new(1, 1, 1, 1, alpha, phi);
        let base = herald_state(&spec, None).unwrap();
        let more = herald_state(&spec, Some(base.cutoff + 10)).unwrap();
        assert!((base.probability - more.probability).abs() < 1e-9);
    }
}
