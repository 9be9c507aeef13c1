mod common;

use common::rng;
use proptest::prelude::*;
use qsync_core::linalg::hermitian_eigenvalues;
use qsync_core::lindblad::{rhs, EvolveOptions};
use qsync_core::models::{
    build_cavity_qubit, build_reduced_qubit, build_vdp, moment_catalog, pauli_catalog, preset, standard_initial_state,
    CavityQubitParams, CollectiveChannel, ModelParams, ReducedQubitParams, ReducedQubitParams as R, VdpParams,
};
use qsync_core::opalg::{embed, expectation, make_elementary, Elementary};
use qsync_core::{CMatrix, DensityMatrix, C64};
use rand::Rng;

fn random_cavity(seed: u64) -> CavityQubitParams {
    let mut r = rng(seed);
    CavityQubitParams {
        delta1: r.gen_range(-20.0..20.0),
        delta2: r.gen_range(-20.0..20.0),
        deltaq1: r.gen_range(-1.0..1.0),
        deltaq2: r.gen_range(-1.0..1.0),
        g0: r.gen_range(0.0..2.0),
        j: r.gen_range(-15.0..15.0),
        omega: r.gen_range(-0.1..0.1),
        kappa: r.gen_range(0.1..2.0),
        nc: r.gen_range(3..=4),
    }
}

fn random_vdp(seed: u64) -> VdpParams {
    let mut r = rng(seed);
    VdpParams {
        omega1: r.gen_range(0.0..2.0),
        omega2: r.gen_range(0.0..2.0),
        j: r.gen_range(0.0..1.0),
        gain1: r.gen_range(0.0..0.1),
        gain2: r.gen_range(0.0..0.1),
        kappa1: r.gen_range(0.0..3.0),
        kappa2: r.gen_range(0.0..3.0),
        n: 6,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn built_hamiltonians_are_hermitian(seed in any::<u64>()) {
        let full = build_cavity_qubit(&random_cavity(seed)).unwrap();
        prop_assert!(full.hamiltonian().matrix().hermiticity_defect() <= 1e-12);
        let vdp = build_vdp(&random_vdp(seed)).unwrap();
        prop_assert!(vdp.hamiltonian().matrix().hermiticity_defect() <= 1e-12);
        let mut r = rng(seed);
        let red = build_reduced_qubit(&R {
            deltaq1: r.gen_range(-1.0..1.0),
            deltaq2: r.gen_range(-1.0..1.0),
            omega: r.gen_range(-1.0..1.0),
            gamma_eff: r.gen_range(0.01..1.0),
            channel: if r.gen_bool(0.5) { CollectiveChannel::Symmetric } else { CollectiveChannel::Antisymmetric },
            dispersive_shift: r.gen_range(-1.0..1.0),
        })
        .unwrap();
        prop_assert!(red.hamiltonian().matrix().hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn hopping_block_eigenvalues_are_delta_plus_minus_j(delta in -50.0f64..50.0, j in -50.0f64..50.0) {
        let p = CavityQubitParams { delta1: delta, delta2: delta, ..random_cavity(1) };
        let p = CavityQubitParams { j, ..p };
        let mut ev = hermitian_eigenvalues(&p.quadratic_form()).unwrap();
        ev.sort_by(f64::total_cmp);
        let mut want = [delta - j, delta + j];
        want.sort_by(f64::total_cmp);
        prop_assert!((ev[0] - want[0]).abs() <= 1e-12);
        prop_assert!((ev[1] - want[1]).abs() <= 1e-12);
    }
}

#[test]
fn catalogs_are_hermitian_with_unique_names() {
    for catalog in [pauli_catalog(), moment_catalog(12).unwrap()] {
        for (k, (name, m)) in catalog.iter().enumerate() {
            assert!(m.hermiticity_defect() <= 1e-12, "{name}");
            assert!(catalog[..k].iter().all(|(n, _)| n != name));
        }
    }
    for p in [ModelParams::CavityQubit(random_cavity(3)), ModelParams::Vdp(random_vdp(3))] {
        let model = p.build().unwrap();
        let names: Vec<&str> = model.observables().iter().map(|o| o.name.as_str()).collect();
        for (k, n) in names.iter().enumerate() {
            assert!(!names[..k].contains(n));
        }
        assert!(model.observables().iter().all(|o| o.op.matrix().hermiticity_defect() <= 1e-12));
    }
}

#[test]
fn moment_catalog_gram_matrix_has_full_rank() {
    for n in [6, 12, 16] {
        let cat = moment_catalog(n).unwrap();
        let k = cat.len();
        let gram = CMatrix::from_fn(k, |i, j| cat[i].1.hs_inner(&cat[j].1));
        let ev = hermitian_eigenvalues(&gram).unwrap();
        let max = ev.iter().copied().fold(0.0, f64::max);
        let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min > 1e-10 * max, "N = {n}: Gram eigenvalues {ev:?}");
    }
}

#[test]
fn uncoupled_cavity_qubit_spectrum_is_additive() {
    let p = CavityQubitParams {
        g0: 0.0,
        j: 0.0,
        omega: 0.0,
        delta1: 1.5,
        delta2: -0.7,
        deltaq1: 0.4,
        deltaq2: 0.9,
        kappa: 1.0,
        nc: 3,
    };
    let h = build_cavity_qubit(&p).unwrap().hamiltonian().matrix().clone();
    let off: f64 = (0..h.dim())
        .flat_map(|i| (0..h.dim()).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| h[(i, j)].norm())
        .fold(0.0, f64::max);
    assert_eq!(off, 0.0);
    // Basis order [q1, q2, c1, c2] with qubit basis [g, e].
    let mut idx = 0;
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            for n1 in 0..3 {
                for n2 in 0..3 {
                    let want =
                        p.delta1 * n1 as f64 + p.delta2 * n2 as f64 + 0.5 * p.deltaq1 * s1 + 0.5 * p.deltaq2 * s2;
                    assert!((h[(idx, idx)].re - want).abs() < 1e-14);
                    idx += 1;
                }
            }
        }
    }
}

#[test]
fn reduced_model_shape_and_rate() {
    let ModelParams::CavityQubit(full) = preset("fig2a").unwrap().params else { panic!("fig2a is a cavity model") };
    let r = ReducedQubitParams::from_cavity(&full).unwrap();
    assert_eq!(r.gamma_eff, 0.25);
    let m = build_reduced_qubit(&r).unwrap();
    assert_eq!(m.dim(), 4);
    assert_eq!(m.dissipators().len(), 1);
}

#[test]
fn vdp_vacuum_is_stationary_without_coupling_or_gain() {
    let p = VdpParams { j: 0.0, gain1: 0.0, gain2: 0.0, ..random_vdp(9) };
    let model = build_vdp(&p).unwrap();
    let mut amps = vec![C64::new(0.0, 0.0); model.dim()];
    amps[0] = C64::new(1.0, 0.0);
    let vac = DensityMatrix::pure(model.layout().clone(), &amps).unwrap();
    assert_eq!(rhs(&model, &vac).unwrap().max_abs(), 0.0);
}

#[test]
fn vdp_single_mode_gain_from_vacuum() {
    // Short-time integration against d<n>/dt = 2 Omega (<n> + 1) at t = 0.
    let gain = 0.02;
    let p = VdpParams { omega1: 1.0, omega2: 1.0, j: 0.0, gain1: gain, gain2: 0.0, kappa1: 0.0, kappa2: 0.0, n: 8 };
    let model = build_vdp(&p).unwrap();
    let mut amps = vec![C64::new(0.0, 0.0); model.dim()];
    amps[0] = C64::new(1.0, 0.0);
    let vac = DensityMatrix::pure(model.layout().clone(), &amps).unwrap();
    let h = 1e-3;
    let opts = EvolveOptions::new(h, h);
    let traj = qsync_core::lindblad::evolve_observed(&model, &vac, &opts, &mut |_, _| Ok(())).unwrap();
    let n1 = traj.column("n_1").unwrap();
    let slope = (n1[1] - n1[0]) / h;
    assert!((slope - 2.0 * gain).abs() < 2.0 * gain * 1e-2, "slope {slope}");
}

#[test]
fn preset_initial_states_match_their_amplitudes() {
    let fig3 = preset("fig3").unwrap();
    let rho = fig3.initial_state().unwrap();
    let layout = rho.layout().clone();
    let n = make_elementary(Elementary::Number(12)).unwrap();
    let n1 = expectation(&rho, &embed(&n, &layout, 0).unwrap()).unwrap().re;
    let n2 = expectation(&rho, &embed(&n, &layout, 1).unwrap()).unwrap().re;
    assert!((n1 - 0.75).abs() < 1e-14 && (n2 - 0.95).abs() < 1e-14);

    let fig2 = standard_initial_state(&preset("fig2a").unwrap().params).unwrap();
    let z = make_elementary(Elementary::PauliZ).unwrap();
    let z1 = expectation(&fig2, &embed(&z, fig2.layout(), 0).unwrap()).unwrap().re;
    let z2 = expectation(&fig2, &embed(&z, fig2.layout(), 1).unwrap()).unwrap().re;
    assert!((z1 - (0.1 - 0.9)).abs() < 1e-14 && (z2 - (0.3 - 0.7)).abs() < 1e-14);
}

#[test]
fn dispersive_shift_acts_on_the_complementary_channel() {
    // Basis [gg, ge, eg, ee]; (|ge> -+ |eg>)/sqrt 2 are the Q and S single excitations.
    let s = 0.3;
    let p = R {
        deltaq1: 0.0,
        deltaq2: 0.0,
        omega: 0.0,
        gamma_eff: 0.1,
        channel: CollectiveChannel::Symmetric,
        dispersive_shift: s,
    };
    let h = build_reduced_qubit(&p).unwrap().hamiltonian().matrix().clone();
    let r = 0.5f64.sqrt();
    let energy = |v: [f64; 4]| {
        let v: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        let hv = h.mul_vec(&v);
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<C64>().re
    };
    assert!((energy([0.0, r, -r, 0.0]) - s).abs() < 1e-14);
    assert!(energy([0.0, r, r, 0.0]).abs() < 1e-14);
}
