mod common;

use common::{layout_of, random_density_matrix, random_hermitian, random_matrix, rng};
use proptest::prelude::*;
use qsync_core::lindblad::{
    dense_liouvillian, evolve, evolve_observed, propagate, rhs, Dissipator, EvolveOptions, ModelSpec, NamedObservable,
    Tolerances,
};
use qsync_core::models::{build_reduced_qubit, CollectiveChannel, ReducedQubitParams};
use qsync_core::opalg::{embed, make_elementary, trace_distance, Elementary};
use qsync_core::{CMatrix, DensityMatrix, FactorKind, Operator, SpaceLayout, C64};
use rand::Rng;

/// `-i[H, rho] + sum gamma (2 L rho L^dag - L^dag L rho - rho L^dag L)`, term by term.
fn literal_rhs(h: &CMatrix, jumps: &[(f64, CMatrix)], rho: &CMatrix) -> CMatrix {
    let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
    for (g, l) in jumps {
        let ld = l.adjoint();
        let ldl = ld.matmul(l);
        let mut t = l.matmul(rho).matmul(&ld).scale_real(2.0);
        t -= &ldl.matmul(rho);
        t -= &rho.matmul(&ldl);
        out += &t.scale_real(*g);
    }
    out
}

fn random_model(seed: u64) -> (ModelSpec, Vec<(f64, CMatrix)>) {
    let mut r = rng(seed);
    let dims = if r.gen_bool(0.5) { vec![2, 2] } else { vec![r.gen_range(2..=4)] };
    let layout = layout_of(&dims);
    let d = layout.total_dim();
    let h = Operator::new(layout.clone(), random_hermitian(&mut r, d)).unwrap();
    let jumps: Vec<(f64, CMatrix)> =
        (0..r.gen_range(1..=2)).map(|_| (r.gen_range(0.05..1.0), random_matrix(&mut r, d).scale_real(0.5))).collect();
    let diss = jumps
        .iter()
        .map(|(g, l)| Dissipator::new(*g, Operator::new(layout.clone(), l.clone()).unwrap()).unwrap())
        .collect();
    let obs = vec![NamedObservable { name: "h".into(), op: h.clone() }];
    (ModelSpec::new(h, diss, obs, 1.0).unwrap(), jumps)
}

fn qubit() -> SpaceLayout {
    SpaceLayout::single(2, "q", FactorKind::Qubit).unwrap()
}

fn zero_model(layout: SpaceLayout) -> Operator {
    let d = layout.total_dim();
    Operator::new(layout, CMatrix::zeros(d)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rhs_matches_literal_form_and_is_traceless_hermitian(seed in any::<u64>()) {
        let (model, jumps) = random_model(seed);
        let mut r = rng(seed ^ 0x5eed);
        let rho = random_density_matrix(&mut r, model.layout().clone(), model.dim());
        let got = rhs(&model, &rho).unwrap();
        let want = literal_rhs(model.hamiltonian().matrix(), &jumps, rho.matrix());
        prop_assert!(got.max_abs_diff(&want) <= 1e-12);
        prop_assert!(got.trace().norm() <= 1e-12);
        prop_assert!(got.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn dense_liouvillian_agrees_with_rhs(seed in any::<u64>()) {
        let (model, _) = random_model(seed);
        let mut r = rng(seed ^ 0xface);
        let rho = random_density_matrix(&mut r, model.layout().clone(), 1);
        let l = dense_liouvillian(&model).unwrap();
        let via_l = CMatrix::unvectorize(&l.mul_vec(&rho.matrix().vectorize()));
        prop_assert!(via_l.max_abs_diff(&rhs(&model, &rho).unwrap()) <= 1e-12);
    }
}

#[test]
fn random_models_follow_the_oracle() {
    for seed in 0..12u64 {
        let (model, _) = random_model(seed);
        let mut r = rng(seed + 1000);
        let rho0 = random_density_matrix(&mut r, model.layout().clone(), 1);
        let traj = evolve(&model, &rho0, 3.0, 0.5, Tolerances::default()).unwrap();
        let l = dense_liouvillian(&model).unwrap();
        let want = propagate(&l, &rho0, 3.0).unwrap();
        let err = traj.final_state.matrix().max_abs_diff(&want);
        assert!(err < 1e-6, "seed {seed}: |drho| = {err:e}");
        assert!(traj.max_trace_error() < 1e-8);
        assert!(traj.min_eigenvalue().unwrap() >= -1e-8);
    }
}

#[test]
fn rabi_oscillation_matches_closed_form() {
    let omega = 0.7;
    let h = make_elementary(Elementary::PauliX).unwrap().scale_real(omega);
    let sz = NamedObservable { name: "sz".into(), op: make_elementary(Elementary::PauliZ).unwrap() };
    let model = ModelSpec::new(h, vec![], vec![sz], omega).unwrap();
    let g = DensityMatrix::pure(qubit(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    let traj = evolve(&model, &g, 10.0, 0.1, Tolerances::default()).unwrap();
    let z = traj.column("sz").unwrap();
    for (t, v) in traj.times.iter().zip(&z) {
        assert!((v + (2.0 * omega * t).cos()).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn damped_cavity_vacuum_is_a_fixed_point() {
    let layout = SpaceLayout::single(5, "c", FactorKind::Boson).unwrap();
    let a = make_elementary(Elementary::Destroy(5)).unwrap();
    let n = make_elementary(Elementary::Number(5)).unwrap();
    let h = n.scale_real(1.3);
    let model = ModelSpec::new(h, vec![Dissipator::new(0.4, a).unwrap()], vec![], 1.0).unwrap();
    let mut amps = vec![C64::new(0.0, 0.0); 5];
    amps[0] = C64::new(1.0, 0.0);
    let vac = DensityMatrix::pure(layout, &amps).unwrap();
    assert!(rhs(&model, &vac).unwrap().max_abs() == 0.0);
    let traj = evolve(&model, &vac, 5.0, 1.0, Tolerances::default()).unwrap();
    assert!(traj.final_state.matrix().max_abs_diff(vac.matrix()) < 1e-14);
}

#[test]
fn decay_liouvillian_has_steady_state_and_identity_at_zero() {
    let sm = make_elementary(Elementary::PauliMinus).unwrap();
    let model = ModelSpec::new(zero_model(qubit()), vec![Dissipator::new(0.3, sm).unwrap()], vec![], 0.3).unwrap();
    let l = dense_liouvillian(&model).unwrap();
    let gg = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let image = l.mul_vec(&gg.vectorize());
    assert!(image.iter().all(|z| z.norm() == 0.0), "L vec(|g><g|) = 0");
    let e0 = qsync_core::linalg::expm(&l.scale_real(0.0)).unwrap();
    assert!(e0.max_abs_diff(&CMatrix::identity(4)) == 0.0);
}

fn reduced(omega: f64) -> ModelSpec {
    build_reduced_qubit(&ReducedQubitParams {
        deltaq1: 0.3,
        deltaq2: -0.1,
        omega,
        gamma_eff: 0.25,
        channel: CollectiveChannel::Symmetric,
        dispersive_shift: 0.0,
    })
    .unwrap()
}

fn product_qubits() -> DensityMatrix {
    let layout = reduced(0.0).layout().clone();
    let r = |x: f64| C64::new(x.sqrt(), 0.0);
    DensityMatrix::product_pure(layout, &[vec![r(0.9), r(0.1)], vec![r(0.7), r(0.3)]]).unwrap()
}

#[test]
fn reduced_model_matches_oracle_at_five_decay_times() {
    let model = reduced(0.2);
    let rho0 = product_qubits();
    let t = 5.0 / 0.25;
    let traj = evolve(&model, &rho0, t, t / 10.0, Tolerances::default()).unwrap();
    let l = dense_liouvillian(&model).unwrap();
    let want = propagate(&l, &rho0, t).unwrap();
    assert!(traj.final_state.matrix().max_abs_diff(&want) < 1e-6);
}

#[test]
fn undriven_evolution_contracts_trace_distance() {
    let model = reduced(0.0);
    let a = product_qubits();
    let mut r = rng(7);
    let b = random_density_matrix(&mut r, model.layout().clone(), 4);
    let opts = EvolveOptions::new(40.0, 0.5);
    let mut states = Vec::new();
    for rho0 in [&a, &b] {
        let mut run = Vec::new();
        evolve_observed(&model, rho0, &opts, &mut |_, rho| {
            run.push(rho.clone());
            Ok(())
        })
        .unwrap();
        states.push(run);
    }
    let d: Vec<f64> = states[0].iter().zip(&states[1]).map(|(x, y)| trace_distance(x, y).unwrap()).collect();
    for w in d.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn purity_does_not_increase_under_a_hermitian_jump() {
    // Unital channel: purity is monotone.
    let layout = reduced(0.0).layout().clone();
    let z1 = embed(&make_elementary(Elementary::PauliZ).unwrap(), &layout, 0).unwrap();
    let z2 = embed(&make_elementary(Elementary::PauliZ).unwrap(), &layout, 1).unwrap();
    let jump = z1.add(&z2).unwrap().scale_real(0.5f64.sqrt());
    let h = reduced(0.0).hamiltonian().clone();
    let model = ModelSpec::new(h, vec![Dissipator::new(0.25, jump).unwrap()], vec![], 0.25).unwrap();
    let mut purities = Vec::new();
    evolve_observed(&model, &product_qubits(), &EvolveOptions::new(40.0, 0.5), &mut |_, rho| {
        purities.push(rho.purity());
        Ok(())
    })
    .unwrap();
    for w in purities.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn purity_recovers_under_collective_decay() {
    // Decay towards |gg> is not unital, so purity first falls and then rises.
    let mut purities = Vec::new();
    evolve_observed(&reduced(0.0), &product_qubits(), &EvolveOptions::new(40.0, 2.0), &mut |_, rho| {
        purities.push(rho.purity());
        Ok(())
    })
    .unwrap();
    let lowest = purities.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(lowest < 0.97);
    assert!(*purities.last().unwrap() > lowest + 0.02);
}

#[test]
fn halving_tolerances_changes_expectations_by_less_than_1e_6() {
    let model = reduced(0.2);
    let rho0 = product_qubits();
    let a = evolve(&model, &rho0, 30.0, 0.5, Tolerances::default()).unwrap();
    let b = evolve(&model, &rho0, 30.0, 0.5, Tolerances::default().halved()).unwrap();
    for (ra, rb) in a.values.iter().zip(&b.values) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn linear_gain_raises_photon_number_at_rate_two_gamma_n_plus_one() {
    // d<n>/dt = 2 gamma (<n> + 1) for the a^dag channel, away from the truncation edge.
    let n = 8;
    let layout = SpaceLayout::single(n, "m", FactorKind::Boson).unwrap();
    let ad = make_elementary(Elementary::Create(n)).unwrap();
    let num = make_elementary(Elementary::Number(n)).unwrap();
    let gamma = 0.05;
    let model =
        ModelSpec::new(zero_model(layout.clone()), vec![Dissipator::new(gamma, ad).unwrap()], vec![], 1.0).unwrap();
    for k in 0..4 {
        let mut amps = vec![C64::new(0.0, 0.0); n];
        amps[k] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::pure(layout.clone(), &amps).unwrap();
        let dn = rhs(&model, &rho).unwrap().trace_product(num.matrix()).re;
        assert!((dn - 2.0 * gamma * (k as f64 + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn singlet_is_dark_under_symmetric_decay() {
    let model = build_reduced_qubit(&ReducedQubitParams {
        deltaq1: 0.0,
        deltaq2: 0.0,
        omega: 0.0,
        gamma_eff: 0.25,
        channel: CollectiveChannel::Symmetric,
        dispersive_shift: 0.0,
    })
    .unwrap();
    let s = 0.5f64.sqrt();
    // (|ge> - |eg>)/sqrt 2 in [gg, ge, eg, ee] order
    let amps = [0.0, s, -s, 0.0].map(|x| C64::new(x, 0.0));
    let singlet = DensityMatrix::pure(model.layout().clone(), &amps).unwrap();
    let traj = evolve(&model, &singlet, 50.0, 5.0, Tolerances::default()).unwrap();
    assert!(traj.final_state.matrix().max_abs_diff(singlet.matrix()) < 1e-12);
}

#[test]
fn embedded_observables_are_recorded_by_name() {
    let model = reduced(0.1);
    let layout = model.layout().clone();
    let z1 = embed(&make_elementary(Elementary::PauliZ).unwrap(), &layout, 0).unwrap();
    let traj = evolve(&model, &product_qubits(), 2.0, 1.0, Tolerances::default()).unwrap();
    let first = traj.column("sz_1").unwrap()[0];
    let want = product_qubits().matrix().trace_product(z1.matrix()).re;
    assert!((first - want).abs() < 1e-15);
}
