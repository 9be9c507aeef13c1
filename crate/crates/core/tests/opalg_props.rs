mod common;

use common::{layout_of, random_density_matrix, random_factors, random_hermitian, random_matrix, rng};
use proptest::prelude::*;
use qsync_core::opalg::{commutator, embed, expectation, partial_trace, tensor, tensor_states, von_neumann_entropy};
use qsync_core::{CMatrix, FactorKind, Operator, SpaceLayout, C64};
use rand::Rng;

fn single(d: usize) -> SpaceLayout {
    SpaceLayout::single(d, "a", FactorKind::Generic).unwrap()
}

/// Digits of a row-major multi-index.
fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for s in (0..dims.len()).rev() {
        out[s] = idx % dims[s];
        idx /= dims[s];
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn embed_matches_index_construction(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_factors(&mut r, 3, 4);
        let layout = layout_of(&dims);
        let slot = r.gen_range(0..dims.len());
        let a = random_matrix(&mut r, dims[slot]);
        let op = Operator::new(single(dims[slot]), a.clone()).unwrap();
        let e = embed(&op, &layout, slot).unwrap();
        let n = layout.total_dim();
        let direct = CMatrix::from_fn(n, |i, j| {
            let (di, dj) = (digits(i, &dims), digits(j, &dims));
            let others_equal = (0..dims.len()).all(|s| s == slot || di[s] == dj[s]);
            if others_equal { a[(di[slot], dj[slot])] } else { C64::new(0.0, 0.0) }
        });
        prop_assert!(e.matrix().max_abs_diff(&direct) <= 1e-14);
    }

    #[test]
    fn tensor_is_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ops: Vec<Operator> = (0..3)
            .map(|_| {
                let d = r.gen_range(2..=3);
                Operator::new(single(d), random_matrix(&mut r, d)).unwrap()
            })
            .collect();
        let left = tensor(&tensor(&ops[0], &ops[1]), &ops[2]);
        let right = tensor(&ops[0], &tensor(&ops[1], &ops[2]));
        prop_assert!(left.matrix().max_abs_diff(right.matrix()) <= 1e-14);
        prop_assert_eq!(left.layout().factors(), right.layout().factors());
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_factors(&mut r, 3, 3);
        let layout = layout_of(&dims);
        let rank = r.gen_range(1..=layout.total_dim());
        let rho = random_density_matrix(&mut r, layout, rank);
        let keep: Vec<usize> = (0..dims.len()).filter(|_| r.gen_bool(0.5)).collect();
        prop_assume!(!keep.is_empty());
        let red = partial_trace(&rho, &keep).unwrap();
        prop_assert!((red.trace().re - 1.0).abs() <= 1e-12);
        prop_assert!(red.trace().im.abs() <= 1e-12);
        prop_assert!(red.min_eigenvalue().unwrap() >= -1e-10);
    }

    #[test]
    fn partial_trace_agrees_with_embedded_expectations(seed in any::<u64>()) {
        // tr(rho_A X) = tr(rho (X ⊗ I)) for every X on the kept factor.
        let mut r = rng(seed);
        let dims = random_factors(&mut r, 3, 3);
        prop_assume!(dims.len() >= 2);
        let layout = layout_of(&dims);
        let rho = random_density_matrix(&mut r, layout.clone(), 2);
        let slot = r.gen_range(0..dims.len());
        let red = partial_trace(&rho, &[slot]).unwrap();
        let x = random_matrix(&mut r, dims[slot]);
        let op = Operator::new(single(dims[slot]), x.clone()).unwrap();
        let full = expectation(&rho, &embed(&op, &layout, slot).unwrap()).unwrap();
        let reduced = red.matrix().trace_product(&x);
        prop_assert!((full - reduced).norm() <= 1e-12);
    }

    #[test]
    fn expectation_is_linear(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_factors(&mut r, 2, 4);
        let layout = layout_of(&dims);
        let d = layout.total_dim();
        let rho = random_density_matrix(&mut r, layout.clone(), d);
        let a = Operator::new(layout.clone(), random_matrix(&mut r, d)).unwrap();
        let b = Operator::new(layout.clone(), random_matrix(&mut r, d)).unwrap();
        let (s, t) = (C64::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)), C64::new(r.gen_range(-2.0..2.0), 0.0));
        let combo = a.scale(s).add(&b.scale(t)).unwrap();
        let lhs = expectation(&rho, &combo).unwrap();
        let rhs = expectation(&rho, &a).unwrap() * s + expectation(&rho, &b).unwrap() * t;
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn commutator_is_antisymmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.gen_range(2..=6);
        let a = Operator::new(single(d), random_matrix(&mut r, d)).unwrap();
        let b = Operator::new(single(d), random_matrix(&mut r, d)).unwrap();
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        prop_assert!(ab.matrix().max_abs_diff(&(-ba.matrix())) <= 1e-14);
        prop_assert!(commutator(&a, &a).unwrap().matrix().max_abs() == 0.0);
    }

    #[test]
    fn entropy_is_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_factors(&mut r, 2, 4);
        let layout = layout_of(&dims);
        let d = layout.total_dim();
        let rank = r.gen_range(1..=d);
        let rho = random_density_matrix(&mut r, layout, rank);
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(s <= (d as f64).ln() + 1e-10);
    }

    #[test]
    fn entropy_is_additive_on_products(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (da, db) = (r.gen_range(2..=3), r.gen_range(2..=3));
        let a = random_density_matrix(&mut r, single(da), 2);
        let b = random_density_matrix(&mut r, single(db), 2);
        let sab = von_neumann_entropy(&tensor_states(&a, &b)).unwrap();
        let sum = von_neumann_entropy(&a).unwrap() + von_neumann_entropy(&b).unwrap();
        prop_assert!((sab - sum).abs() <= 1e-10);
    }

    #[test]
    fn hermitian_operators_have_real_expectations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.gen_range(2..=6);
        let h = Operator::new(single(d), random_hermitian(&mut r, d)).unwrap();
        prop_assert!(h.is_hermitian());
        let rho = random_density_matrix(&mut r, single(d), d);
        prop_assert!(expectation(&rho, &h).unwrap().im.abs() <= 1e-12);
    }
}
