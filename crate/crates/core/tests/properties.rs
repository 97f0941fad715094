//! Property-based invariants of the linear operators and the calculus.

use edm_stress::edm::{
    build_v, edm_of, center, lindenstrauss, lindenstrauss_adjoint, ltriag, ltriag_adjoint,
    reduce_to_triangular, tri_len, TriVector,
};
use edm_stress::instance::Instance;
use edm_stress::linalg::frob_inner;
use edm_stress::points::Formulation;
use edm_stress::stress::EvalContext;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn entry() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => -10.0..10.0f64,
        1 => -1e-3..1e-3f64,
        1 => Just(0.0),
    ]
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(entry(), n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.transpose()).scale(0.5)
    })
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(entry(), r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

proptest! {
    #[test]
    fn lindenstrauss_adjoint_identity(g in symmetric(5), s in symmetric(5)) {
        let lhs = frob_inner(&lindenstrauss(&g).unwrap(), &s);
        let rhs = frob_inner(&g, &lindenstrauss_adjoint(&s).unwrap());
        let scale = 1.0 + g.norm() * s.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn lindenstrauss_output_is_hollow(g in symmetric(6)) {
        let d = lindenstrauss(&g).unwrap();
        for i in 0..6 {
            prop_assert_eq!(d[(i, i)], 0.0);
        }
        prop_assert!((d.clone() - d.transpose()).amax() == 0.0);
    }

    #[test]
    fn adjoint_rows_sum_to_zero(s in symmetric(6)) {
        let ks = lindenstrauss_adjoint(&s).unwrap();
        for i in 0..6 {
            let sum: f64 = (0..6).map(|j| ks[(i, j)]).sum();
            prop_assert!(sum.abs() <= 1e-12 * (1.0 + ks.amax()));
        }
    }

    #[test]
    fn adjoint_annihilates_diagonals(v in proptest::collection::vec(entry(), 5)) {
        let diag = DMatrix::from_diagonal(&DVector::from_vec(v));
        let ks = lindenstrauss_adjoint(&diag).unwrap();
        prop_assert_eq!(ks.amax(), 0.0);
    }

    #[test]
    fn ltriag_adjoint_identity(
        (n, d) in (3usize..8, 1usize..5),
        raw in proptest::collection::vec(entry(), 64),
    ) {
        let len = tri_len(n, d);
        let x = DVector::from_iterator(len, raw.iter().copied().cycle().take(len));
        let ell = TriVector::new(x.clone(), n, d).unwrap();
        let l = DMatrix::from_iterator(
            n - 1,
            d,
            raw.iter().copied().cycle().skip(7).take((n - 1) * d),
        );
        let lhs = frob_inner(&ltriag(&ell), &l);
        let rhs = x.dot(ltriag_adjoint(&l).values());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x.norm() * l.norm()));
        // packing round trip
        let back = ltriag_adjoint(&ltriag(&ell));
        prop_assert_eq!(back.values(), &x);
    }

    #[test]
    fn centering_preserves_distances(p in matrix(6, 3)) {
        let c = center(&p);
        prop_assert!((edm_of(&p) - edm_of(&c)).amax() <= 1e-12 * (1.0 + edm_of(&p).amax()));
        let e = DVector::from_element(6, 1.0);
        prop_assert!((c.transpose() * e).amax() <= 1e-11 * (1.0 + p.amax()));
    }

    #[test]
    fn triangular_reduction_round_trip(l in matrix(5, 3)) {
        let red = reduce_to_triangular(&l);
        let back = ltriag(&red.ell) * red.q.transpose();
        prop_assert!((back - &l).amax() <= 1e-10 * (1.0 + l.norm()));
        let qtq = red.q.transpose() * &red.q;
        prop_assert!((qtq - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-12);
    }

    #[test]
    fn hessian_action_is_linear(
        seed in 0u64..50,
        coeffs in (-3.0..3.0f64, -3.0..3.0f64),
    ) {
        let inst = Instance::<f64>::generate(5, 2, seed).unwrap();
        let ctx = EvalContext::new(inst, Formulation::ReducedL).unwrap();
        let dim = ctx.dim();
        let x = DVector::from_fn(dim, |i, _| ((i as f64) * 0.37 + seed as f64).sin());
        let d1 = DVector::from_fn(dim, |i, _| ((i as f64) * 1.3).cos());
        let d2 = DVector::from_fn(dim, |i, _| ((i as f64) * 0.71 + 1.0).sin());
        let (a, b) = coeffs;
        let combo = d1.scale(a) + d2.scale(b);
        let lhs = ctx.hessian_apply(&x, &combo).unwrap();
        let rhs = ctx.hessian_apply(&x, &d1).unwrap().scale(a)
            + ctx.hessian_apply(&x, &d2).unwrap().scale(b);
        let scale = 1.0 + lhs.norm();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * scale);
    }
}

#[test]
fn v_basis_invariants_hold_up_to_64() {
    for n in 2..=64 {
        let v = build_v::<f64>(n).unwrap();
        let m = v.matrix();
        assert!((m.transpose() * m - DMatrix::<f64>::identity(n - 1, n - 1)).amax() <= 1e-12);
        let e = DVector::from_element(n, 1.0);
        assert!((m.transpose() * &e).amax() <= 1e-12);
    }
}

#[test]
fn tri_len_counts_nonzero_slots_exhaustively() {
    for n in 2..=12 {
        for d in 1..=12 {
            let len = tri_len(n, d);
            let ones = TriVector::new(DVector::from_element(len, 1.0), n, d).unwrap();
            let slots = ltriag(&ones).iter().filter(|x| **x != 0.0).count();
            assert_eq!(slots, len, "n={n} d={d}");
        }
    }
}
