use cyclekit::cycle::{
    angle_cos_sq, center, equal_up_to_scale, flt_apply, flt_apply_point, inner, is_orthogonal, is_tangent,
    point_cycle, reflect, Cycle, Hyper, Metric, MoebiusMatrix, PointImage,
};
use cyclekit::symkern::rational::rat;
use cyclekit::symkern::{Expr, Probe, ZeroTest};
use proptest::prelude::*;

fn q() -> impl Strategy<Value = Expr> {
    (-12i64..12, 1i64..6).prop_map(|(n, d)| Expr::from_rational(rat(n, d)))
}

fn cycle() -> impl Strategy<Value = Cycle> {
    (q(), q(), q(), q())
        .prop_map(|(k, l, n, m)| Cycle::plane(k, l, n, m))
        .prop_filter("nonzero", |c| !c.is_syntactically_zero())
}

fn hyper() -> impl Strategy<Value = Hyper> {
    (q(), q()).prop_map(|(a, b)| Hyper::new(a, b))
}

fn matrix(s: i8) -> impl Strategy<Value = MoebiusMatrix> {
    (hyper(), hyper(), hyper(), hyper())
        .prop_map(|(a, b, c, d)| MoebiusMatrix::new(a, b, c, d))
        .prop_filter("invertible", move |m| !m.det(s).norm(s).is_zero())
}

fn invariance(c1: &Cycle, c2: &Cycle, m: &MoebiusMatrix, g: &Metric) -> Result<(), TestCaseError> {
    let p = Probe::default();
    let (i1, i2) = (flt_apply(c1, m, g, &p).unwrap(), flt_apply(c2, m, g, &p).unwrap());
    prop_assert_eq!(is_orthogonal(c1, c2, g, &p).unwrap(), is_orthogonal(&i1, &i2, g, &p).unwrap());
    prop_assert_eq!(is_tangent(c1, c2, g, &p).unwrap(), is_tangent(&i1, &i2, g, &p).unwrap());
    // the inner product scales by the norm of the determinant
    let s = g.sigma_cycle;
    let lhs = inner(&i1, &i2, g).unwrap();
    let rhs = &inner(c1, c2, g).unwrap() * &m.det(s).norm(s);
    prop_assert!((&lhs - &rhs).is_zero());
    Ok(())
}

/// The cycle with the given `k, l, n` passing through `(x, y)`.
fn through(x: &Expr, y: &Expr, k: Expr, l: Expr, n: Expr) -> Cycle {
    let m = &(&(&l * x).scale_rational(&rat(2, 1)) + &(&n * y).scale_rational(&rat(2, 1))) - &(&k * &(&x.square() + &y.square()));
    Cycle::plane(k, l, n, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inner_is_symmetric_bilinear(a in cycle(), b in cycle(), c in cycle(), lam in q()) {
        let g = Metric::plane(-1, 1);
        prop_assert_eq!(inner(&a, &b, &g).unwrap(), inner(&b, &a, &g).unwrap());
        prop_assert_eq!(inner(&a.scale(&lam), &b, &g).unwrap(), &inner(&a, &b, &g).unwrap() * &lam);
        let sum = Cycle::plane(&b.k + &c.k, &b.l[0] + &c.l[0], &b.l[1] + &c.l[1], &b.m + &c.m);
        prop_assert_eq!(inner(&a, &sum, &g).unwrap(), &inner(&a, &b, &g).unwrap() + &inner(&a, &c, &g).unwrap());
    }

    #[test]
    fn flt_preserves_predicates_elliptic(c1 in cycle(), c2 in cycle(), m in matrix(-1)) {
        invariance(&c1, &c2, &m, &Metric::euclidean())?;
    }

    #[test]
    fn flt_preserves_predicates_split_cycle_space(c1 in cycle(), c2 in cycle(), m in matrix(1)) {
        invariance(&c1, &c2, &m, &Metric::plane(-1, 1))?;
    }

    #[test]
    fn flt_preserves_tangent_pairs(x in q(), y in q(), k in q(), l in q(), t in q(), m in matrix(-1)) {
        let g = Metric::euclidean();
        let p = Probe::default();
        let pt = point_cycle(&[x.clone(), y.clone()], &g);
        let c = through(&x, &y, k, l, Expr::one());
        // the pencil c + t·P consists of cycles touching c at P
        let partner = Cycle::plane(&c.k + &(&t * &pt.k), &c.l[0] + &(&t * &pt.l[0]), &c.l[1] + &(&t * &pt.l[1]), &c.m + &(&t * &pt.m));
        prop_assert_eq!(is_tangent(&c, &partner, &g, &p).unwrap(), ZeroTest::Zero);
        let i1 = flt_apply(&c, &m, &g, &p).unwrap();
        let i2 = flt_apply(&partner, &m, &g, &p).unwrap();
        prop_assert_eq!(is_tangent(&i1, &i2, &g, &p).unwrap(), ZeroTest::Zero);
    }

    #[test]
    fn incidence_is_preserved(x in q(), y in q(), k in q(), l in q(), n in q(), m in matrix(-1)) {
        let g = Metric::euclidean();
        let p = Probe::default();
        let c = through(&x, &y, k, l, n);
        prop_assume!(!c.is_syntactically_zero());
        prop_assert_eq!(is_orthogonal(&point_cycle(&[x.clone(), y.clone()], &g), &c, &g, &p).unwrap(), ZeroTest::Zero);
        let image = flt_apply(&c, &m, &g, &p).unwrap();
        match flt_apply_point(&[x, y], &m, &g, &p).unwrap() {
            PointImage::Finite(w) => {
                prop_assert_eq!(is_orthogonal(&point_cycle(&w, &g), &image, &g, &p).unwrap(), ZeroTest::Zero);
            }
            PointImage::Infinity => prop_assert!(image.k.is_zero()),
        }
    }

    #[test]
    fn angle_is_scale_invariant(a in cycle(), b in cycle(), s1 in q(), s2 in q()) {
        let g = Metric::euclidean();
        let p = Probe::default();
        prop_assume!(!s1.is_zero() && !s2.is_zero());
        if let Ok(v) = angle_cos_sq(&a, &b, &g, &p) {
            prop_assert_eq!(angle_cos_sq(&a.scale(&s1), &b.scale(&s2), &g, &p).unwrap(), v);
        }
    }

    #[test]
    fn reflection_is_an_involution(mirror in cycle(), c in cycle(), sc in prop::sample::select(vec![-1i8, 0, 1])) {
        let g = Metric::plane(-1, sc);
        let p = Probe::default();
        prop_assume!(!inner(&mirror, &mirror, &g).unwrap().is_zero());
        let once = reflect(&mirror, &c, &g, &p).unwrap();
        let twice = reflect(&mirror, &once, &g, &p).unwrap();
        prop_assert_eq!(equal_up_to_scale(&twice, &c, &p), ZeroTest::Zero);
        prop_assert_eq!(equal_up_to_scale(&reflect(&mirror, &mirror, &g, &p).unwrap(), &mirror, &p), ZeroTest::Zero);
    }

    #[test]
    fn center_round_trip(x in q(), y in q(), sc in prop::sample::select(vec![-1i8, 0, 1])) {
        let g = Metric::plane(-1, sc);
        let c = point_cycle(&[x.clone(), y.clone()], &g);
        prop_assert_eq!(inner(&c, &c, &g).unwrap(), Expr::zero());
        prop_assert_eq!(center(&c, &Probe::default()).unwrap(), vec![x, y]);
    }
}
