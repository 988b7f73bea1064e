use std::collections::HashMap;

use cyclekit::symkern::rational::{exact_sqrt, int, rat};
use cyclekit::symkern::{solve_linear, solve_quadratic, Expr, Param, Probe, Rational, Tower, ZeroTest};
use proptest::prelude::*;

fn small_rat() -> impl Strategy<Value = Rational> {
    (-50i64..50, 1i64..20).prop_map(|(n, d)| rat(n, d))
}

/// Builds an expression over params u, v and atoms √2, √(u+3) from a recipe.
fn build(tower: &mut Tower, recipe: &[(i64, i64, u8)]) -> Expr {
    let u = Expr::param(&Param::new("u"));
    let v = Expr::param(&Param::new("v"));
    let s2 = tower.adjoin_sqrt(&Expr::int(2)).expr;
    let su = tower.adjoin_sqrt(&(&u + &Expr::int(3))).expr;
    let pieces = [Expr::one(), u.clone(), v.clone(), s2.clone(), su.clone(), &u * &s2, &v * &su, &s2 * &su];
    recipe.iter().fold(Expr::zero(), |acc, &(n, d, k)| {
        &acc + &pieces[k as usize % pieces.len()].scale_rational(&rat(n, d))
    })
}

fn recipe() -> impl Strategy<Value = Vec<(i64, i64, u8)>> {
    prop::collection::vec((-9i64..9, 1i64..5, 0u8..8), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn field_axioms(ra in recipe(), rb in recipe(), rc in recipe()) {
        let mut t = Tower::new();
        let (a, b, c) = (build(&mut t, &ra), build(&mut t, &rb), build(&mut t, &rc));
        prop_assert_eq!(t.probe.zero_test(&(&(&(&a + &b) + &c) - &(&a + &(&b + &c)))), ZeroTest::Zero);
        prop_assert_eq!(t.probe.zero_test(&(&(&a * &(&b + &c)) - &(&(&a * &b) + &(&a * &c)))), ZeroTest::Zero);
        prop_assert_eq!(t.probe.zero_test(&(&(&(&a * &b) * &c) - &(&a * &(&b * &c)))), ZeroTest::Zero);
    }

    #[test]
    fn division_inverts_multiplication(ra in recipe(), rb in recipe()) {
        let mut t = Tower::new();
        let (a, b) = (build(&mut t, &ra), build(&mut t, &rb));
        if let Ok(q) = a.div(&b, &t.probe) {
            prop_assert_eq!(t.probe.zero_test(&(&(&q * &b) - &a)), ZeroTest::Zero);
        }
    }

    #[test]
    fn conjugate_identity(x in small_rat(), y in small_rat(), d in 2i64..60) {
        let mut t = Tower::new();
        let s = t.adjoin_sqrt(&Expr::int(d)).expr;
        let (xe, ye) = (Expr::from_rational(x.clone()), Expr::from_rational(y.clone()));
        let lhs = &(&xe + &(&ye * &s)) * &(&xe - &(&ye * &s));
        let rhs = Expr::from_rational(&x * &x - int(d) * &y * &y);
        prop_assert_eq!(t.probe.zero_test(&(&lhs - &rhs)), ZeroTest::Zero);
    }

    #[test]
    fn numeric_consistency(ra in recipe(), rb in recipe(), un in 0i64..100, vn in -50i64..50) {
        let mut t = Tower::new();
        let (a, b) = (build(&mut t, &ra), build(&mut t, &rb));
        let mut assign = HashMap::new();
        assign.insert(Param::new("u"), rat(un, 7));
        assign.insert(Param::new("v"), rat(vn, 3));
        let zero = &(&a * &b) - &(&b * &a);
        prop_assert!(zero.eval(&assign, 64).unwrap().contains_zero());
        if t.probe.zero_test(&a) == ZeroTest::NonZero && a.params().is_empty() {
            let excluded = [64, 128, 256].iter().any(|&bits| !a.eval(&assign, bits).unwrap().contains_zero());
            prop_assert!(excluded);
        }
    }

    #[test]
    fn linear_residual(n in 1usize..7, m in 1usize..7, entries in prop::collection::vec(-4i64..5, 42), rhs in prop::collection::vec(-9i64..9, 6)) {
        let a: Vec<Vec<Expr>> = (0..n).map(|i| (0..m).map(|j| Expr::int(entries[i * 6 + j])).collect()).collect();
        let b: Vec<Expr> = rhs[..n].iter().map(|&x| Expr::int(x)).collect();
        let probe = Probe::default();
        if let Ok(sol) = solve_linear(&a, &b, &probe) {
            for (row, bi) in a.iter().zip(&b) {
                let r = cyclekit::symkern::linear::dot(row, &sol.particular);
                prop_assert!((&r - bi).is_zero());
                for v in &sol.nullspace {
                    prop_assert!(cyclekit::symkern::linear::dot(row, v).is_zero());
                }
            }
            prop_assert_eq!(sol.nullspace.len() + rank(&a, &probe), m);
        }
    }

    #[test]
    fn vieta(a in small_rat(), b in small_rat(), c in small_rat()) {
        prop_assume!(a != int(0));
        let mut t = Tower::new();
        let (ae, be, ce) = (Expr::from_rational(a.clone()), Expr::from_rational(b.clone()), Expr::from_rational(c.clone()));
        let roots = solve_quadratic(&ae, &be, &ce, &mut t).unwrap();
        let (r1, r2) = if roots.len() == 2 { (roots[0].clone(), roots[1].clone()) } else { (roots[0].clone(), roots[0].clone()) };
        prop_assert_eq!(t.probe.zero_test(&(&(&r1 * &r2) - &Expr::from_rational(&c / &a))), ZeroTest::Zero);
        prop_assert_eq!(t.probe.zero_test(&(&(&r1 + &r2) + &Expr::from_rational(&b / &a))), ZeroTest::Zero);
    }

    #[test]
    fn rational_square_roots_are_canonical(n in 1i64..500, d in 1i64..50) {
        let mut t = Tower::new();
        let q = rat(n, d);
        let r = t.adjoin_sqrt(&Expr::from_rational(q.clone()));
        prop_assert_eq!(r.atom.is_none(), exact_sqrt(&q).is_some());
        prop_assert!((&r.expr.square() - &Expr::from_rational(q)).is_zero());
    }
}

fn rank(a: &[Vec<Expr>], probe: &Probe) -> usize {
    let m = a[0].len();
    let zero = vec![Expr::zero(); a.len()];
    solve_linear(a, &zero, probe).map(|s| m - s.nullspace.len()).unwrap()
}

#[test]
fn normal_form_is_idempotent() {
    let mut t = Tower::new();
    let e = build(&mut t, &[(1, 2, 3), (3, 1, 6), (-2, 3, 7), (5, 1, 1)]);
    let once = cyclekit::symkern::parse_expr(&e.to_string(), &mut t).unwrap();
    assert_eq!(once, e);
    assert_eq!(&once * &Expr::one(), e);
}
