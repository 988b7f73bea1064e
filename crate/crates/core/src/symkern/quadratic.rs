use super::expr::{Expr, Tower};
use super::zero::ZeroTest;
use super::SymError;

/// Roots of `a·x² + b·x + c`, `+` branch first. A vanishing `a` gives the
/// linear root and a vanishing discriminant a single repeated root.
pub fn solve_quadratic(a: &Expr, b: &Expr, c: &Expr, tower: &mut Tower) -> Result<Vec<Expr>, SymError> {
    let probe = tower.probe;
    if probe.zero_test(a) == ZeroTest::Zero {
        if probe.zero_test(b) == ZeroTest::Zero {
            return Err(SymError::Degenerate);
        }
        return Ok(vec![(-c).div_unchecked(b)?]);
    }
    let two_a = a * &Expr::int(2);
    let disc = &(b * b) - &(&(a * c) * &Expr::int(4));
    if probe.zero_test(&disc) == ZeroTest::Zero {
        return Ok(vec![(-b).div_unchecked(&two_a)?]);
    }
    let root = tower.adjoin_sqrt(&disc).expr;
    let plus = (&root - b).div_unchecked(&two_a)?;
    let minus = (&(-&root) - b).div_unchecked(&two_a)?;
    Ok(vec![plus, minus])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkern::poly::Param;

    #[test]
    fn irrational_pair() {
        let mut t = Tower::new();
        let r = solve_quadratic(&Expr::one(), &Expr::zero(), &Expr::int(-2), &mut t).unwrap();
        let s = t.adjoin_sqrt(&Expr::int(2)).expr;
        assert_eq!(r, vec![s.clone(), -&s]);
    }

    #[test]
    fn repeated_root() {
        let mut t = Tower::new();
        let r = solve_quadratic(&Expr::one(), &Expr::int(-2), &Expr::one(), &mut t).unwrap();
        assert_eq!(r, vec![Expr::one()]);
    }

    #[test]
    fn parametric_roots_satisfy_equation() {
        let mut t = Tower::new();
        let u = Expr::param(&Param::new("u"));
        let r = solve_quadratic(&Expr::one(), &Expr::zero(), &-&u, &mut t).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].to_string(), "sqrt(u)");
        for x in &r {
            assert!((&(x * x) - &u).is_zero());
        }
    }

    #[test]
    fn degenerate_and_linear() {
        let mut t = Tower::new();
        let z = Expr::zero();
        assert_eq!(solve_quadratic(&z, &z, &Expr::one(), &mut t), Err(SymError::Degenerate));
        let r = solve_quadratic(&z, &Expr::int(2), &Expr::int(-3), &mut t).unwrap();
        assert_eq!(r, vec![Expr::rat(3, 2)]);
    }

    #[test]
    fn perfect_square_discriminant_stays_rational() {
        let mut t = Tower::new();
        let u = Expr::param(&Param::new("u"));
        // x² − 2u·x + u² − 1 → u ± 1
        let r = solve_quadratic(&Expr::one(), &(&u * &Expr::int(-2)), &(&(&u * &u) - &Expr::one()), &mut t).unwrap();
        assert!(r.iter().all(Expr::is_atom_free));
        assert_eq!(t.len(), 0);
    }
}
