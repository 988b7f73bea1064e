//! Rational functions in canonical form.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use super::poly::{Param, Poly};
use super::rational::Rational;

/// `num / den` with `gcd(num, den) = 1` and `den` monic; zero is `0 / 1`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn zero() -> RatFunc {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> RatFunc {
        RatFunc::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> RatFunc {
        RatFunc { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn param(p: Param) -> RatFunc {
        RatFunc::from_poly(Poly::var(p))
    }

    /// Builds `num / den` in canonical form. Panics if `den` is zero.
    pub fn new(num: Poly, den: Poly) -> RatFunc {
        assert!(!den.is_zero(), "rational function with zero denominator");
        super::budget::checkpoint();
        if num.is_zero() {
            return RatFunc::zero();
        }
        if let Some(c) = den.as_constant() {
            return RatFunc { num: num.scale(&c.recip()), den: Poly::one() };
        }
        let (num, den) = if num.is_constant() {
            (num, den)
        } else {
            let g = num.gcd(&den);
            if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
            }
        };
        let lc = den.leading_coeff();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = lc.recip();
            RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.den.is_one() && self.num.is_constant()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn params(&self) -> BTreeSet<Param> {
        let mut s = self.num.params();
        s.extend(self.den.params());
        s
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            if self.den.is_one() {
                return RatFunc::from_poly(self.num.add(&other.num));
            }
            return RatFunc::new(self.num.add(&other.num), self.den.clone());
        }
        RatFunc::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() || other.is_zero() {
            return RatFunc::zero();
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if self.den.is_one() && other.den.is_one() {
            return RatFunc::from_poly(self.num.mul(&other.num));
        }
        // both sides are reduced, so only cross gcds can cancel
        let cross = |n: &Poly, d: &Poly| {
            let g = n.gcd(d);
            if g.is_one() {
                (n.clone(), d.clone())
            } else {
                (n.div_exact(&g).expect("gcd divides"), d.div_exact(&g).expect("gcd divides"))
            }
        };
        let (n1, d2) = cross(&self.num, &other.den);
        let (n2, d1) = cross(&other.num, &self.den);
        let (num, den) = (n1.mul(&n2), d1.mul(&d2));
        let lc = den.leading_coeff();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = lc.recip();
            RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn scale(&self, c: &Rational) -> RatFunc {
        if c.is_zero() {
            return RatFunc::zero();
        }
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<RatFunc> {
        if self.is_zero() {
            return None;
        }
        Some(RatFunc::new(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &RatFunc) -> Option<RatFunc> {
        Some(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: u32) -> RatFunc {
        RatFunc { num: self.num.pow(e), den: self.den.pow(e) }
    }

    /// Evaluates at a rational point; `None` when a parameter is unassigned or
    /// the point is a pole.
    pub fn eval(&self, assign: &HashMap<Param, Rational>) -> Option<Rational> {
        let d = self.den.eval(assign)?;
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(assign)? / d)
    }

    /// Replaces parameter `p` with the rational function `v`.
    pub fn substitute(&self, p: &Param, v: &RatFunc) -> RatFunc {
        let num = substitute_poly(&self.num, p, v);
        let den = substitute_poly(&self.den, p, v);
        num.div(&den).expect("substitution made the denominator vanish")
    }

    /// Like `substitute` but reports a vanishing denominator.
    pub fn try_substitute(&self, p: &Param, v: &RatFunc) -> Option<RatFunc> {
        let num = substitute_poly(&self.num, p, v);
        let den = substitute_poly(&self.den, p, v);
        num.div(&den)
    }
}

fn substitute_poly(poly: &Poly, p: &Param, v: &RatFunc) -> RatFunc {
    if !poly.params().contains(p) {
        return RatFunc::from_poly(poly.clone());
    }
    // Horner in p
    let coeffs = poly.to_univariate(p);
    let mut acc = RatFunc::zero();
    for c in coeffs.iter().rev() {
        acc = acc.mul(v).add(&RatFunc::from_poly(c.clone()));
    }
    acc
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let num = self.num.to_string();
        let num = if self.num.len() > 1 || num.contains('/') { format!("({num})") } else { num };
        let den = if self.den.len() > 1 || !self.den.terms().all(|(m, c)| m.is_one() || c.is_one()) {
            format!("({})", self.den)
        } else {
            self.den.to_string()
        };
        write!(f, "{num}/{den}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkern::rational::{int, rat};

    fn u() -> RatFunc {
        RatFunc::param(Param::new("u"))
    }

    #[test]
    fn canonical_cancellation() {
        // (u² − 1) / (2u + 2) = (u − 1)/2
        let num = u().mul(&u()).sub(&RatFunc::one());
        let den = u().scale(&int(2)).add(&RatFunc::constant(int(2)));
        let q = num.div(&den).unwrap();
        assert!(q.is_polynomial());
        assert_eq!(q.to_string(), "1/2*u - 1/2");
    }

    #[test]
    fn monic_denominator() {
        let q = RatFunc::one().div(&u().scale(&int(3))).unwrap();
        assert_eq!(q.den().to_string(), "u");
        assert_eq!(q.num().to_string(), "1/3");
        assert_eq!(q.to_string(), "(1/3)/u");
    }

    #[test]
    fn substitution() {
        let q = u().mul(&u()).add(&RatFunc::one()).div(&u()).unwrap();
        let r = q.substitute(&Param::new("u"), &RatFunc::constant(rat(1, 2)));
        assert_eq!(r.as_constant(), Some(rat(5, 2)));
    }
}
