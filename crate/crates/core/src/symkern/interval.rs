//! Outward-rounded interval arithmetic with dyadic endpoints.

use std::fmt;

use num_traits::{Signed, Zero};

use super::rational::{round_down, round_up, sqrt_bounds, to_f64, Rational};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn point(q: Rational) -> Interval {
        Interval { lo: q.clone(), hi: q }
    }

    pub fn new(lo: Rational, hi: Rational) -> Interval {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn contains(&self, q: &Rational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn mid_f64(&self) -> f64 {
        to_f64(&self.midpoint())
    }

    fn rounded(lo: Rational, hi: Rational, prec: u32) -> Interval {
        Interval { lo: round_down(&lo, prec), hi: round_up(&hi, prec) }
    }

    pub fn add(&self, other: &Interval, prec: u32) -> Interval {
        Interval::rounded(&self.lo + &other.lo, &self.hi + &other.hi, prec)
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn sub(&self, other: &Interval, prec: u32) -> Interval {
        self.add(&other.neg(), prec)
    }

    pub fn mul(&self, other: &Interval, prec: u32) -> Interval {
        super::budget::checkpoint();
        if self.lo == self.hi && other.lo == other.hi {
            let p = &self.lo * &other.lo;
            return Interval::rounded(p.clone(), p, prec);
        }
        let cands = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = cands.iter().min().cloned().unwrap_or_else(Rational::zero);
        let hi = cands.iter().max().cloned().unwrap_or_else(Rational::zero);
        Interval::rounded(lo, hi, prec)
    }

    /// Square root of an interval with non-negative lower end.
    pub fn sqrt(&self, prec: u32) -> Interval {
        debug_assert!(!self.lo.is_negative());
        let (lo, _) = sqrt_bounds(&self.lo, prec);
        let (_, hi) = sqrt_bounds(&self.hi, prec);
        Interval { lo, hi }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", to_f64(&self.lo), to_f64(&self.hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkern::rational::{int, rat};

    #[test]
    fn enclosure_of_products() {
        let a = Interval::new(int(-1), int(2));
        let b = Interval::new(int(3), int(4));
        let p = a.mul(&b, 64);
        assert_eq!((p.lo().clone(), p.hi().clone()), (int(-4), int(8)));
        let third = Interval::point(rat(1, 3)).mul(&Interval::point(int(1)), 20);
        assert!(third.contains(&rat(1, 3)));
        assert!(!third.contains_zero());
    }

    #[test]
    fn sqrt_of_two_is_tight() {
        let s = Interval::point(int(2)).sqrt(64);
        let sq = s.mul(&s, 80);
        assert!(sq.contains(&int(2)));
        assert!(to_f64(&s.width()) < 2f64.powi(-63) * 1.5);
    }
}
