//! Three-valued zero testing.

use std::collections::HashMap;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expr;
use super::poly::Param;
use super::rational::Rational;
use super::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ZeroTest {
    Zero,
    NonZero,
    Unknown,
}

impl ZeroTest {
    pub fn is_zero(self) -> bool {
        self == ZeroTest::Zero
    }

    pub fn is_nonzero(self) -> bool {
        self == ZeroTest::NonZero
    }

    /// Verdict text used in reports: a zero residual means the relation holds.
    pub fn verdict(self) -> &'static str {
        match self {
            ZeroTest::Zero => "True",
            ZeroTest::NonZero => "False",
            ZeroTest::Unknown => "Unknown",
        }
    }
}

pub const DEFAULT_BITS: u32 = 64;
const SAMPLE_BOUND: i64 = 1_000_000;
const ASSIGNMENTS: usize = 3;
const MAX_TRIES: usize = 12;

/// Settings for numeric certification: RNG seed and base precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Probe {
    pub seed: u64,
    pub bits: u32,
}

impl Default for Probe {
    fn default() -> Self {
        Probe { seed: 0x5eed, bits: DEFAULT_BITS }
    }
}

impl Probe {
    pub fn new(seed: u64, bits: u32) -> Probe {
        Probe { seed, bits: bits.max(16) }
    }

    fn precisions(&self) -> [u32; 3] {
        let b = self.bits;
        [b, (2 * b).max(128), (4 * b).max(256)]
    }

    /// Classifies `e` as zero, certainly nonzero, or undecided.
    ///
    /// Structural checks come first. Otherwise the expression is evaluated at
    /// seeded random rational assignments with increasing precision; any
    /// enclosure excluding zero certifies `NonZero`.
    pub fn zero_test(&self, e: &Expr) -> ZeroTest {
        if e.is_zero() {
            return ZeroTest::Zero;
        }
        if e.is_atom_free() {
            return ZeroTest::NonZero;
        }
        if e.term_count() == 1 && e.atoms().iter().all(|a| a.radicand().is_atom_free()) {
            return ZeroTest::NonZero;
        }
        let params: Vec<Param> = e.params().into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut done = 0;
        for _ in 0..MAX_TRIES {
            if done == ASSIGNMENTS {
                break;
            }
            let assign = sample(&params, &mut rng);
            match self.certify(e, &assign) {
                Ok(true) => return ZeroTest::NonZero,
                Ok(false) => done += 1,
                Err(EvalError::IndeterminateSign) => done += 1,
                Err(_) => {}
            }
            if params.is_empty() {
                break;
            }
        }
        ZeroTest::Unknown
    }

    fn certify(&self, e: &Expr, assign: &HashMap<Param, Rational>) -> Result<bool, EvalError> {
        let mut last = Err(EvalError::IndeterminateSign);
        for bits in self.precisions() {
            match e.eval(assign, bits) {
                Ok(iv) if !iv.contains_zero() => return Ok(true),
                Ok(_) => last = Ok(false),
                Err(EvalError::IndeterminateSign) => {}
                Err(err) => return Err(err),
            }
        }
        last
    }

    /// Seeded random rational assignment for the given parameters.
    pub fn sample_assignment(&self, params: &[Param], round: u64) -> HashMap<Param, Rational> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        sample(params, &mut rng)
    }
}

fn sample(params: &[Param], rng: &mut ChaCha8Rng) -> HashMap<Param, Rational> {
    params
        .iter()
        .map(|p| {
            let n = rng.gen_range(-SAMPLE_BOUND..=SAMPLE_BOUND);
            let d = rng.gen_range(1..=SAMPLE_BOUND);
            (p.clone(), Rational::new(BigInt::from(n), BigInt::from(d)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkern::expr::Tower;

    #[test]
    fn defining_relation_is_zero() {
        let mut t = Tower::new();
        let s = t.adjoin_sqrt(&Expr::int(2)).expr;
        assert_eq!(t.probe.zero_test(&(&s * &s - Expr::int(2))), ZeroTest::Zero);
        assert_eq!(t.probe.zero_test(&Expr::rat(5, 6)), ZeroTest::NonZero);
        assert_eq!(t.probe.zero_test(&(&s - Expr::one())), ZeroTest::NonZero);
    }

    #[test]
    fn independent_atoms_are_unknown() {
        let mut t = Tower::new();
        let u = Expr::param(&Param::new("u"));
        let a = t.adjoin_sqrt(&u).expr;
        let b = t.adjoin_sqrt(&(&u + Expr::int(2))).expr;
        let c = t.adjoin_sqrt(&(&u * &u + Expr::int(2) * &u)).expr;
        assert_eq!(t.probe.zero_test(&(&a * &b - &c)), ZeroTest::Unknown);
        // a·b + c is certainly nonzero where defined
        assert_eq!(t.probe.zero_test(&(&a * &b + &c)), ZeroTest::NonZero);
    }

    #[test]
    fn probing_is_deterministic() {
        let p = Probe::new(7, 64);
        let params = [Param::new("u"), Param::new("v")];
        assert_eq!(p.sample_assignment(&params, 3), p.sample_assignment(&params, 3));
    }
}
