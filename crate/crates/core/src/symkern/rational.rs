//! Helpers around arbitrary-precision rationals.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact square root of a non-negative rational, if it is a perfect square.
pub fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = int_exact_sqrt(q.numer())?;
    let d = int_exact_sqrt(q.denom())?;
    Some(Rational::new(n, d))
}

pub fn int_exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

const TRIAL_PRIMES_BOUND: u32 = 10_000;

/// Splits a positive integer as `f² · s`, where `s` carries no square factor
/// among primes below the trial bound and is not itself a perfect square.
pub fn square_free_split(n: &BigInt) -> (BigInt, BigInt) {
    debug_assert!(n.is_positive());
    if let Some(r) = int_exact_sqrt(n) {
        return (r, BigInt::one());
    }
    let mut rest = n.clone();
    let mut factor = BigInt::one();
    let mut p = 2u32;
    while p < TRIAL_PRIMES_BOUND {
        let bp = BigInt::from(p);
        let pp = &bp * &bp;
        if pp > rest {
            break;
        }
        while (&rest % &pp).is_zero() {
            rest /= &pp;
            factor *= &bp;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if let Some(r) = int_exact_sqrt(&rest) {
        return (factor * r, BigInt::one());
    }
    (factor, rest)
}

/// Prime factors of a square-free `s` below the trial bound, followed by
/// any remaining cofactor.
pub fn radical_factors(s: &BigInt) -> Vec<BigInt> {
    let mut rest = s.clone();
    let mut out = Vec::new();
    let mut p = 2u32;
    while p < TRIAL_PRIMES_BOUND {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        if (&rest % &bp).is_zero() {
            rest /= &bp;
            out.push(bp);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > BigInt::one() {
        out.push(rest);
    }
    out
}

/// Writes `q > 0` as `a · √s` with rational `a` and square-free integer `s`.
pub fn sqrt_split(q: &Rational) -> (Rational, BigInt) {
    debug_assert!(q.is_positive());
    // √(n/d) = √(n·d) / d
    let nd = q.numer() * q.denom();
    let (f, s) = square_free_split(&nd);
    (Rational::new(f, q.denom().clone()), s)
}

/// floor(log2 |q|) for q ≠ 0.
pub fn floor_log2(q: &Rational) -> i64 {
    let n = q.numer().abs();
    let d = q.denom();
    let mut e = n.bits() as i64 - d.bits() as i64;
    // 2^e ≤ n/d < 2^(e+1), corrected by at most one step.
    if e >= 0 {
        if n < (d << e as usize) {
            e -= 1;
        }
    } else if (&n << (-e) as usize) < *d {
        e -= 1;
    }
    e
}

/// Rounds `q` down (toward −∞) to a dyadic rational with `prec` significant bits.
pub fn round_down(q: &Rational, prec: u32) -> Rational {
    round_dyadic(q, prec, false)
}

/// Rounds `q` up (toward +∞) to a dyadic rational with `prec` significant bits.
pub fn round_up(q: &Rational, prec: u32) -> Rational {
    round_dyadic(q, prec, true)
}

fn round_dyadic(q: &Rational, prec: u32, up: bool) -> Rational {
    if q.is_zero() {
        return q.clone();
    }
    let shift = prec as i64 - 1 - floor_log2(q);
    let scaled = if shift >= 0 {
        q * Rational::from_integer(BigInt::one() << shift as usize)
    } else {
        q / Rational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let r = if up { scaled.ceil() } else { scaled.floor() };
    if shift >= 0 {
        r / Rational::from_integer(BigInt::one() << shift as usize)
    } else {
        r * Rational::from_integer(BigInt::one() << (-shift) as usize)
    }
}

/// Lower and upper dyadic bounds of √q (q ≥ 0) with about `prec` bits.
pub fn sqrt_bounds(q: &Rational, prec: u32) -> (Rational, Rational) {
    if q.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    if let Some(r) = exact_sqrt(q) {
        return (r.clone(), r);
    }
    let half_log = Integer::div_floor(&floor_log2(q), &2);
    let s = (prec as i64 + 2 - half_log).max(0) as usize;
    // floor(√(q·4^s)) = isqrt(floor(q·4^s))
    let scaled = (q * Rational::from_integer(BigInt::one() << (2 * s))).floor().to_integer();
    let lo = scaled.sqrt();
    let denom = BigInt::one() << s;
    let lo_q = Rational::new(lo.clone(), denom.clone());
    let hi_q = Rational::new(lo + 1, denom);
    (lo_q, hi_q)
}

pub fn to_f64(q: &Rational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    let e = floor_log2(q);
    let unit = Rational::from_integer(BigInt::one() << e.unsigned_abs() as usize);
    let mantissa = if e >= 0 { q / unit } else { q * unit };
    let m = round_down(&mantissa, 60);
    let mf = m.numer().to_f64().unwrap_or(0.0) / m.denom().to_f64().unwrap_or(1.0);
    mf * 2f64.powi(e.clamp(-2000, 2000) as i32)
}

/// Exact conversion of a finite f64 into a rational.
pub fn from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

pub fn sign(q: &Rational) -> Sign {
    q.numer().sign()
}

/// Parses `123`, `-4/5` or a plain decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let q = Rational::new(n, d);
        return Some(if neg { -q } else { q });
    }
    s.parse::<BigInt>().ok().map(Rational::from_integer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_free_extraction() {
        assert_eq!(square_free_split(&BigInt::from(8)), (BigInt::from(2), BigInt::from(2)));
        assert_eq!(square_free_split(&BigInt::from(9)), (BigInt::from(3), BigInt::from(1)));
        assert_eq!(square_free_split(&BigInt::from(12)), (BigInt::from(2), BigInt::from(3)));
        // √(1/8) = √8 / 8 = 2√2/8
        assert_eq!(sqrt_split(&rat(1, 8)), (rat(1, 4), BigInt::from(2)));
    }

    #[test]
    fn log2_and_rounding() {
        assert_eq!(floor_log2(&int(1)), 0);
        assert_eq!(floor_log2(&int(7)), 2);
        assert_eq!(floor_log2(&int(8)), 3);
        assert_eq!(floor_log2(&rat(1, 3)), -2);
        assert_eq!(floor_log2(&rat(-1, 4)), -2);
        let third = rat(1, 3);
        let lo = round_down(&third, 10);
        let hi = round_up(&third, 10);
        assert!(lo < third && third < hi);
        assert!(&hi - &lo <= rat(1, 2048));
        assert_eq!(round_down(&rat(3, 4), 10), rat(3, 4));
    }

    #[test]
    fn sqrt_enclosure() {
        let (lo, hi) = sqrt_bounds(&int(2), 64);
        assert!(&lo * &lo < int(2) && int(2) < &hi * &hi);
        assert!(to_f64(&(&hi - &lo)) < 1e-18);
        assert_eq!(sqrt_bounds(&rat(9, 4), 64), (rat(3, 2), rat(3, 2)));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("-4/6"), Some(rat(-2, 3)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(rat(-3, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }
}
