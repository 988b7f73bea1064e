//! Sparse multivariate polynomials over ℚ in named parameters.
//!
//! Monomials are ordered graded-lexicographically, with variables compared by
//! name. The leading term of a polynomial is its largest monomial.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::rational::Rational;

/// A free symbolic parameter, identified by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Param(Arc<str>);

impl Param {
    pub fn new(name: &str) -> Param {
        Param(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl fmt::Debug for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Power product of parameters; exponents are positive and variables sorted.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Monomial(Vec<(Param, u32)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn var(p: Param) -> Monomial {
        Monomial(vec![(p, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn vars(&self) -> &[(Param, u32)] {
        &self.0
    }

    pub fn exponent(&self, p: &Param) -> u32 {
        self.0.iter().find(|(q, _)| q == p).map_or(0, |(_, e)| *e)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::new();
        let mut j = 0;
        for (p, e) in &self.0 {
            let mut d = 0;
            if j < other.0.len() && other.0[j].0 == *p {
                d = other.0[j].1;
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *p {
                return None;
            }
            match e.cmp(&d) {
                Ordering::Less => return None,
                Ordering::Greater => out.push((p.clone(), e - d)),
                Ordering::Equal => {}
            }
        }
        (j == other.0.len()).then_some(Monomial(out))
    }

    /// Square root of the monomial when all exponents are even.
    pub fn sqrt(&self) -> Option<Monomial> {
        self.0
            .iter()
            .map(|(p, e)| (e % 2 == 0).then(|| (p.clone(), e / 2)))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }

    fn without(&self, p: &Param) -> Monomial {
        Monomial(self.0.iter().filter(|(q, _)| q != p).cloned().collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            // lex: compare exponents variable by variable, smallest name first
            let (mut i, mut j) = (0, 0);
            loop {
                match (self.0.get(i), other.0.get(j)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (Some((p, e)), Some((q, f))) => match p.cmp(q) {
                        Ordering::Less => return Ordering::Greater,
                        Ordering::Greater => return Ordering::Less,
                        Ordering::Equal => match e.cmp(f) {
                            Ordering::Equal => {
                                i += 1;
                                j += 1;
                            }
                            o => return o,
                        },
                    },
                }
            }
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(p: Param) -> Poly {
        Poly::monomial(Monomial::var(p), Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.contains_key(&Monomial::one()))
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> Rational {
        self.leading().map_or_else(Rational::zero, |(_, c)| c.clone())
    }

    pub fn total_degree(&self) -> u32 {
        self.leading().map_or(0, |(m, _)| m.degree())
    }

    pub fn params(&self) -> BTreeSet<Param> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(p, _)| p.clone()))
            .collect()
    }

    pub fn degree_in(&self, p: &Param) -> u32 {
        self.terms.keys().map(|m| m.exponent(p)).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        super::budget::checkpoint();
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Poly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rational) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(n, v)| (n.mul(m), v * c)).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Scales so the leading coefficient is one (zero stays zero).
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    /// Exact quotient when `d` divides `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (dm, dc) = d.leading()?;
        let (dm, dc) = (dm.clone(), dc.clone());
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(&dm)?;
            let c = rc / &dc;
            rem = rem.sub(&d.mul_monomial(&m, &c));
            quot.add_term(m, c);
        }
        Some(quot)
    }

    /// Exact square root (up to sign) when `self` is a perfect square.
    pub fn sqrt_exact(&self) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lm, lc) = self.leading()?;
        let root_m = lm.sqrt()?;
        let root_c = super::rational::exact_sqrt(lc)?;
        let lead = Poly::monomial(root_m.clone(), root_c.clone());
        let two_lead_m = root_m;
        let two_lead_c = root_c * Rational::from_integer(BigInt::from(2));
        let mut root = lead;
        let mut rem = self.sub(&root.mul(&root));
        // the remainder's leading monomial strictly decreases, so this terminates
        let mut guard = 100_000usize;
        while let Some((rm, rc)) = rem.leading() {
            if guard == 0 {
                return None;
            }
            guard -= 1;
            let m = rm.div(&two_lead_m)?;
            if m >= two_lead_m {
                return None;
            }
            let c = rc / &two_lead_c;
            let t = Poly::monomial(m, c);
            // (root + t)² = root² + 2·root·t + t²
            rem = rem.sub(&root.mul(&t).scale(&Rational::from_integer(BigInt::from(2))).add(&t.mul(&t)));
            root = root.add(&t);
        }
        Some(root)
    }

    pub fn eval(&self, assign: &HashMap<Param, Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (p, e) in m.vars() {
                let v = assign.get(p)?;
                t *= num_traits::pow(v.clone(), *e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Views the polynomial as univariate in `p`; index = power of `p`.
    pub fn to_univariate(&self, p: &Param) -> Vec<Poly> {
        let deg = self.degree_in(p) as usize;
        let mut coeffs = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exponent(p) as usize;
            coeffs[e].add_term(m.without(p), c.clone());
        }
        coeffs
    }

    pub fn from_univariate(p: &Param, coeffs: &[Poly]) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let xm = if e == 0 { Monomial::one() } else { Monomial(vec![(p.clone(), e as u32)]) };
            for (m, v) in &c.terms {
                out.add_term(m.mul(&xm), v.clone());
            }
        }
        out
    }

    /// Rational content: positive rational `c` such that `self / c` has coprime
    /// integer coefficients.
    pub fn rational_content(&self) -> Rational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return Rational::one();
        }
        Rational::new(num.abs(), den)
    }

    /// Greatest common divisor, normalized to leading coefficient one.
    pub fn gcd(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.monic();
        }
        if other.is_zero() {
            return self.monic();
        }
        if self.is_constant() || other.is_constant() {
            return Poly::one();
        }
        // pick a variable shared by both; otherwise the gcd lies in the content
        let vars_a = self.params();
        let vars_b = other.params();
        let shared: Vec<&Param> = vars_a.intersection(&vars_b).collect();
        let Some(x) = shared.last().cloned().cloned() else {
            // gcd of polynomials with disjoint variables is 1, unless each has a content
            return Poly::one();
        };
        let ua = self.to_univariate(&x);
        let ub = other.to_univariate(&x);
        let ca = content(&ua);
        let cb = content(&ub);
        let cont = ca.gcd(&cb);
        let pa = primitive(&ua, &ca);
        let pb = primitive(&ub, &cb);
        let g = univariate_prs_gcd(pa, pb);
        let g = Poly::from_univariate(&x, &g);
        g.mul(&cont).monic()
    }
}

fn content(coeffs: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        g = g.gcd(c);
        if g.is_one() {
            break;
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

fn primitive(coeffs: &[Poly], cont: &Poly) -> Vec<Poly> {
    coeffs
        .iter()
        .map(|c| c.div_exact(cont).expect("content divides coefficient"))
        .collect()
}

fn trim(v: &mut Vec<Poly>) {
    while v.len() > 1 && v.last().is_some_and(Poly::is_zero) {
        v.pop();
    }
}

/// Primitive pseudo-remainder sequence over the coefficient ring.
fn univariate_prs_gcd(mut a: Vec<Poly>, mut b: Vec<Poly>) -> Vec<Poly> {
    trim(&mut a);
    trim(&mut b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.iter().all(Poly::is_zero) {
            let c = content(&a);
            return primitive(&a, &c);
        }
        if b.len() == 1 {
            return vec![Poly::one()];
        }
        let r = pseudo_rem(&a, &b);
        let mut r = if r.iter().all(Poly::is_zero) {
            r
        } else {
            let c = content(&r);
            strip_rational_content(primitive(&r, &c))
        };
        trim(&mut r);
        a = b;
        b = r;
    }
}

/// Divides out the rational gcd of all coefficients.
fn strip_rational_content(v: Vec<Poly>) -> Vec<Poly> {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for c in &v {
        for q in c.terms.values() {
            num = num.gcd(q.numer());
            den = den.lcm(q.denom());
        }
    }
    if num.is_zero() {
        return v;
    }
    let inv = Rational::new(den, num);
    v.iter().map(|c| c.scale(&inv)).collect()
}

fn pseudo_rem(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lb = &b[db];
    while r.len() > db && !r.iter().all(Poly::is_zero) {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        if lr.is_zero() {
            r.pop();
            continue;
        }
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = c.mul(lb);
        }
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] = r[i + shift].sub(&bc.mul(&lr));
        }
        r.pop();
    }
    if r.is_empty() {
        r.push(Poly::zero());
    }
    r
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

pub(crate) fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                f.write_str(&fmt_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&a))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkern::rational::{int, rat};

    fn u() -> Poly {
        Poly::var(Param::new("u"))
    }
    fn v() -> Poly {
        Poly::var(Param::new("v"))
    }
    fn c(n: i64) -> Poly {
        Poly::constant(int(n))
    }

    #[test]
    fn grlex_order() {
        let pu = Param::new("u");
        let pv = Param::new("v");
        let u2 = Monomial(vec![(pu.clone(), 2)]);
        let uv = Monomial(vec![(pu.clone(), 1), (pv.clone(), 1)]);
        let v2 = Monomial(vec![(pv.clone(), 2)]);
        let u1 = Monomial::var(pu);
        assert!(u2 > uv && uv > v2 && v2 > u1 && u1 > Monomial::one());
    }

    #[test]
    fn arithmetic_and_display() {
        let p = u().add(&c(1)).mul(&u().sub(&c(1)));
        assert_eq!(p.to_string(), "u^2 - 1");
        let q = u().scale(&rat(3, 4)).add(&v().mul(&u()));
        assert_eq!(q.to_string(), "u*v + 3/4*u");
    }

    #[test]
    fn exact_division() {
        let p = u().pow(2).sub(&v().pow(2));
        let d = u().add(&v());
        assert_eq!(p.div_exact(&d), Some(u().sub(&v())));
        assert_eq!(p.div_exact(&u()), None);
    }

    #[test]
    fn gcd_multivariate() {
        let g = u().add(&v()).add(&c(2));
        let a = g.mul(&u().sub(&c(3)));
        let b = g.mul(&v().add(&u().pow(2)));
        assert_eq!(a.gcd(&b), g);
        assert_eq!(u().gcd(&v()), Poly::one());
        let a = u().pow(2).scale(&int(4)).sub(&c(4));
        let b = u().scale(&int(6)).add(&c(6));
        assert_eq!(a.gcd(&b), u().add(&c(1)));
    }

    #[test]
    fn perfect_square_root() {
        let r = u().add(&v()).sub(&c(3));
        let sq = r.mul(&r);
        let got = sq.sqrt_exact().unwrap();
        assert!(got == r || got == r.neg());
        assert_eq!(u().pow(2).add(&c(1)).sqrt_exact(), None);
        assert_eq!(c(9).sqrt_exact(), Some(c(3)));
    }
}
