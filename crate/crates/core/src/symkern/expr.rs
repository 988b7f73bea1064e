//! Exact scalars: rational functions extended by a tower of square roots.
//!
//! An [`Expr`] is kept in multilinear normal form: a sum of terms
//! `coefficient · s₁·s₂·…` where every square-root atom appears at most once
//! per term. Products that repeat an atom are rewritten with the atom's
//! radicand, which only mentions atoms created earlier.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::interval::Interval;
use super::poly::{Param, Poly};
use super::ratfunc::RatFunc;
use super::rational::{radical_factors, sqrt_split, Rational};
use super::zero::{Probe, ZeroTest};
use super::{EvalError, SymError};

static NEXT_ATOM_ID: AtomicU64 = AtomicU64::new(1);

struct AtomData {
    id: u64,
    radicand: Expr,
    text: String,
}

/// A formal square root `s` with `s² = radicand`.
///
/// Identity is the allocation id. Ids grow monotonically, so a radicand only
/// ever mentions atoms with smaller ids.
#[derive(Clone)]
pub struct Atom(Arc<AtomData>);

impl Atom {
    fn create(radicand: Expr) -> Atom {
        let id = NEXT_ATOM_ID.fetch_add(1, AtomicOrdering::Relaxed);
        let text = format!("sqrt({radicand})");
        Atom(Arc::new(AtomData { id, radicand, text }))
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn radicand(&self) -> &Expr {
        &self.0.radicand
    }

    /// Canonical text, `sqrt(<radicand>)`.
    pub fn text(&self) -> &str {
        &self.0.text
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state);
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.id.cmp(&other.0.id)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}={}", self.0.id, self.0.text)
    }
}

/// Sorted set of distinct atoms forming one multilinear monomial.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct AtomSet(Vec<Atom>);

impl AtomSet {
    pub fn empty() -> AtomSet {
        AtomSet(Vec::new())
    }

    pub fn single(a: Atom) -> AtomSet {
        AtomSet(vec![a])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.0.binary_search(a).is_ok()
    }

    /// Returns `(self ∩ other, self △ other)`.
    fn meet(&self, other: &AtomSet) -> (Vec<Atom>, AtomSet) {
        let mut common = Vec::new();
        let mut sym = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => {
                    sym.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    sym.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    common.push(self.0[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        sym.extend_from_slice(&self.0[i..]);
        sym.extend_from_slice(&other.0[j..]);
        (common, AtomSet(sym))
    }

    fn without(&self, a: &Atom) -> AtomSet {
        AtomSet(self.0.iter().filter(|b| *b != a).cloned().collect())
    }

    fn display_key(&self) -> (usize, Vec<&str>) {
        let mut texts: Vec<&str> = self.0.iter().map(Atom::text).collect();
        texts.sort_unstable();
        (texts.len(), texts)
    }
}

/// Exact scalar in multilinear normal form; no stored coefficient is zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Expr {
    terms: BTreeMap<AtomSet, RatFunc>,
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::default()
    }

    pub fn one() -> Expr {
        Expr::from_ratfunc(RatFunc::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::from_rational(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_rational(q: Rational) -> Expr {
        Expr::from_ratfunc(RatFunc::constant(q))
    }

    pub fn from_ratfunc(r: RatFunc) -> Expr {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(AtomSet::empty(), r);
        }
        Expr { terms }
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr::from_ratfunc(RatFunc::from_poly(p))
    }

    pub fn param(p: &Param) -> Expr {
        Expr::from_ratfunc(RatFunc::param(p.clone()))
    }

    pub fn atom(a: &Atom) -> Expr {
        let mut terms = BTreeMap::new();
        terms.insert(AtomSet::single(a.clone()), RatFunc::one());
        Expr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().is_some_and(|q| q.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&AtomSet, &RatFunc)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Total monomial count over all coefficients, a rough cost measure.
    pub fn size(&self) -> usize {
        self.terms.values().map(|c| c.num().len() + c.den().len()).sum()
    }

    pub fn is_atom_free(&self) -> bool {
        self.terms.keys().all(AtomSet::is_empty)
    }

    /// The value as a rational function, when no atom occurs.
    pub fn as_ratfunc(&self) -> Option<RatFunc> {
        match self.terms.len() {
            0 => Some(RatFunc::zero()),
            1 => self.terms.get(&AtomSet::empty()).cloned(),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.as_ratfunc()?.as_constant()
    }

    /// Atoms occurring directly in the terms (not inside radicands).
    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms.keys().flat_map(|s| s.0.iter().cloned()).collect()
    }

    /// Atoms occurring anywhere, including inside radicands.
    pub fn all_atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<Atom> = self.atoms().into_iter().collect();
        while let Some(a) = stack.pop() {
            if out.insert(a.clone()) {
                stack.extend(a.radicand().atoms());
            }
        }
        out
    }

    /// Parameters occurring anywhere, including inside radicands.
    pub fn params(&self) -> BTreeSet<Param> {
        let mut out = BTreeSet::new();
        for c in self.terms.values() {
            out.extend(c.params());
        }
        for a in self.all_atoms() {
            for c in a.radicand().terms.values() {
                out.extend(c.params());
            }
        }
        out
    }

    pub fn top_atom(&self) -> Option<Atom> {
        self.terms.keys().filter_map(|s| s.0.last()).max().cloned()
    }

    fn add_term(&mut self, set: AtomSet, c: RatFunc) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(set) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().add(&c);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn mul_term_into(out: &mut Expr, a: &AtomSet, ca: &RatFunc, b: &AtomSet, cb: &RatFunc) {
        let (common, sym) = a.meet(b);
        let coeff = ca.mul(cb);
        if common.is_empty() {
            out.add_term(sym, coeff);
            return;
        }
        // s² = radicand; every radicand mentions only smaller atoms
        let mut factor = Expr::one();
        for s in &common {
            factor = &factor * s.radicand();
        }
        for (fs, fc) in &factor.terms {
            Expr::mul_term_into(out, fs, fc, &sym, &coeff);
        }
    }

    pub fn scale(&self, c: &RatFunc) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self.terms.iter().map(|(s, v)| (s.clone(), v.mul(c))).collect(),
        }
    }

    pub fn scale_rational(&self, q: &Rational) -> Expr {
        self.scale(&RatFunc::constant(q.clone()))
    }

    pub fn pow(&self, mut e: u32) -> Expr {
        let mut base = self.clone();
        let mut acc = Expr::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn square(&self) -> Expr {
        self * self
    }

    /// Writes `self = p + q·s` where neither `p` nor `q` contains `s`.
    pub fn split(&self, s: &Atom) -> (Expr, Expr) {
        let mut p = Expr::zero();
        let mut q = Expr::zero();
        for (set, c) in &self.terms {
            if set.contains(s) {
                q.add_term(set.without(s), c.clone());
            } else {
                p.add_term(set.clone(), c.clone());
            }
        }
        (p, q)
    }

    /// Division with a three-valued zero test on the divisor.
    pub fn div(&self, d: &Expr, probe: &Probe) -> Result<Expr, SymError> {
        match probe.zero_test(d) {
            ZeroTest::Zero => Err(SymError::DivisionByZero),
            ZeroTest::Unknown => Err(SymError::DivisionUnknown),
            ZeroTest::NonZero => self.div_unchecked(d),
        }
    }

    /// Division without probing the divisor. Rationalizes the denominator one
    /// atom at a time, highest atom first.
    pub fn div_unchecked(&self, d: &Expr) -> Result<Expr, SymError> {
        if d.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        let mut num = self.clone();
        let mut den = d.clone();
        while let Some(s) = den.top_atom() {
            let (p, q) = den.split(&s);
            let conj = &p - &(&q * &Expr::atom(&s));
            let norm = &(&p * &p) - &(&(&q * &q) * s.radicand());
            if norm.is_zero() {
                return Err(SymError::DivisionUnknown);
            }
            num = &num * &conj;
            den = norm;
        }
        let r = den.as_ratfunc().and_then(|r| r.inv()).ok_or(SymError::DivisionByZero)?;
        Ok(num.scale(&r))
    }

    pub fn inv(&self, probe: &Probe) -> Result<Expr, SymError> {
        Expr::one().div(self, probe)
    }

    /// Encloses the value at a rational parameter assignment.
    pub fn eval(&self, assign: &HashMap<Param, Rational>, bits: u32) -> Result<Interval, EvalError> {
        let mut memo = HashMap::new();
        self.eval_memo(assign, bits + 16, &mut memo)
    }

    fn eval_memo(
        &self,
        assign: &HashMap<Param, Rational>,
        prec: u32,
        memo: &mut HashMap<u64, Interval>,
    ) -> Result<Interval, EvalError> {
        let mut acc = Interval::point(Rational::zero());
        for (set, c) in &self.terms {
            let cv = match c.eval(assign) {
                Some(v) => v,
                None => {
                    if let Some(p) = c.params().into_iter().find(|p| !assign.contains_key(p)) {
                        return Err(EvalError::Unassigned(p.name().to_string()));
                    }
                    return Err(EvalError::Pole);
                }
            };
            let mut t = Interval::point(cv);
            for a in set.atoms() {
                let av = match memo.get(&a.id()) {
                    Some(v) => v.clone(),
                    None => {
                        let r = a.radicand().eval_memo(assign, prec, memo)?;
                        if r.is_negative() {
                            return Err(EvalError::NegativeRadicand);
                        }
                        if r.lo().is_negative() {
                            return Err(EvalError::IndeterminateSign);
                        }
                        let v = r.sqrt(prec);
                        memo.insert(a.id(), v.clone());
                        v
                    }
                };
                t = t.mul(&av, prec);
            }
            acc = acc.add(&t, prec);
        }
        Ok(acc)
    }

    /// Replaces `p` by `v` everywhere, rebuilding radicands that mention `p`.
    pub fn substitute(&self, p: &Param, v: &Expr, tower: &mut Tower) -> Result<Expr, SymError> {
        if v.all_atoms().iter().any(|a| a.radicand().params().contains(p)) {
            return Err(SymError::CyclicSubstitution);
        }
        if !self.params().contains(p) {
            return Ok(self.clone());
        }
        let mut atom_images: HashMap<u64, Expr> = HashMap::new();
        let mut out = Expr::zero();
        for (set, c) in &self.terms {
            let mut t = substitute_ratfunc(c, p, v, &tower.probe)?;
            for a in set.atoms() {
                let img = match atom_images.get(&a.id()) {
                    Some(e) => e.clone(),
                    None => {
                        let e = if a.radicand().params().contains(p) {
                            let r = a.radicand().substitute(p, v, tower)?;
                            tower.adjoin_sqrt(&r).expr
                        } else {
                            Expr::atom(a)
                        };
                        atom_images.insert(a.id(), e.clone());
                        e
                    }
                };
                t = &t * &img;
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Applies every assignment in turn; values must be parameter-free.
    pub fn substitute_all(&self, assign: &BTreeMap<Param, Expr>, tower: &mut Tower) -> Result<Expr, SymError> {
        let mut e = self.clone();
        for (p, v) in assign {
            e = e.substitute(p, v, tower)?;
        }
        Ok(e)
    }
}

fn substitute_poly(poly: &Poly, p: &Param, v: &Expr) -> Expr {
    let coeffs = poly.to_univariate(p);
    let mut acc = Expr::zero();
    for c in coeffs.iter().rev() {
        acc = &(&acc * v) + &Expr::from_poly(c.clone());
    }
    acc
}

fn substitute_ratfunc(c: &RatFunc, p: &Param, v: &Expr, probe: &Probe) -> Result<Expr, SymError> {
    if !c.params().contains(p) {
        return Ok(Expr::from_ratfunc(c.clone()));
    }
    if let Some(rv) = v.as_ratfunc() {
        return c
            .try_substitute(p, &rv)
            .map(Expr::from_ratfunc)
            .ok_or(SymError::DivisionByZero);
    }
    let num = substitute_poly(c.num(), p, v);
    if c.den().is_one() {
        return Ok(num);
    }
    let den = substitute_poly(c.den(), p, v);
    num.div(&den, probe)
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        let (mut big, small) = if self.terms.len() >= rhs.terms.len() { (self.clone(), rhs) } else { (rhs.clone(), self) };
        for (s, c) in &small.terms {
            big.add_term(s.clone(), c.clone());
        }
        big
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        for (s, c) in &rhs.terms {
            out.add_term(s.clone(), c.neg());
        }
        out
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        let mut out = Expr::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                Expr::mul_term_into(&mut out, a, ca, b, cb);
            }
        }
        out
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c.neg())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(q: Rational) -> Expr {
        Expr::from_rational(q)
    }
}

fn coeff_is_negative(c: &RatFunc) -> bool {
    let mut it = c.num().terms();
    matches!((it.next(), it.next()), (Some((_, v)), None) if v.is_negative())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut terms: Vec<(&AtomSet, &RatFunc)> = self.terms.iter().collect();
        terms.sort_by(|a, b| a.0.display_key().cmp(&b.0.display_key()));
        for (i, (set, c)) in terms.into_iter().enumerate() {
            let neg = coeff_is_negative(c);
            let c = if neg { c.neg() } else { c.clone() };
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let mut atoms: Vec<&str> = set.atoms().iter().map(Atom::text).collect();
            atoms.sort_unstable();
            let atoms = atoms.join("*");
            let cs = c.to_string();
            if atoms.is_empty() {
                if i > 0 && c.num().len() > 1 && c.den().is_one() {
                    write!(f, "({cs})")?;
                } else {
                    f.write_str(&cs)?;
                }
            } else if c.is_one() {
                f.write_str(&atoms)?;
            } else if cs.contains(' ') {
                write!(f, "({cs})*{atoms}")?;
            } else {
                write!(f, "{cs}*{atoms}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

/// A square root of `e` inside the field generated by its own atoms, if one
/// exists. `p + q·s` squares to `R₀ + R₁·s` exactly when
/// `p² = (R₀ ± √(R₀² − R₁²·s²)) / 2` and `q = R₁ / (2p)`.
pub fn exact_sqrt_expr(e: &Expr) -> Option<Expr> {
    if e.is_zero() {
        return Some(Expr::zero());
    }
    let Some(s) = e.top_atom() else {
        let rf = e.as_ratfunc()?;
        let num = rf.num();
        let content = num.rational_content();
        let sign_fixed = if num.leading_coeff().is_negative() { -content.clone() } else { content.clone() };
        let c = super::rational::exact_sqrt(&sign_fixed)?;
        let f = num.scale(&sign_fixed.recip()).sqrt_exact()?;
        let d = rf.den().sqrt_exact()?;
        return Some(Expr::from_ratfunc(RatFunc::new(f.scale(&c), d)));
    };
    let (r0, r1) = e.split(&s);
    if r1.is_zero() {
        return exact_sqrt_expr(&r0);
    }
    let delta = &r0.square() - &(&r1.square() * s.radicand());
    let d = exact_sqrt_expr(&delta)?;
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    for sign in [1i64, -1] {
        let p2 = (&r0 + &d.scale_rational(&Rational::from_integer(BigInt::from(sign)))).scale_rational(&half);
        if p2.is_zero() {
            continue;
        }
        let Some(p) = exact_sqrt_expr(&p2) else { continue };
        let Ok(q) = r1.div_unchecked(&p.scale_rational(&Rational::from_integer(BigInt::from(2)))) else { continue };
        let root = &p + &(&q * &Expr::atom(&s));
        if (&root.square() - e).is_zero() {
            return Some(root);
        }
    }
    None
}

/// Result of adjoining a square root.
#[derive(Clone, Debug)]
pub struct SquareRoot {
    /// An expression whose square is the radicand.
    pub expr: Expr,
    /// The last atom the root was built from, if one was needed.
    pub atom: Option<Atom>,
}

/// Registry of square-root atoms for one figure. Adjoining the same
/// canonical radicand twice yields the same atom.
#[derive(Clone, Default)]
pub struct Tower {
    index: HashMap<Expr, Atom>,
    pub probe: Probe,
}

impl fmt::Debug for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tower").field("atoms", &self.index.len()).field("probe", &self.probe).finish()
    }
}

impl Tower {
    pub fn new() -> Tower {
        Tower::default()
    }

    pub fn with_probe(probe: Probe) -> Tower {
        Tower { index: HashMap::new(), probe }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    fn raw_atom(&mut self, radicand: Expr) -> Atom {
        if let Some(a) = self.index.get(&radicand) {
            return a.clone();
        }
        let a = Atom::create(radicand.clone());
        self.index.insert(radicand, a.clone());
        a
    }

    /// Adjoins `√radicand`.
    ///
    /// Rational radicands have their square factors extracted and the rest
    /// split into primes, so `√8` becomes `2·√2`, `√6` becomes `√2·√3` and
    /// `√9` becomes `3`. A parameter-dependent rational
    /// function `N/D` is rewritten as `√(N·D)/D` with the rational content
    /// of `N·D` split off the same way, leaving a primitive polynomial atom.
    pub fn adjoin_sqrt(&mut self, radicand: &Expr) -> SquareRoot {
        if radicand.is_zero() {
            return SquareRoot { expr: Expr::zero(), atom: None };
        }
        let Some(rf) = radicand.as_ratfunc() else {
            if let Some(r) = exact_sqrt_expr(radicand) {
                let negative = r.params().is_empty()
                    && r.eval(&HashMap::new(), self.probe.bits).is_ok_and(|iv| iv.is_negative());
                return SquareRoot { expr: if negative { -r } else { r }, atom: None };
            }
            let a = self.raw_atom(radicand.clone());
            return SquareRoot { expr: Expr::atom(&a), atom: Some(a) };
        };
        let poly = rf.num().mul(rf.den());
        let back = RatFunc::new(Poly::one(), rf.den().clone());
        let content = poly.rational_content();
        let primitive = poly.scale(&content.recip());
        let (coef, free) = sqrt_split(&content);
        let mut expr = Expr::from_ratfunc(back).scale_rational(&coef);
        let mut radicands: Vec<Expr> = Vec::new();
        if !free.is_one() {
            radicands.extend(radical_factors(&free).into_iter().map(|f| Expr::from_rational(Rational::from_integer(f))));
        }
        if let Some(g) = primitive.sqrt_exact() {
            expr = &expr * &Expr::from_poly(g);
        } else {
            radicands.push(Expr::from_poly(primitive));
        }
        let mut atom = None;
        for r in radicands {
            let a = self.raw_atom(r);
            expr = &expr * &Expr::atom(&a);
            atom = Some(a);
        }
        SquareRoot { expr, atom }
    }

    /// Re-registers every atom of `e` in this tower, replacing atoms whose
    /// radicand is already known here by the registered one.
    pub fn adopt(&mut self, e: &Expr) -> Expr {
        let mut memo: HashMap<u64, Expr> = HashMap::new();
        self.adopt_memo(e, &mut memo)
    }

    fn adopt_memo(&mut self, e: &Expr, memo: &mut HashMap<u64, Expr>) -> Expr {
        if e.is_atom_free() {
            return e.clone();
        }
        let mut out = Expr::zero();
        for (set, c) in &e.terms {
            let mut t = Expr::from_ratfunc(c.clone());
            for a in set.atoms() {
                let img = match memo.get(&a.id()) {
                    Some(x) => x.clone(),
                    None => {
                        let r = self.adopt_memo(a.radicand(), memo);
                        let x = self.adjoin_sqrt(&r).expr;
                        memo.insert(a.id(), x.clone());
                        x
                    }
                };
                t = &t * &img;
            }
            out = &out + &t;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkern::rational::{int, rat};

    fn p(name: &str) -> Expr {
        Expr::param(&Param::new(name))
    }

    #[test]
    fn rational_arithmetic() {
        let a = Expr::rat(2, 3) + Expr::rat(1, 6);
        assert_eq!(a.as_rational(), Some(rat(5, 6)));
    }

    #[test]
    fn conjugate_product() {
        let mut t = Tower::new();
        let s = t.adjoin_sqrt(&Expr::int(2)).expr;
        let prod = (Expr::one() + &s) * (Expr::one() - &s);
        assert_eq!(prod.as_rational(), Some(int(-1)));
    }

    #[test]
    fn rationalized_division() {
        let mut t = Tower::new();
        let s = t.adjoin_sqrt(&Expr::int(2)).expr;
        let q = Expr::one().div(&(Expr::one() + &s), &t.probe).unwrap();
        assert_eq!(q, &s - &Expr::one());
        assert_eq!(q.to_string(), "-1 + sqrt(2)");
    }

    #[test]
    fn nested_rationalization() {
        let mut t = Tower::new();
        let s2 = t.adjoin_sqrt(&Expr::int(2)).expr;
        let s3 = t.adjoin_sqrt(&Expr::int(3)).expr;
        let d = Expr::one() + &s2 + &s3;
        let q = Expr::one().div(&d, &t.probe).unwrap();
        assert!((&q * &d).is_one());
    }

    #[test]
    fn square_extraction() {
        let mut t = Tower::new();
        let r = t.adjoin_sqrt(&Expr::int(9));
        assert!(r.atom.is_none());
        assert_eq!(r.expr.as_rational(), Some(int(3)));
        let r = t.adjoin_sqrt(&Expr::int(8));
        let a = r.atom.unwrap();
        assert_eq!(a.radicand().as_rational(), Some(int(2)));
        assert_eq!(r.expr, Expr::atom(&a).scale_rational(&int(2)));
        // same canonical radicand → same atom
        let again = t.adjoin_sqrt(&Expr::int(2)).atom.unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn nested_radicals_denest() {
        let mut t = Tower::new();
        let s2 = t.adjoin_sqrt(&Expr::int(2)).expr;
        let r = t.adjoin_sqrt(&(Expr::int(3) + Expr::int(2) * &s2));
        assert!(r.atom.is_none());
        assert_eq!(r.expr, Expr::one() + &s2);
        let r = t.adjoin_sqrt(&(Expr::int(3) - Expr::int(2) * &s2));
        assert_eq!(r.expr, &s2 - &Expr::one());
        assert!(t.adjoin_sqrt(&(Expr::one() + &s2)).atom.is_some());
    }

    #[test]
    fn polynomial_radicand_kept_whole() {
        let mut t = Tower::new();
        let u = p("u");
        let r = t.adjoin_sqrt(&(&u * &u + Expr::int(2) * &u));
        let a = r.atom.unwrap();
        assert_eq!(r.expr, Expr::atom(&a));
        assert_eq!(a.text(), "sqrt(u^2 + 2*u)");
    }

    #[test]
    fn substitution_rebuilds_atoms() {
        let mut t = Tower::new();
        let u = Param::new("u");
        let su = t.adjoin_sqrt(&p("u")).expr;
        let got = su.substitute(&u, &Expr::int(4), &mut t).unwrap();
        assert_eq!(got.as_rational(), Some(int(2)));
        let e = p("u") + Expr::one();
        assert_eq!(e.substitute(&u, &Expr::int(2), &mut t).unwrap().as_rational(), Some(int(3)));
        let sv = t.adjoin_sqrt(&p("v")).expr;
        let e = p("u") * &sv;
        assert_eq!(e.substitute(&u, &sv, &mut t).unwrap(), p("v"));
        let bad = su.substitute(&u, &su, &mut t);
        assert!(matches!(bad, Err(SymError::CyclicSubstitution)));
    }

    #[test]
    fn numeric_enclosure() {
        let mut t = Tower::new();
        let s = t.adjoin_sqrt(&Expr::int(2)).expr;
        let iv = s.eval(&HashMap::new(), 64).unwrap();
        assert!(!iv.contains(&rat(141421356, 100000000)));
        assert!((iv.mid_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(crate::symkern::rational::to_f64(&iv.width()) <= 2f64.powi(-63) * 1.5);
        let su = t.adjoin_sqrt(&p("u")).expr;
        let mut a = HashMap::new();
        a.insert(Param::new("u"), int(-1));
        assert_eq!(su.eval(&a, 64), Err(EvalError::NegativeRadicand));
    }
}
