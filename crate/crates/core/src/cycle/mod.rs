//! Cycles as projective coefficient vectors `(k, l, m)` with the invariant
//! inner product, derived measures and the Möbius action.

mod moebius;

pub use moebius::{flt_apply, flt_apply_point, reflect, Hyper, MoebiusMatrix, PointImage};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symkern::rational::int;
use crate::symkern::{parse_expr, Expr, Probe, SymError, Tower, ZeroTest};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycleError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("operation supports only dimension 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("operand is a line (k = 0)")]
    LineOperand,
    #[error("a line has no center")]
    LineHasNoCenter,
    #[error("operand is a point cycle")]
    PointOperand,
    #[error("singular transformation")]
    SingularMatrix,
    #[error("mirror is a point cycle")]
    DegenerateMirror,
    #[error("all coefficients vanish")]
    ZeroCycle,
    #[error("image lies on the light cone of a zero divisor")]
    DegenerateImage,
    #[error("signature must be -1, 0 or 1, got {0}")]
    BadSignature(i8),
    #[error("cycle syntax: {0}")]
    Syntax(String),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Point-space signature `σ`, cycle-space signature `σ̆` and dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Metric {
    pub dim: usize,
    pub sigma: i8,
    pub sigma_cycle: i8,
}

impl Metric {
    pub fn new(dim: usize, sigma: i8, sigma_cycle: i8) -> Result<Metric, CycleError> {
        for s in [sigma, sigma_cycle] {
            if !(-1..=1).contains(&s) {
                return Err(CycleError::BadSignature(s));
            }
        }
        if dim < 2 {
            return Err(CycleError::UnsupportedDimension(dim));
        }
        Ok(Metric { dim, sigma, sigma_cycle })
    }

    pub fn plane(sigma: i8, sigma_cycle: i8) -> Metric {
        Metric { dim: 2, sigma, sigma_cycle }
    }

    pub fn euclidean() -> Metric {
        Metric::plane(-1, -1)
    }

    /// Weights `η = (1, −σ̆, −σ̆, …)` of the inner product.
    pub fn eta(&self, i: usize) -> i64 {
        if i == 0 {
            1
        } else {
            -(self.sigma_cycle as i64)
        }
    }
}

impl Default for Metric {
    fn default() -> Self {
        Metric::euclidean()
    }
}

/// Coefficients of `k·|x|² − 2⟨l, x⟩ + m = 0`, defined up to a nonzero factor.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Cycle {
    pub k: Expr,
    pub l: Vec<Expr>,
    pub m: Expr,
}

pub type PointCoords = Vec<Expr>;

impl Cycle {
    pub fn new(k: Expr, l: Vec<Expr>, m: Expr) -> Cycle {
        Cycle { k, l, m }
    }

    pub fn plane(k: Expr, l: Expr, n: Expr, m: Expr) -> Cycle {
        Cycle { k, l: vec![l, n], m }
    }

    /// Convenience constructor from integers in the plane.
    pub fn ints(k: i64, l: i64, n: i64, m: i64) -> Cycle {
        Cycle::plane(Expr::int(k), Expr::int(l), Expr::int(n), Expr::int(m))
    }

    /// The cycle `(0, 0, 1)` through the point at infinity only.
    pub fn infinity(dim: usize) -> Cycle {
        Cycle { k: Expr::zero(), l: vec![Expr::zero(); dim], m: Expr::one() }
    }

    /// The real axis `y = 0`.
    pub fn real_line() -> Cycle {
        Cycle::ints(0, 0, 1, 0)
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    /// Coefficients in the order `k, l₁, …, m`.
    pub fn coeffs(&self) -> Vec<&Expr> {
        std::iter::once(&self.k).chain(self.l.iter()).chain(std::iter::once(&self.m)).collect()
    }

    pub fn from_coeffs(v: Vec<Expr>) -> Cycle {
        let mut v = v;
        let m = v.pop().expect("at least k and m");
        let k = v.remove(0);
        Cycle { k, l: v, m }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Cycle {
        Cycle { k: f(&self.k), l: self.l.iter().map(&f).collect(), m: f(&self.m) }
    }

    pub fn try_map<E>(&self, mut f: impl FnMut(&Expr) -> Result<Expr, E>) -> Result<Cycle, E> {
        Ok(Cycle {
            k: f(&self.k)?,
            l: self.l.iter().map(&mut f).collect::<Result<_, _>>()?,
            m: f(&self.m)?,
        })
    }

    pub fn scale(&self, f: &Expr) -> Cycle {
        self.map(|e| e * f)
    }

    pub fn is_syntactically_zero(&self) -> bool {
        self.coeffs().iter().all(|e| e.is_zero())
    }

    /// Re-registers every coefficient in `tower`.
    pub fn adopt(&self, tower: &mut Tower) -> Cycle {
        self.try_map(|e| Ok::<_, ()>(tower.adopt(e))).expect("infallible")
    }

    /// Parses `(k, [l1, l2], m)`.
    pub fn parse(text: &str, tower: &mut Tower) -> Result<Cycle, CycleError> {
        let t = text.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| CycleError::Syntax(format!("expected (k, [l, n], m), got '{t}'")))?;
        let open = inner.find('[').ok_or_else(|| CycleError::Syntax("missing '['".into()))?;
        let close = inner.rfind(']').ok_or_else(|| CycleError::Syntax("missing ']'".into()))?;
        let k_text = inner[..open].trim().strip_suffix(',').ok_or_else(|| CycleError::Syntax("missing ',' after k".into()))?;
        let m_text = inner[close + 1..].trim().strip_prefix(',').ok_or_else(|| CycleError::Syntax("missing ',' before m".into()))?;
        let k = parse_expr(k_text, tower)?;
        let m = parse_expr(m_text, tower)?;
        let l = split_top_level(&inner[open + 1..close])
            .into_iter()
            .map(|s| parse_expr(s, tower))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cycle { k, l, m })
    }
}

/// Splits on commas outside parentheses.
pub fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: Vec<String> = self.l.iter().map(Expr::to_string).collect();
        write!(f, "({}, [{}], {})", self.k, l.join(", "), self.m)
    }
}

fn same_dim(c1: &Cycle, c2: &Cycle) -> Result<(), CycleError> {
    if c1.dim() == c2.dim() {
        Ok(())
    } else {
        Err(CycleError::DimensionMismatch(c1.dim(), c2.dim()))
    }
}

/// `⟨c1, c2⟩ = 2 Σ ηᵢ l1ᵢ l2ᵢ − k1 m2 − k2 m1`.
pub fn inner(c1: &Cycle, c2: &Cycle, g: &Metric) -> Result<Expr, CycleError> {
    same_dim(c1, c2)?;
    let mut acc = Expr::zero();
    for (i, (a, b)) in c1.l.iter().zip(&c2.l).enumerate() {
        let eta = g.eta(i);
        if eta == 0 || a.is_zero() || b.is_zero() {
            continue;
        }
        acc = &acc + &(a * b).scale_rational(&int(2 * eta));
    }
    Ok(&(&acc - &(&c1.k * &c2.m)) - &(&c2.k * &c1.m))
}

pub fn is_orthogonal(c1: &Cycle, c2: &Cycle, g: &Metric, probe: &Probe) -> Result<ZeroTest, CycleError> {
    Ok(probe.zero_test(&inner(c1, c2, g)?))
}

/// `⟨c1,c2⟩² − ⟨c1,c1⟩⟨c2,c2⟩`; vanishes exactly for tangent cycles.
pub fn tangency_defect(c1: &Cycle, c2: &Cycle, g: &Metric) -> Result<Expr, CycleError> {
    let p = inner(c1, c2, g)?;
    let a = inner(c1, c1, g)?;
    let b = inner(c2, c2, g)?;
    Ok(&p.square() - &(&a * &b))
}

pub fn is_tangent(c1: &Cycle, c2: &Cycle, g: &Metric, probe: &Probe) -> Result<ZeroTest, CycleError> {
    Ok(probe.zero_test(&tangency_defect(c1, c2, g)?))
}

fn nonzero_divisor(e: &Expr, probe: &Probe, err: CycleError) -> Result<(), CycleError> {
    if probe.zero_test(e) == ZeroTest::Zero {
        Err(err)
    } else {
        Ok(())
    }
}

/// `−⟨c1,c2⟩ / (k1 k2)`.
pub fn steiner_power(c1: &Cycle, c2: &Cycle, g: &Metric, probe: &Probe) -> Result<Expr, CycleError> {
    nonzero_divisor(&c1.k, probe, CycleError::LineOperand)?;
    nonzero_divisor(&c2.k, probe, CycleError::LineOperand)?;
    let p = inner(c1, c2, g)?;
    Ok((-&p).div_unchecked(&(&c1.k * &c2.k))?)
}

/// `⟨c1,c2⟩² / (⟨c1,c1⟩⟨c2,c2⟩)`: 0 for orthogonal, 1 for tangent cycles.
pub fn angle_cos_sq(c1: &Cycle, c2: &Cycle, g: &Metric, probe: &Probe) -> Result<Expr, CycleError> {
    let a = inner(c1, c1, g)?;
    let b = inner(c2, c2, g)?;
    nonzero_divisor(&a, probe, CycleError::PointOperand)?;
    nonzero_divisor(&b, probe, CycleError::PointOperand)?;
    let p = inner(c1, c2, g)?;
    Ok(p.square().div_unchecked(&(&a * &b))?)
}

/// The self-orthogonal cycle `(1, p, Σ ηᵢ pᵢ²)` of a point.
pub fn point_cycle(p: &[Expr], g: &Metric) -> Cycle {
    let mut m = Expr::zero();
    for (i, x) in p.iter().enumerate() {
        let eta = g.eta(i);
        if eta != 0 {
            m = &m + &x.square().scale_rational(&int(eta));
        }
    }
    Cycle { k: Expr::one(), l: p.to_vec(), m }
}

pub fn center(c: &Cycle, probe: &Probe) -> Result<PointCoords, CycleError> {
    nonzero_divisor(&c.k, probe, CycleError::LineHasNoCenter)?;
    c.l.iter().map(|x| x.div_unchecked(&c.k).map_err(CycleError::from)).collect()
}

/// `⟨c,c⟩ / (2k²)`.
pub fn radius_sq(c: &Cycle, g: &Metric, probe: &Probe) -> Result<Expr, CycleError> {
    nonzero_divisor(&c.k, probe, CycleError::LineOperand)?;
    let s = inner(c, c, g)?;
    Ok(s.div_unchecked(&c.k.square().scale_rational(&int(2)))?)
}

/// Result of [`normalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub cycle: Cycle,
    /// False when an undecided coefficient preceded every certified one.
    pub normalized: bool,
}

/// Scales the first certified nonzero coefficient to one.
pub fn normalize(c: &Cycle, probe: &Probe) -> Result<Normalized, CycleError> {
    let coeffs = c.coeffs();
    for e in &coeffs {
        match probe.zero_test(e) {
            ZeroTest::Zero => continue,
            ZeroTest::Unknown => return Ok(Normalized { cycle: c.clone(), normalized: false }),
            ZeroTest::NonZero => {
                let inv = Expr::one().div_unchecked(e)?;
                let cycle = c.map(|x| if x.is_zero() { Expr::zero() } else { x * &inv });
                return Ok(Normalized { cycle, normalized: true });
            }
        }
    }
    Err(CycleError::ZeroCycle)
}

/// Projective equality via all 2×2 minors of the coefficient vectors.
pub fn equal_up_to_scale(c1: &Cycle, c2: &Cycle, probe: &Probe) -> ZeroTest {
    if c1 == c2 {
        return ZeroTest::Zero;
    }
    if c1.dim() != c2.dim() {
        return ZeroTest::NonZero;
    }
    let a = c1.coeffs();
    let b = c2.coeffs();
    let mut verdict = ZeroTest::Zero;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let minor = &(a[i] * b[j]) - &(a[j] * b[i]);
            match probe.zero_test(&minor) {
                ZeroTest::Zero => {}
                ZeroTest::NonZero => return ZeroTest::NonZero,
                ZeroTest::Unknown => verdict = ZeroTest::Unknown,
            }
        }
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> Metric {
        Metric::euclidean()
    }

    fn unit() -> Cycle {
        Cycle::ints(1, 0, 0, -1)
    }

    #[test]
    fn inner_products() {
        assert_eq!(inner(&unit(), &unit(), &g()).unwrap(), Expr::int(2));
        assert_eq!(inner(&unit(), &Cycle::real_line(), &g()).unwrap(), Expr::zero());
        assert_eq!(inner(&unit(), &Cycle::infinity(2), &g()).unwrap(), Expr::int(-1));
        let c3 = Cycle::new(Expr::one(), vec![Expr::zero(); 3], Expr::zero());
        assert_eq!(inner(&unit(), &c3, &g()), Err(CycleError::DimensionMismatch(2, 3)));
    }

    #[test]
    fn orthogonality_verdicts() {
        let p = Probe::default();
        assert_eq!(is_orthogonal(&unit(), &Cycle::ints(0, 1, 0, 0), &g(), &p).unwrap(), ZeroTest::Zero);
        assert_eq!(is_orthogonal(&unit(), &Cycle::ints(0, 0, 1, 2), &g(), &p).unwrap(), ZeroTest::NonZero);
        let pc = point_cycle(&[Expr::int(3), Expr::rat(1, 2)], &g());
        assert_eq!(is_orthogonal(&pc, &pc, &g(), &p).unwrap(), ZeroTest::Zero);
    }

    #[test]
    fn tangency() {
        assert!(tangency_defect(&unit(), &Cycle::ints(0, 0, 1, 2), &g()).unwrap().is_zero());
        assert_eq!(tangency_defect(&unit(), &Cycle::ints(0, 0, 1, 4), &g()).unwrap(), Expr::int(12));
        assert!(tangency_defect(&unit(), &unit(), &g()).unwrap().is_zero());
    }

    #[test]
    fn steiner_powers() {
        let p = Probe::default();
        let far = point_shifted(3);
        assert_eq!(steiner_power(&unit(), &far, &g(), &p).unwrap(), Expr::int(7));
        assert_eq!(steiner_power(&unit(), &Cycle::ints(2, 0, 0, -2), &g(), &p).unwrap(), Expr::int(-2));
        assert_eq!(steiner_power(&unit(), &Cycle::real_line(), &g(), &p), Err(CycleError::LineOperand));
    }

    fn point_shifted(x: i64) -> Cycle {
        // unit circle centred at (x, 0)
        Cycle::ints(1, x, 0, x * x - 1)
    }

    #[test]
    fn angles() {
        let p = Probe::default();
        let a = angle_cos_sq(&Cycle::ints(0, 0, 1, 0), &Cycle::ints(0, 1, -1, 0), &g(), &p).unwrap();
        assert_eq!(a, Expr::rat(1, 2));
        assert!(angle_cos_sq(&unit(), &Cycle::real_line(), &g(), &p).unwrap().is_zero());
        assert!(angle_cos_sq(&unit(), &Cycle::ints(0, 0, 1, 2), &g(), &p).unwrap().is_one());
        let pc = point_cycle(&[Expr::zero(), Expr::zero()], &g());
        assert_eq!(angle_cos_sq(&pc, &unit(), &g(), &p), Err(CycleError::PointOperand));
    }

    #[test]
    fn points_and_centers() {
        let p = Probe::default();
        assert_eq!(point_cycle(&[Expr::zero(), Expr::zero()], &g()), Cycle::ints(1, 0, 0, 0));
        let (x, y) = (Expr::param(&crate::symkern::Param::new("x")), Expr::param(&crate::symkern::Param::new("y")));
        let pc = point_cycle(&[x.clone(), y.clone()], &g());
        assert_eq!(pc.m, &x.square() + &y.square());
        let par = point_cycle(&[x.clone(), y.clone()], &Metric::plane(0, 0));
        assert_eq!(par.m, x.square());
        assert_eq!(center(&Cycle::ints(2, 2, 4, 1), &p).unwrap(), vec![Expr::one(), Expr::int(2)]);
        assert_eq!(center(&pc, &p).unwrap(), vec![x, y]);
        assert_eq!(center(&Cycle::real_line(), &p), Err(CycleError::LineHasNoCenter));
    }

    #[test]
    fn radii() {
        let p = Probe::default();
        assert!(radius_sq(&unit(), &g(), &p).unwrap().is_one());
        assert!(radius_sq(&Cycle::ints(1, 1, 0, 0), &g(), &p).unwrap().is_one());
        let pc = point_cycle(&[Expr::int(5), Expr::int(-2)], &g());
        assert!(radius_sq(&pc, &g(), &p).unwrap().is_zero());
    }

    #[test]
    fn normalization() {
        let p = Probe::default();
        assert_eq!(normalize(&Cycle::ints(2, 0, 0, -2), &p).unwrap().cycle, unit());
        assert_eq!(normalize(&Cycle::ints(0, 0, 3, 0), &p).unwrap().cycle, Cycle::real_line());
        assert_eq!(normalize(&Cycle::ints(0, 0, 0, 5), &p).unwrap().cycle, Cycle::infinity(2));
        assert_eq!(normalize(&Cycle::ints(0, 0, 0, 0), &p), Err(CycleError::ZeroCycle));
    }

    #[test]
    fn text_form() {
        let mut t = Tower::new();
        let c = Cycle::parse("(1, [0, sqrt(2)/2], -1/3)", &mut t).unwrap();
        assert_eq!(c.k, Expr::one());
        assert_eq!(c.m.as_rational(), Some(crate::symkern::rational::rat(-1, 3)));
        assert_eq!(Cycle::parse(&c.to_string(), &mut t).unwrap(), c);
        assert!(Cycle::parse("(1, 0, 0)", &mut t).is_err());
        assert_eq!(equal_up_to_scale(&c, &c.scale(&Expr::int(-3)), &t.probe), ZeroTest::Zero);
        assert_eq!(equal_up_to_scale(&unit(), &Cycle::ints(1, 0, 0, -2), &t.probe), ZeroTest::NonZero);
    }
}
