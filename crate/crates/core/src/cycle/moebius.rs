use crate::symkern::{Expr, Probe, ZeroTest};

use super::{inner, CycleError, Cycle, Metric, PointCoords};

/// Element `re + ι·im` of the two-dimensional commutative algebra with
/// `ι² = s`, where `s ∈ {−1, 0, 1}` is supplied per operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyper {
    pub re: Expr,
    pub im: Expr,
}

impl Hyper {
    pub fn new(re: Expr, im: Expr) -> Hyper {
        Hyper { re, im }
    }

    pub fn real(re: Expr) -> Hyper {
        Hyper { re, im: Expr::zero() }
    }

    pub fn int(n: i64) -> Hyper {
        Hyper::real(Expr::int(n))
    }

    pub fn zero() -> Hyper {
        Hyper::int(0)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Hyper) -> Hyper {
        Hyper { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn sub(&self, o: &Hyper) -> Hyper {
        Hyper { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    pub fn neg(&self) -> Hyper {
        Hyper { re: -&self.re, im: -&self.im }
    }

    pub fn mul(&self, o: &Hyper, s: i8) -> Hyper {
        let mut re = &self.re * &o.re;
        if s != 0 {
            re = &re + &(&self.im * &o.im).scale_rational(&crate::symkern::rational::int(s as i64));
        }
        Hyper { re, im: &(&self.re * &o.im) + &(&self.im * &o.re) }
    }

    pub fn conj(&self) -> Hyper {
        Hyper { re: self.re.clone(), im: -&self.im }
    }

    /// `z·z̄ = re² − s·im²`.
    pub fn norm(&self, s: i8) -> Expr {
        self.mul(&self.conj(), s).re
    }
}

/// `z ↦ (a z + b) / (c z + d)` with hypercomplex entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoebiusMatrix {
    pub a: Hyper,
    pub b: Hyper,
    pub c: Hyper,
    pub d: Hyper,
}

impl MoebiusMatrix {
    pub fn new(a: Hyper, b: Hyper, c: Hyper, d: Hyper) -> MoebiusMatrix {
        MoebiusMatrix { a, b, c, d }
    }

    pub fn real(a: Expr, b: Expr, c: Expr, d: Expr) -> MoebiusMatrix {
        MoebiusMatrix::new(Hyper::real(a), Hyper::real(b), Hyper::real(c), Hyper::real(d))
    }

    pub fn ints(a: i64, b: i64, c: i64, d: i64) -> MoebiusMatrix {
        MoebiusMatrix::new(Hyper::int(a), Hyper::int(b), Hyper::int(c), Hyper::int(d))
    }

    pub fn identity() -> MoebiusMatrix {
        MoebiusMatrix::ints(1, 0, 0, 1)
    }

    pub fn det(&self, s: i8) -> Hyper {
        self.a.mul(&self.d, s).sub(&self.b.mul(&self.c, s))
    }
}

type Mat = [[Hyper; 2]; 2];

fn mat_mul(x: &Mat, y: &Mat, s: i8) -> Mat {
    let e = |i: usize, j: usize| x[i][0].mul(&y[0][j], s).add(&x[i][1].mul(&y[1][j], s));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn require_plane(c: &Cycle) -> Result<(), CycleError> {
    if c.dim() == 2 {
        Ok(())
    } else {
        Err(CycleError::UnsupportedDimension(c.dim()))
    }
}

/// `[[L, −m], [k, −L̄]]` with `L = l + ι n`.
fn cycle_matrix(c: &Cycle) -> Mat {
    let lv = Hyper::new(c.l[0].clone(), c.l[1].clone());
    [
        [lv.clone(), Hyper::real(-&c.m)],
        [Hyper::real(c.k.clone()), lv.conj().neg()],
    ]
}

fn conj_matrix(x: &Mat) -> Mat {
    [[x[0][0].conj(), x[0][1].conj()], [x[1][0].conj(), x[1][1].conj()]]
}

fn matrix_cycle(x: &Mat) -> Cycle {
    Cycle::plane(x[1][0].re.clone(), x[0][0].re.clone(), x[0][0].im.clone(), -&x[0][1].re)
}

/// Image of a cycle under the transformation: `M · C · adj(M̄)`, computed in
/// the cycle-space algebra `ι² = σ̆`.
pub fn flt_apply(c: &Cycle, mat: &MoebiusMatrix, g: &Metric, probe: &Probe) -> Result<Cycle, CycleError> {
    require_plane(c)?;
    let s = g.sigma_cycle;
    if probe.zero_test(&mat.det(s).norm(s)) == ZeroTest::Zero {
        return Err(CycleError::SingularMatrix);
    }
    let m: Mat = [[mat.a.clone(), mat.b.clone()], [mat.c.clone(), mat.d.clone()]];
    let adj_bar: Mat = [[mat.d.conj(), mat.b.conj().neg()], [mat.c.conj().neg(), mat.a.conj()]];
    let out = mat_mul(&mat_mul(&m, &cycle_matrix(c), s), &adj_bar, s);
    Ok(matrix_cycle(&out))
}

/// Image of a point, or the point at infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointImage {
    Finite(PointCoords),
    Infinity,
}

/// Evaluates `(a z + b)/(c z + d)` at `z = x + ι y` with `ι² = σ`.
pub fn flt_apply_point(p: &[Expr], mat: &MoebiusMatrix, g: &Metric, probe: &Probe) -> Result<PointImage, CycleError> {
    if p.len() != 2 {
        return Err(CycleError::UnsupportedDimension(p.len()));
    }
    let s = g.sigma;
    if probe.zero_test(&mat.det(s).norm(s)) == ZeroTest::Zero {
        return Err(CycleError::SingularMatrix);
    }
    let z = Hyper::new(p[0].clone(), p[1].clone());
    let num = mat.a.mul(&z, s).add(&mat.b);
    let den = mat.c.mul(&z, s).add(&mat.d);
    let dz = (probe.zero_test(&den.re), probe.zero_test(&den.im));
    if dz == (ZeroTest::Zero, ZeroTest::Zero) {
        return Ok(PointImage::Infinity);
    }
    let norm = den.norm(s);
    match probe.zero_test(&norm) {
        ZeroTest::Zero => Err(CycleError::DegenerateImage),
        _ => {
            let w = num.mul(&den.conj(), s);
            Ok(PointImage::Finite(vec![w.re.div_unchecked(&norm)?, w.im.div_unchecked(&norm)?]))
        }
    }
}

/// Reflection of `c` in `mirror`: `C · C̄₁ · C` in matrix form.
pub fn reflect(mirror: &Cycle, c: &Cycle, g: &Metric, probe: &Probe) -> Result<Cycle, CycleError> {
    require_plane(mirror)?;
    require_plane(c)?;
    if probe.zero_test(&inner(mirror, mirror, g)?) == ZeroTest::Zero {
        return Err(CycleError::DegenerateMirror);
    }
    let s = g.sigma_cycle;
    let cm = cycle_matrix(mirror);
    let out = mat_mul(&mat_mul(&cm, &conj_matrix(&cycle_matrix(c)), s), &cm, s);
    Ok(matrix_cycle(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::{equal_up_to_scale, point_cycle};

    fn same(a: &Cycle, b: &Cycle) -> bool {
        equal_up_to_scale(a, b, &Probe::default()) == ZeroTest::Zero
    }

    #[test]
    fn cycle_images() {
        let (g, p) = (Metric::euclidean(), Probe::default());
        let unit = Cycle::ints(1, 0, 0, -1);
        assert!(same(&flt_apply(&unit, &MoebiusMatrix::identity(), &g, &p).unwrap(), &unit));
        let shifted = flt_apply(&unit, &MoebiusMatrix::ints(1, 1, 0, 1), &g, &p).unwrap();
        assert!(same(&shifted, &Cycle::ints(1, 1, 0, 0)));
        let inv = flt_apply(&Cycle::ints(1, 1, 0, 0), &MoebiusMatrix::ints(0, 1, 1, 0), &g, &p).unwrap();
        assert!(same(&inv, &Cycle::ints(0, 1, 0, 1)));
        assert_eq!(flt_apply(&unit, &MoebiusMatrix::ints(1, 1, 1, 1), &g, &p), Err(CycleError::SingularMatrix));
    }

    #[test]
    fn point_images() {
        let (g, p) = (Metric::euclidean(), Probe::default());
        let img = flt_apply_point(&[Expr::zero(), Expr::one()], &MoebiusMatrix::ints(1, 1, 0, 1), &g, &p).unwrap();
        assert_eq!(img, PointImage::Finite(vec![Expr::one(), Expr::one()]));
        let img = flt_apply_point(&[Expr::one(), Expr::zero()], &MoebiusMatrix::ints(0, -1, 1, 0), &g, &p).unwrap();
        assert_eq!(img, PointImage::Finite(vec![Expr::int(-1), Expr::zero()]));
        let img = flt_apply_point(&[Expr::zero(), Expr::zero()], &MoebiusMatrix::ints(0, 1, 1, 0), &g, &p).unwrap();
        assert_eq!(img, PointImage::Infinity);
        let m = MoebiusMatrix::new(Hyper::int(2), Hyper::new(Expr::int(1), Expr::int(3)), Hyper::int(0), Hyper::new(Expr::int(1), Expr::int(1)));
        let img = flt_apply_point(&[Expr::zero(), Expr::zero()], &m, &g, &p).unwrap();
        // (1 + 3i)/(1 + i) = 2 + i
        assert_eq!(img, PointImage::Finite(vec![Expr::int(2), Expr::int(1)]));
        let par = Metric::plane(1, 1);
        let m = MoebiusMatrix::new(Hyper::int(1), Hyper::int(0), Hyper::int(1), Hyper::int(0));
        let r = flt_apply_point(&[Expr::one(), Expr::one()], &m, &par, &p);
        assert_eq!(r, Err(CycleError::SingularMatrix));
        let m = MoebiusMatrix::ints(1, 0, 1, 1);
        let r = flt_apply_point(&[Expr::int(-1), Expr::one()], &MoebiusMatrix::ints(1, 0, 0, 1), &par, &p);
        assert!(r.is_ok());
        // c z + d = (1 + ι)·... hits a zero divisor
        let r = flt_apply_point(&[Expr::int(-2), Expr::one()], &m, &par, &p);
        assert_eq!(r, Err(CycleError::DegenerateImage));
    }

    #[test]
    fn reflections() {
        let (g, p) = (Metric::euclidean(), Probe::default());
        let unit = Cycle::ints(1, 0, 0, -1);
        let two = point_cycle(&[Expr::int(2), Expr::zero()], &g);
        let half = point_cycle(&[Expr::rat(1, 2), Expr::zero()], &g);
        assert!(same(&reflect(&unit, &two, &g, &p).unwrap(), &half));
        assert!(same(&reflect(&unit, &Cycle::real_line(), &g, &p).unwrap(), &Cycle::real_line()));
        assert!(same(&reflect(&unit, &unit, &g, &p).unwrap(), &unit));
        let pt = point_cycle(&[Expr::int(3), Expr::int(4)], &g);
        let conj = point_cycle(&[Expr::int(3), Expr::int(-4)], &g);
        assert!(same(&reflect(&Cycle::real_line(), &pt, &g, &p).unwrap(), &conj));
        assert_eq!(reflect(&two, &unit, &g, &p), Err(CycleError::DegenerateMirror));
    }
}
