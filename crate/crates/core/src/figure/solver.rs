use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use crate::cycle::{self, Cycle, Metric};
use crate::symkern::budget;
use crate::symkern::rational::int;
use crate::symkern::{solve_linear, solve_quadratic, Expr, Interval, Param, Probe, Rational, SymError, Tower, ZeroTest};

use super::{consistent_combos, dedup_branches, Branch, FigureError, Node, Relation, RelationKind};

pub(crate) struct SolveOutcome {
    pub instances: Vec<Cycle>,
    pub lineage: Vec<Vec<Branch>>,
    pub free_params: Vec<Param>,
    pub notes: Vec<String>,
    /// Some branch was dropped because a pivot or test stayed undecided.
    pub undecided: bool,
}

fn sanitize(label: &str) -> String {
    let s: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    format!("u_{s}")
}

/// Coefficient row of `⟨X, c⟩` over the unknowns `(k, l, n, m)`.
fn inner_row(c: &Cycle, g: &Metric) -> Vec<Expr> {
    vec![
        -&c.m,
        c.l[0].scale_rational(&crate::symkern::rational::int(2 * g.eta(0))),
        c.l[1].scale_rational(&crate::symkern::rational::int(2 * g.eta(1))),
        -&c.k,
    ]
}

/// One linear system with the quadratic `B(Y, Y) = 0` attached.
struct System {
    rows: Vec<Vec<Expr>>,
    rhs: Vec<Expr>,
    /// Index of the auxiliary unknown `t`, if present.
    t: Option<usize>,
    quadratic: bool,
    homogeneous: bool,
}

impl System {
    fn width(&self) -> usize {
        4 + usize::from(self.t.is_some())
    }

    fn cycle_of(y: &[Expr]) -> Cycle {
        Cycle::plane(y[0].clone(), y[1].clone(), y[2].clone(), y[3].clone())
    }

    /// `t_y t_z − ⟨X_y, X_z⟩`, or `⟨X_y, X_z⟩` without `t`.
    fn bilinear(&self, y: &[Expr], z: &[Expr], g: &Metric) -> Expr {
        let ip = cycle::inner(&Self::cycle_of(y), &Self::cycle_of(z), g).expect("plane cycles");
        match self.t {
            Some(t) => &(&y[t] * &z[t]) - &ip,
            None => ip,
        }
    }
}


pub(crate) fn solve_relations(
    nodes: &HashMap<String, Node>,
    limit: Duration,
    g: &Metric,
    tower: &mut Tower,
    label: &str,
    relations: &[Relation],
) -> Result<SolveOutcome, FigureError> {
    let mut targets: Vec<String> = Vec::new();
    for r in relations {
        if let Some(k) = r.target_key() {
            if !nodes.contains_key(k) {
                return Err(FigureError::UnknownTarget(k.to_string()));
            }
            if !targets.iter().any(|t| t == k) {
                targets.push(k.to_string());
            }
        }
    }
    let probe = tower.probe;
    let mut out = SolveOutcome { instances: Vec::new(), lineage: Vec::new(), free_params: Vec::new(), notes: Vec::new(), undecided: false };
    let mut params: BTreeSet<Param> = BTreeSet::new();
    let only_reals = relations.iter().any(|r| r.kind == RelationKind::OnlyReals);
    for (combo, lin) in consistent_combos(nodes, &targets) {
        let pick = |key: &str| {
            let i = targets.iter().position(|t| t == key).expect("target collected");
            &nodes[key].instances[combo[i]]
        };
        let run = budget::with_time_limit(limit, || -> Result<(), FigureError> {
            let mut found = Vec::new();
            for sol in solve_combo(relations, &pick, g, tower, label, &mut out)? {
                let Ok(norm) = cycle::normalize(&sol, &probe) else { continue };
                let c = norm.cycle;
                if only_reals && !reality_check(&c, &probe, &mut out.notes) {
                    continue;
                }
                verify(&c, relations, &pick, g, &probe)?;
                found.push(c);
            }
            for c in found {
                if let Some(i) = out.instances.iter().position(|o| o == &c || cycle::equal_up_to_scale(o, &c, &probe) == ZeroTest::Zero) {
                    out.lineage[i] = dedup_branches([out.lineage[i].clone(), lin.clone()].concat());
                    continue;
                }
                for e in c.coeffs() {
                    params.extend(e.params().into_iter().filter(|p| p.name().starts_with(&sanitize(label))));
                }
                out.lineage.push(lin.clone());
                out.instances.push(c);
            }
            Ok(())
        });
        match run {
            Ok(r) => r?,
            Err(budget::Expired) => {
                let note = format!("branch skipped: solving took longer than {limit:?}");
                if !out.notes.contains(&note) {
                    out.notes.push(note);
                }
                out.undecided = true;
            }
        }
    }
    out.free_params = params.into_iter().collect();
    Ok(out)
}

/// False when some parameter-free radicand is certified negative; records
/// that radicand, and parametric radicands as reality conditions.
fn reality_check(c: &Cycle, probe: &Probe, notes: &mut Vec<String>) -> bool {
    let atoms: BTreeSet<_> = c.coeffs().iter().flat_map(|e| e.all_atoms()).collect();
    for a in atoms {
        let r = a.radicand();
        if r.params().is_empty() {
            if r.eval(&HashMap::new(), probe.bits).is_ok_and(|iv| iv.is_negative()) {
                let note = format!("non-real branch discarded: {r} < 0");
                if !notes.contains(&note) {
                    notes.push(note);
                }
                return false;
            }
        } else {
            let note = format!("reality condition: {r} >= 0");
            if !notes.contains(&note) {
                notes.push(note);
            }
        }
    }
    true
}

/// Residual of one relation for `c` against a target instance; `None` for
/// relations without an equation.
pub fn relation_residual(kind: &RelationKind, c: &Cycle, target: Option<&Cycle>, g: &Metric) -> Result<Option<Expr>, FigureError> {
    Ok(Some(match (kind, target) {
        (RelationKind::Orthogonal, Some(t)) => cycle::inner(c, t, g)?,
        (RelationKind::Tangent, Some(t)) => cycle::tangency_defect(c, t, g)?,
        (RelationKind::SelfOrthogonal, _) => cycle::inner(c, c, g)?,
        (RelationKind::PassesInfinity, _) => c.k.clone(),
        (RelationKind::SteinerPower(v), Some(t)) => &(-&cycle::inner(c, t, g)?) - &(&(v * &c.k) * &t.k),
        (RelationKind::AngleCosSq(v), Some(t)) => {
            let p = cycle::inner(c, t, g)?;
            &p.square() - &(&(v * &cycle::inner(c, c, g)?) * &cycle::inner(t, t, g)?)
        }
        _ => return Ok(None),
    }))
}

/// True when the residual of `kind` is certified nonzero at some sampled
/// parameter assignment. Works on enclosures of the coefficients, so nested
/// radicals are never expanded symbolically.
pub fn residual_certified_nonzero(kind: &RelationKind, c: &Cycle, target: Option<&Cycle>, g: &Metric, probe: &Probe) -> bool {
    let mut params: BTreeSet<Param> = BTreeSet::new();
    for e in c.coeffs().into_iter().chain(target.into_iter().flat_map(Cycle::coeffs)).chain(kind.value()) {
        params.extend(e.params());
    }
    let params: Vec<Param> = params.into_iter().collect();
    let rounds = if params.is_empty() { 1 } else { 3 };
    for round in 0..rounds {
        let assign = probe.sample_assignment(&params, round);
        for bits in [probe.bits, 2 * probe.bits] {
            if numeric_residual(kind, c, target, g, &assign, bits).is_some_and(|iv| !iv.contains_zero()) {
                return true;
            }
        }
    }
    false
}

fn numeric_residual(
    kind: &RelationKind,
    c: &Cycle,
    target: Option<&Cycle>,
    g: &Metric,
    assign: &HashMap<Param, Rational>,
    bits: u32,
) -> Option<Interval> {
    let enclose = |x: &Cycle| -> Option<Vec<Interval>> { x.coeffs().into_iter().map(|e| e.eval(assign, bits).ok()).collect() };
    let inner = |a: &[Interval], b: &[Interval]| {
        let d = a.len() - 2;
        let mut acc = a[0].mul(&b[d + 1], bits).add(&b[0].mul(&a[d + 1], bits), bits).neg();
        for i in 0..d {
            let eta = Interval::point(int(2 * g.eta(i)));
            acc = acc.add(&eta.mul(&a[i + 1].mul(&b[i + 1], bits), bits), bits);
        }
        acc
    };
    let x = enclose(c)?;
    let t = match target {
        Some(t) => Some(enclose(t)?),
        None => None,
    };
    Some(match (kind, t) {
        (RelationKind::Orthogonal, Some(t)) => inner(&x, &t),
        (RelationKind::Tangent, Some(t)) => {
            let p = inner(&x, &t);
            p.mul(&p, bits).sub(&inner(&x, &x).mul(&inner(&t, &t), bits), bits)
        }
        (RelationKind::SelfOrthogonal, _) => inner(&x, &x),
        (RelationKind::PassesInfinity, _) => x[0].clone(),
        (RelationKind::SteinerPower(v), Some(t)) => {
            let v = v.eval(assign, bits).ok()?;
            inner(&x, &t).neg().sub(&v.mul(&x[0], bits).mul(&t[0], bits), bits)
        }
        (RelationKind::AngleCosSq(v), Some(t)) => {
            let v = v.eval(assign, bits).ok()?;
            let p = inner(&x, &t);
            p.mul(&p, bits).sub(&v.mul(&inner(&x, &x), bits).mul(&inner(&t, &t), bits), bits)
        }
        _ => return None,
    })
}

fn verify<'a>(c: &Cycle, relations: &[Relation], pick: &dyn Fn(&str) -> &'a Cycle, g: &Metric, probe: &Probe) -> Result<(), FigureError> {
    for r in relations {
        if residual_certified_nonzero(&r.kind, c, r.target_key().map(pick), g, probe) {
            return Err(FigureError::Internal(format!("instance {c} violates {}", r.kind.name())));
        }
    }
    Ok(())
}

/// Radical `r` for a tangency or angle relation: `X·C = ±r·t`.
enum Radical {
    None,
    Root(Expr),
    /// Parametric radicand that already carries square roots.
    Nested(Expr),
}

fn branch_radical<'a>(r: &Relation, pick: &dyn Fn(&str) -> &'a Cycle, g: &Metric, tower: &mut Tower) -> Result<Radical, FigureError> {
    let (c, scale) = match (&r.kind, r.target_key()) {
        (RelationKind::Tangent, Some(k)) => (pick(k), None),
        (RelationKind::AngleCosSq(v), Some(k)) => (pick(k), Some(v)),
        _ => return Ok(Radical::None),
    };
    let mut rad = cycle::inner(c, c, g)?;
    if let Some(v) = scale {
        rad = v * &rad;
    }
    if !rad.params().is_empty() && !rad.is_atom_free() {
        return Ok(Radical::Nested(rad));
    }
    let root = tower.adjoin_sqrt(&rad).expr;
    Ok(if root.is_zero() { Radical::None } else { Radical::Root(root) })
}

fn solve_combo<'a>(
    relations: &[Relation],
    pick: &dyn Fn(&str) -> &'a Cycle,
    g: &Metric,
    tower: &mut Tower,
    label: &str,
    out: &mut SolveOutcome,
) -> Result<Vec<Cycle>, FigureError> {
    let mut radicals = Vec::with_capacity(relations.len());
    for r in relations {
        match branch_radical(r, pick, g, tower)? {
            Radical::None => radicals.push(None),
            Radical::Root(x) => radicals.push(Some(x)),
            // roots over parametric radicands that already carry roots
            // blow up, so such combinations stay undecided
            Radical::Nested(rad) => {
                let note = format!("branch skipped: sqrt({rad}) mixes parameters and radicals");
                if !out.notes.contains(&note) {
                    out.notes.push(note);
                }
                out.undecided = true;
                return Ok(Vec::new());
            }
        }
    }
    let use_t = radicals.iter().any(Option::is_some);
    let branching: Vec<usize> = (0..relations.len()).filter(|&i| radicals[i].is_some()).collect();
    // flipping every sign maps t to −t, so the first sign stays fixed
    let sign_count = if branching.is_empty() { 1 } else { 1usize << (branching.len() - 1) };
    let mut sols = Vec::new();
    for mask in 0..sign_count {
        let sign = |i: usize| -> i64 {
            match branching.iter().position(|&b| b == i) {
                Some(0) | None => 1,
                Some(p) if mask >> (p - 1) & 1 == 1 => -1,
                Some(_) => 1,
            }
        };
        let mut sys = System { rows: Vec::new(), rhs: Vec::new(), t: use_t.then_some(4), quadratic: use_t, homogeneous: true };
        let w = sys.width();
        let pad = |mut v: Vec<Expr>| {
            v.resize(w, Expr::zero());
            v
        };
        for (i, r) in relations.iter().enumerate() {
            match (&r.kind, r.target_key()) {
                (RelationKind::Orthogonal, Some(k)) => sys.rows.push(pad(inner_row(pick(k), g))),
                (RelationKind::Tangent | RelationKind::AngleCosSq(_), Some(k)) => {
                    let mut row = pad(inner_row(pick(k), g));
                    if let (Some(t), Some(rad)) = (sys.t, &radicals[i]) {
                        row[t] = rad.scale_rational(&crate::symkern::rational::int(-sign(i)));
                    }
                    sys.rows.push(row);
                }
                (RelationKind::SelfOrthogonal, _) => {
                    if let Some(t) = sys.t {
                        let mut row = pad(Vec::new());
                        row[t] = Expr::one();
                        sys.rows.push(row);
                    } else {
                        sys.quadratic = true;
                    }
                }
                (RelationKind::PassesInfinity, _) => sys.rows.push(pad(vec![Expr::int(-1)])),
                (RelationKind::SteinerPower(v), Some(k)) => {
                    let c = pick(k);
                    if tower.probe.zero_test(&c.k) == ZeroTest::Zero {
                        out.notes.push(format!("steiner power needs a non-line target, got {c}"));
                        return Ok(Vec::new());
                    }
                    let mut row: Vec<Expr> = pad(inner_row(c, g)).into_iter().map(|e| -e).collect();
                    row[0] = &row[0] - &(v * &c.k);
                    sys.rows.push(row);
                    sys.homogeneous = false;
                }
                _ => {}
            }
        }
        sys.rhs = vec![Expr::zero(); sys.rows.len()];
        if !sys.homogeneous {
            sys.rows.push(pad(vec![Expr::one()]));
            sys.rhs.push(Expr::one());
        }
        if sys.rows.is_empty() {
            sys.rows.push(pad(Vec::new()));
            sys.rhs.push(Expr::zero());
        }
        sols.extend(solve_system(&sys, g, tower, label, out)?);
    }
    Ok(sols.into_iter().map(|y| System::cycle_of(&y)).filter(|c| !c.is_syntactically_zero()).collect())
}

fn axpy(y: &[Expr], a: &Expr, x: &[Expr]) -> Vec<Expr> {
    y.iter().zip(x).map(|(u, v)| if v.is_zero() || a.is_zero() { u.clone() } else { u + &(a * v) }).collect()
}

fn solve_system(sys: &System, g: &Metric, tower: &mut Tower, label: &str, out: &mut SolveOutcome) -> Result<Vec<Vec<Expr>>, FigureError> {
    if !sys.homogeneous {
        return Ok(solve_chart(sys, &sys.rows, &sys.rhs, g, tower, label, out)?.0);
    }
    // chart h: the first nonzero cycle coefficient is coordinate h, scaled to 1
    let mut sols = Vec::new();
    for h in 0..4 {
        let (mut rows, mut rhs) = (sys.rows.clone(), sys.rhs.clone());
        for j in 0..=h {
            let mut row = vec![Expr::zero(); sys.width()];
            row[j] = Expr::one();
            rows.push(row);
            rhs.push(if j == h { Expr::one() } else { Expr::zero() });
        }
        let (found, parametric) = solve_chart(sys, &rows, &rhs, g, tower, label, out)?;
        sols.extend(found);
        if parametric {
            break;
        }
    }
    Ok(sols)
}

fn solve_chart(
    sys: &System,
    rows: &[Vec<Expr>],
    rhs: &[Expr],
    g: &Metric,
    tower: &mut Tower,
    label: &str,
    out: &mut SolveOutcome,
) -> Result<(Vec<Vec<Expr>>, bool), FigureError> {
    let lin = match solve_linear(rows, rhs, &tower.probe) {
        Ok(l) => l,
        Err(SymError::Inconsistent) => return Ok((Vec::new(), false)),
        Err(SymError::PivotUnknown) => {
            out.undecided = true;
            return Ok((Vec::new(), false));
        }
        Err(e) => return Err(e.into()),
    };
    for w in lin.warnings {
        if !out.notes.contains(&w) {
            out.notes.push(w);
        }
    }
    parametrize(sys, &lin.particular, &lin.nullspace, g, tower, label, out)
}

/// Solutions `base + Σ cⱼ vⱼ` of the quadratic. Returns whether free
/// parameters were introduced.
fn parametrize(
    sys: &System,
    base: &[Expr],
    free: &[Vec<Expr>],
    g: &Metric,
    tower: &mut Tower,
    label: &str,
    out: &mut SolveOutcome,
) -> Result<(Vec<Vec<Expr>>, bool), FigureError> {
    let probe = tower.probe;
    let name = |count: usize, i: usize| {
        let base = sanitize(label);
        Expr::param(&Param::new(&if count == 1 { base } else { format!("{base}_{}", i + 1) }))
    };
    let with_params = |skip: Option<usize>| -> Vec<Expr> {
        let count = free.len() - usize::from(skip.is_some());
        let mut y = base.to_vec();
        let mut n = 0;
        for (j, vj) in free.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            y = axpy(&y, &name(count, n), vj);
            n += 1;
        }
        y
    };
    if !sys.quadratic {
        return Ok((vec![with_params(None)], !free.is_empty()));
    }
    if free.is_empty() {
        return Ok(match probe.zero_test(&sys.bilinear(base, base, g)) {
            ZeroTest::NonZero => (Vec::new(), false),
            ZeroTest::Zero => (vec![base.to_vec()], false),
            ZeroTest::Unknown => {
                out.undecided = true;
                (Vec::new(), false)
            }
        });
    }
    let diag: Vec<ZeroTest> = free.iter().map(|vj| probe.zero_test(&sys.bilinear(vj, vj, g))).collect();
    let mut order: Vec<usize> = (0..free.len()).rev().filter(|&j| diag[j] == ZeroTest::NonZero).collect();
    order.extend((0..free.len()).rev().filter(|&j| diag[j] != ZeroTest::NonZero));
    for j in order {
        let w = with_params(Some(j));
        let a = sys.bilinear(&free[j], &free[j], g);
        let b = sys.bilinear(&w, &free[j], g).scale_rational(&crate::symkern::rational::int(2));
        if diag[j] != ZeroTest::NonZero && probe.zero_test(&b) != ZeroTest::NonZero {
            continue;
        }
        let c = sys.bilinear(&w, &w, g);
        let roots = solve_quadratic(&a, &b, &c, tower)?;
        let ys = roots.iter().map(|r| axpy(&w, r, &free[j])).collect();
        return Ok((ys, free.len() > 1));
    }
    let y = with_params(None);
    Ok(match probe.zero_test(&sys.bilinear(&y, &y, g)) {
        ZeroTest::Zero => (vec![y], true),
        ZeroTest::NonZero => (Vec::new(), false),
        ZeroTest::Unknown => {
            out.undecided = true;
            (Vec::new(), false)
        }
    })
}
