//! Deterministic SVG output for figures and reflection orbits.
//!
//! Cycles are drawn from the locus `k(x² − σy²) − 2lx − 2ny + m = 0`:
//! native circles for `σ = −1`, sampled polylines for parabolas and
//! hyperbolas, clipped segments for lines.

mod orbit;

pub use orbit::{orbit, render_orbit, Orbit};

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::cycle::{Cycle, CycleError};
use crate::figure::{Figure, Node};
use crate::symkern::{EvalError, Param, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("cycle has no finite locus in the viewport")]
    UnboundedDegenerate,
    #[error("cycle depends on free parameters: {}", .0.join(", "))]
    NonNumeric(Vec<String>),
    #[error("no value assigned to: {}", .0.join(", "))]
    MissingAssignment(Vec<String>),
    #[error("invalid viewport: {0}")]
    InvalidViewport(String),
    #[error("orbit depth {0} exceeds 12")]
    TooDeep(usize),
    #[error(transparent)]
    Cycle(#[from] CycleError),
}

pub const DEFAULT_SAMPLES: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct Viewport {
    pub xmin: Rational,
    pub xmax: Rational,
    pub ymin: Rational,
    pub ymax: Rational,
    pub width_px: u32,
    pub height_px: u32,
    pub samples: usize,
}

impl Viewport {
    pub fn new(xmin: Rational, xmax: Rational, ymin: Rational, ymax: Rational, width_px: u32, height_px: u32) -> Result<Viewport, RenderError> {
        if xmin >= xmax || ymin >= ymax {
            return Err(RenderError::InvalidViewport("empty coordinate range".into()));
        }
        if width_px == 0 || height_px == 0 {
            return Err(RenderError::InvalidViewport("zero pixel size".into()));
        }
        Ok(Viewport { xmin, xmax, ymin, ymax, width_px, height_px, samples: DEFAULT_SAMPLES })
    }

    pub fn with_samples(mut self, samples: usize) -> Result<Viewport, RenderError> {
        if samples < 2 {
            return Err(RenderError::InvalidViewport("need at least two samples".into()));
        }
        self.samples = samples;
        Ok(self)
    }

    fn bounds(&self) -> [f64; 4] {
        let f = |q: &Rational| q.to_f64().unwrap_or(0.0);
        [f(&self.xmin), f(&self.xmax), f(&self.ymin), f(&self.ymax)]
    }

    /// World units per pixel.
    fn unit(&self) -> f64 {
        let [x0, x1, ..] = self.bounds();
        (x1 - x0) / self.width_px as f64
    }
}

impl Default for Viewport {
    fn default() -> Viewport {
        let r = |n: i64| Rational::from_integer(n.into());
        Viewport::new(r(-4), r(4), r(-3), r(3), 800, 600).expect("valid default")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Style {
    pub stroke: String,
    pub width: f64,
    pub dash: Option<String>,
    pub show_label: bool,
}

impl Default for Style {
    fn default() -> Style {
        Style { stroke: "#1f4e79".into(), width: 1.5, dash: None, show_label: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StyleMap {
    pub default: Style,
    pub nodes: HashMap<String, Style>,
    pub show_reserved: bool,
}

impl StyleMap {
    pub fn for_node(&self, key: &str) -> &Style {
        self.nodes.get(key).unwrap_or(&self.default)
    }
}

/// A cycle with floating-point coefficients in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumCycle {
    pub k: f64,
    pub l: f64,
    pub n: f64,
    pub m: f64,
}

impl NumCycle {
    fn scale(&self) -> f64 {
        [self.k, self.l, self.n, self.m].iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    /// Left side of the locus equation at `(x, y)`.
    pub fn locus(&self, sigma: i8, x: f64, y: f64) -> f64 {
        self.k * (x * x - sigma as f64 * y * y) - 2.0 * self.l * x - 2.0 * self.n * y + self.m
    }
}

/// Evaluates a cycle under a parameter assignment. Returns `None` when a
/// radicand is negative or a denominator vanishes there.
pub fn numeric_cycle(c: &Cycle, assign: &HashMap<Param, Rational>, bits: u32) -> Result<Option<NumCycle>, RenderError> {
    if c.dim() != 2 {
        return Err(CycleError::UnsupportedDimension(c.dim()).into());
    }
    let mut v = [0.0; 4];
    for (slot, e) in v.iter_mut().zip(c.coeffs()) {
        match e.eval(assign, bits) {
            Ok(iv) => *slot = iv.mid_f64(),
            Err(EvalError::Unassigned(p)) => return Err(RenderError::NonNumeric(vec![p])),
            Err(_) => return Ok(None),
        }
    }
    Ok(Some(NumCycle { k: v[0], l: v[1], n: v[2], m: v[3] }))
}

/// Six fractional digits; negative zero prints as zero.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.strip_prefix('-').is_some_and(|r| r.chars().all(|c| c == '0' || c == '.')) {
        s[1..].to_string()
    } else {
        s
    }
}

/// Geometry of one drawn instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Circle { cx: f64, cy: f64, r: f64 },
    Point { x: f64, y: f64 },
    Segment { x1: f64, y1: f64, x2: f64, y2: f64 },
    Polylines(Vec<Vec<(f64, f64)>>),
    Empty,
}

impl Shape {
    fn class(&self) -> &'static str {
        match self {
            Shape::Point { .. } => "point",
            Shape::Segment { .. } => "line",
            _ => "cycle",
        }
    }

    /// A point on the shape for placing a label.
    fn anchor(&self) -> Option<(f64, f64)> {
        match self {
            Shape::Circle { cx, cy, r } => Some((*cx, cy + r)),
            Shape::Point { x, y } => Some((*x, *y)),
            Shape::Segment { x1, y1, x2, y2 } => Some(((x1 + x2) / 2.0, (y1 + y2) / 2.0)),
            Shape::Polylines(p) => p.iter().find(|r| !r.is_empty()).map(|r| r[r.len() / 2]),
            Shape::Empty => None,
        }
    }

    fn svg(&self, marker: f64) -> String {
        match self {
            Shape::Circle { cx, cy, r } => format!(r#"<circle cx="{}" cy="{}" r="{}"/>"#, fmt_num(*cx), fmt_num(*cy), fmt_num(*r)),
            Shape::Point { x, y } => {
                format!(r#"<circle class="marker" cx="{}" cy="{}" r="{}"/>"#, fmt_num(*x), fmt_num(*y), fmt_num(marker))
            }
            Shape::Segment { x1, y1, x2, y2 } => {
                format!(r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, fmt_num(*x1), fmt_num(*y1), fmt_num(*x2), fmt_num(*y2))
            }
            Shape::Polylines(runs) => runs
                .iter()
                .filter(|r| r.len() > 1)
                .map(|r| {
                    let pts: Vec<String> = r.iter().map(|(x, y)| format!("{},{}", fmt_num(*x), fmt_num(*y))).collect();
                    format!(r#"<polyline points="{}"/>"#, pts.join(" "))
                })
                .collect(),
            Shape::Empty => String::new(),
        }
    }
}

/// Relative size below which a coefficient counts as zero.
const EPS: f64 = 1e-12;

fn clip_line(a: f64, b: f64, c: f64, [x0, x1, y0, y1]: [f64; 4]) -> Shape {
    // a x + b y = c against the viewport rectangle
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut push = |p: (f64, f64)| {
        if p.0 >= x0 - 1e-12 && p.0 <= x1 + 1e-12 && p.1 >= y0 - 1e-12 && p.1 <= y1 + 1e-12 && !pts.iter().any(|q| (q.0 - p.0).abs() < 1e-12 && (q.1 - p.1).abs() < 1e-12) {
            pts.push(p);
        }
    };
    if b.abs() > EPS {
        push((x0, (c - a * x0) / b));
        push((x1, (c - a * x1) / b));
    }
    if a.abs() > EPS {
        push(((c - b * y0) / a, y0));
        push(((c - b * y1) / a, y1));
    }
    if pts.len() < 2 {
        return Shape::Empty;
    }
    pts.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
    let (p, q) = (pts[0], pts[pts.len() - 1]);
    Shape::Segment { x1: p.0, y1: p.1, x2: q.0, y2: q.1 }
}

/// Samples `y = f(x)` over the viewport, splitting where `f` is undefined
/// or leaves a margin around the viewport.
fn sweep(vp: &Viewport, f: impl Fn(f64) -> Option<f64>) -> Vec<Vec<(f64, f64)>> {
    let [x0, x1, y0, y1] = vp.bounds();
    let h = y1 - y0;
    let n = vp.samples;
    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for i in 0..n {
        let x = x0 + (x1 - x0) * i as f64 / (n - 1) as f64;
        match f(x).filter(|y| y.is_finite() && *y >= y0 - h && *y <= y1 + h) {
            Some(y) => runs.last_mut().expect("nonempty").push((x, y)),
            None => {
                if !runs.last().expect("nonempty").is_empty() {
                    runs.push(Vec::new());
                }
            }
        }
    }
    runs.retain(|r| r.len() > 1);
    runs
}

/// Geometry of a numeric cycle for point signature `sigma`.
pub fn cycle_shape(c: &NumCycle, sigma: i8, vp: &Viewport) -> Result<Shape, RenderError> {
    let s = c.scale();
    if s == 0.0 {
        return Err(RenderError::UnboundedDegenerate);
    }
    let c = NumCycle { k: c.k / s, l: c.l / s, n: c.n / s, m: c.m / s };
    let bounds = vp.bounds();
    if c.k.abs() <= EPS {
        if c.l.abs() <= EPS && c.n.abs() <= EPS {
            return Err(RenderError::UnboundedDegenerate);
        }
        return Ok(clip_line(2.0 * c.l, 2.0 * c.n, c.m, bounds));
    }
    let (k, l, n, m) = (c.k, c.l, c.n, c.m);
    match sigma {
        -1 => {
            let (cx, cy) = (l / k, n / k);
            let r2 = cx * cx + cy * cy - m / k;
            Ok(if r2.abs() <= EPS * (1.0 + cx * cx + cy * cy) {
                Shape::Point { x: cx, y: cy }
            } else if r2 < 0.0 {
                Shape::Empty
            } else {
                Shape::Circle { cx, cy, r: r2.sqrt() }
            })
        }
        _ => Ok(Shape::Polylines(sample_locus(&c, sigma, vp))),
    }
}

/// Polylines through the locus, sweeping `x` and solving for `y`; one run
/// per root branch, broken where no real root exists.
pub fn sample_locus(c: &NumCycle, sigma: i8, vp: &Viewport) -> Vec<Vec<(f64, f64)>> {
    let (k, l, n, m) = (c.k, c.l, c.n, c.m);
    let a = -k * sigma as f64;
    let free = |x: f64| k * x * x - 2.0 * l * x + m;
    if a.abs() <= EPS {
        if n.abs() > EPS {
            return sweep(vp, |x| Some(free(x) / (2.0 * n)));
        }
        // k x² − 2 l x + m = 0: up to two vertical lines
        let d = l * l - k * m;
        if k.abs() <= EPS || d < 0.0 {
            return Vec::new();
        }
        let roots = if d == 0.0 { vec![l / k] } else { vec![(l + d.sqrt()) / k, (l - d.sqrt()) / k] };
        return roots
            .into_iter()
            .filter_map(|x| match clip_line(1.0, 0.0, x, vp.bounds()) {
                Shape::Segment { x1, y1, x2, y2 } => Some(vec![(x1, y1), (x2, y2)]),
                _ => None,
            })
            .collect();
    }
    // a y² − 2 n y + free(x) = 0
    let disc = move |x: f64| n * n - a * free(x);
    let mut runs = sweep(vp, |x| {
        let d = disc(x);
        (d >= 0.0).then(|| (n + d.sqrt()) / a)
    });
    runs.extend(sweep(vp, |x| {
        let d = disc(x);
        (d >= 0.0).then(|| (n - d.sqrt()) / a)
    }));
    runs
}

/// SVG fragment for one numeric cycle, without styling.
pub fn render_cycle(c: &NumCycle, sigma: i8, vp: &Viewport) -> Result<String, RenderError> {
    Ok(cycle_shape(c, sigma, vp)?.svg(3.0 * vp.unit()))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(vp: &Viewport) -> String {
    let [x0, x1, y0, y1] = vp.bounds();
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        vp.width_px,
        vp.height_px,
        fmt_num(x0),
        fmt_num(-y1),
        fmt_num(x1 - x0),
        fmt_num(y1 - y0)
    );
    let _ = writeln!(s, r#"<rect class="background" x="{}" y="{}" width="{}" height="{}" fill="white"/>"#, fmt_num(x0), fmt_num(-y1), fmt_num(x1 - x0), fmt_num(y1 - y0));
    s
}

fn node_params(n: &Node) -> BTreeSet<Param> {
    n.instances.iter().flat_map(|c| c.coeffs().into_iter().flat_map(|e| e.params()).collect::<Vec<_>>()).collect()
}

/// Renders every non-reserved node; each instance becomes an element with
/// id `node-<key>-inst-<i>`.
pub fn render_figure(f: &Figure, vp: &Viewport, styles: &StyleMap, assign: &HashMap<Param, Rational>) -> Result<String, RenderError> {
    let drawn: Vec<&Node> = f.nodes().filter(|n| styles.show_reserved || !n.is_reserved()).collect();
    let missing: BTreeSet<String> =
        drawn.iter().flat_map(|n| node_params(n)).filter(|p| !assign.contains_key(p)).map(|p| p.name().to_string()).collect();
    if !missing.is_empty() {
        return Err(RenderError::MissingAssignment(missing.into_iter().collect()));
    }
    let sigma = f.metric().sigma;
    let unit = vp.unit();
    let bits = f.probe().bits;
    let mut body = String::new();
    let mut labels = String::new();
    for n in drawn {
        let style = styles.for_node(&n.key);
        let dash = style.dash.as_ref().map(|d| format!(r#" stroke-dasharray="{}""#, escape(d))).unwrap_or_default();
        let _ = writeln!(
            body,
            r#"<g id="node-{}" class="node" stroke="{}" stroke-width="{}" vector-effect="non-scaling-stroke"{dash}>"#,
            escape(&n.key),
            escape(&style.stroke),
            fmt_num(style.width)
        );
        let mut anchor = None;
        for (i, c) in n.instances.iter().enumerate() {
            let Some(num) = numeric_cycle(c, assign, bits)? else { continue };
            let shape = match cycle_shape(&num, sigma, vp) {
                Err(RenderError::UnboundedDegenerate) if n.is_reserved() => continue,
                other => other?,
            };
            let shape = match shape {
                Shape::Circle { cx, cy, .. } if n.is_point() => Shape::Point { x: cx, y: cy },
                s => s,
            };
            anchor = anchor.or(shape.anchor());
            let class = if n.is_point() { "point" } else { shape.class() };
            let fill = if class == "point" { r#" fill="currentColor""# } else { "" };
            let _ = writeln!(
                body,
                r#"<g id="node-{}-inst-{i}" class="{class} gen-{}"{fill}>{}</g>"#,
                escape(&n.key),
                n.generation,
                shape.svg(3.0 * unit)
            );
        }
        let _ = writeln!(body, "</g>");
        if let (true, Some((x, y))) = (style.show_label, anchor) {
            let _ = writeln!(
                labels,
                r#"<text class="label" x="{}" y="{}" font-size="{}">{}</text>"#,
                fmt_num(x + 4.0 * unit),
                fmt_num(-y - 4.0 * unit),
                fmt_num(12.0 * unit),
                escape(&n.label)
            );
        }
    }
    let mut s = header(vp);
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" fill="none">"#);
    s.push_str(&body);
    let _ = writeln!(s, "</g>");
    s.push_str(&labels);
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::Metric;
    use crate::figure::{Relation, INFINITY};
    use crate::symkern::rational::rat;
    use crate::symkern::Expr;

    fn num(k: f64, l: f64, n: f64, m: f64) -> NumCycle {
        NumCycle { k, l, n, m }
    }

    #[test]
    fn circle_fast_path() {
        let vp = Viewport::default();
        assert_eq!(render_cycle(&num(1.0, 0.0, 0.0, -1.0), -1, &vp).unwrap(), r#"<circle cx="0.000000" cy="0.000000" r="1.000000"/>"#);
        assert_eq!(render_cycle(&num(1.0, 1.0, 0.0, 2.0), -1, &vp).unwrap(), "");
        assert_eq!(render_cycle(&num(0.0, 0.0, 0.0, 1.0), -1, &vp), Err(RenderError::UnboundedDegenerate));
        assert_eq!(render_cycle(&num(0.0, 0.0, 0.0, 0.0), 1, &vp), Err(RenderError::UnboundedDegenerate));
    }

    #[test]
    fn lines_are_clipped() {
        let vp = Viewport::default();
        assert_eq!(
            render_cycle(&num(0.0, 0.0, 1.0, 2.0), -1, &vp).unwrap(),
            r#"<line x1="-4.000000" y1="1.000000" x2="4.000000" y2="1.000000"/>"#
        );
        assert_eq!(render_cycle(&num(0.0, 0.0, 1.0, 20.0), 0, &vp).unwrap(), "");
    }

    #[test]
    fn sampled_vertices_lie_on_locus() {
        let vp = Viewport::default().with_samples(64).unwrap();
        for (c, s) in [(num(1.0, 0.0, 1.0, 0.0), 0), (num(1.0, 0.5, -0.25, -1.0), 1), (num(-2.0, 1.0, 3.0, 0.5), 1)] {
            let Shape::Polylines(runs) = cycle_shape(&c, s, &vp).unwrap() else { panic!("expected polylines") };
            assert!(!runs.is_empty());
            for (x, y) in runs.iter().flatten() {
                assert!(c.locus(s, *x, *y).abs() <= 1e-6 * c.scale(), "({x}, {y})");
            }
        }
        // parabola x² = 2y
        let Shape::Polylines(runs) = cycle_shape(&num(1.0, 0.0, 1.0, 0.0), 0, &vp).unwrap() else { panic!() };
        assert!(runs.iter().flatten().all(|(x, y)| (x * x - 2.0 * y).abs() < 1e-9));
    }

    #[test]
    fn sampled_circle_matches_native() {
        let c = num(1.0, 0.5, -0.5, -2.0);
        let vp = Viewport::default();
        let Shape::Circle { cx, cy, r } = cycle_shape(&c, -1, &vp).unwrap() else { panic!() };
        let runs = sample_locus(&c, -1, &vp);
        assert_eq!(runs.len(), 2);
        for (x, y) in runs.iter().flatten() {
            assert!((((x - cx).powi(2) + (y - cy).powi(2)).sqrt() - r).abs() < 1e-6);
        }
    }

    #[test]
    fn figure_document() {
        let mut f = Figure::new(Metric::euclidean()).unwrap();
        let empty = render_figure(&f, &Viewport::default(), &StyleMap::default(), &HashMap::new()).unwrap();
        assert!(empty.contains("background") && !empty.contains("node-"));
        f.add_cycle(Cycle::ints(1, 0, 0, -1), "a").unwrap();
        f.add_point(vec![Expr::zero(), Expr::zero()], "C").unwrap();
        f.add_cycle_rel(vec![Relation::tangent("a"), Relation::orthogonal(INFINITY), Relation::only_reals()], "l").unwrap();
        let e = render_figure(&f, &Viewport::default(), &StyleMap::default(), &HashMap::new());
        assert_eq!(e, Err(RenderError::MissingAssignment(vec!["u_l".into()])));
        let assign = HashMap::from([(Param::new("u_l"), rat(1, 2))]);
        let svg = render_figure(&f, &Viewport::default(), &StyleMap::default(), &assign).unwrap();
        assert!(svg.contains(r#"id="node-a.1-inst-0" class="cycle gen-0""#), "{svg}");
        assert!(svg.contains(r#"id="node-C.2-inst-0" class="point gen-0""#), "{svg}");
        assert!(svg.contains(r#"id="node-l.3-inst-1" class="line gen-1""#), "{svg}");
        assert!(!svg.contains("node-infty"));
        assert_eq!(svg, render_figure(&f, &Viewport::default(), &StyleMap::default(), &assign).unwrap());
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(-0.0), "0.000000");
        assert_eq!(fmt_num(-1e-9), "0.000000");
        assert_eq!(fmt_num(2.5), "2.500000");
        assert_eq!(fmt_num(-1.25), "-1.250000");
    }
}
