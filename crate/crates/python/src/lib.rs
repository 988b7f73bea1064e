use std::collections::HashMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use cyclekit::cycle::{Cycle, Metric};
use cyclekit::figure::{Figure, FigureError, Relation, RelationKind, Target};
use cyclekit::render::{render_figure, RenderError, StyleMap, Viewport};
use cyclekit::symkern::rational::parse_rational;
use cyclekit::symkern::{parse_expr, Param, Probe, Rational};

create_exception!(cyclekit, CycleKitError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    CycleKitError::new_err(e.to_string())
}

/// A number given as an int or as expression text such as "1/2" or "sqrt(2)".
#[derive(FromPyObject)]
enum Num {
    Int(i64),
    Text(String),
}

impl Num {
    fn text(&self) -> String {
        match self {
            Num::Int(n) => n.to_string(),
            Num::Text(s) => s.clone(),
        }
    }
}

/// `"kind"`, `(kind, target)` or `(kind, target, value)`.
#[derive(FromPyObject)]
enum RelationIn {
    Kind(String),
    Pair(String, Option<String>),
    Full(String, Option<String>, Option<Num>),
}

fn rational(name: &str, n: &Num) -> PyResult<Rational> {
    parse_rational(&n.text()).ok_or_else(|| err(format!("{name}: '{}' is not a rational number", n.text())))
}

type CycleTuple = (String, Vec<String>, String);

fn cycle_tuple(c: &Cycle) -> CycleTuple {
    (c.k.to_string(), c.l.iter().map(ToString::to_string).collect(), c.m.to_string())
}

/// A figure of cycles defined explicitly or by relations to other cycles.
#[pyclass(name = "Figure", module = "cyclekit")]
struct PyFigure {
    inner: Figure,
}

impl PyFigure {
    fn relation(&mut self, r: RelationIn) -> Result<Relation, FigureError> {
        let (kind, target, value) = match r {
            RelationIn::Kind(k) => (k, None, None),
            RelationIn::Pair(k, t) => (k, t, None),
            RelationIn::Full(k, t, v) => (k, t, v),
        };
        let value = value.map(|v| parse_expr(&v.text(), self.inner.tower_mut())).transpose()?;
        let kind = RelationKind::from_name(&kind, value)?;
        let target = match target.as_deref() {
            None | Some("SELF") => Target::SelfNode,
            Some(t) => Target::node(t),
        };
        Ok(Relation::new(kind, target))
    }
}

#[pymethods]
impl PyFigure {
    #[new]
    #[pyo3(signature = (sigma = -1, sigma_cycle = -1, seed = None, bits = 64))]
    fn new(sigma: i8, sigma_cycle: i8, seed: Option<u64>, bits: u32) -> PyResult<Self> {
        let metric = Metric::new(2, sigma, sigma_cycle).map_err(err)?;
        let probe = seed.map_or(Probe { bits, ..Probe::default() }, |s| Probe::new(s, bits));
        Ok(PyFigure { inner: Figure::with_probe(metric, probe).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyFigure { inner: Figure::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Adds an explicit cycle written `(k, [l, n], m)`; returns its key.
    fn add_cycle(&mut self, label: &str, cycle: &str) -> PyResult<String> {
        let c = Cycle::parse(cycle, self.inner.tower_mut()).map_err(err)?;
        self.inner.add_cycle(c, label).map_err(err)
    }

    fn add_point(&mut self, label: &str, x: Num, y: Num) -> PyResult<String> {
        let p = [x, y].iter().map(|v| parse_expr(&v.text(), self.inner.tower_mut())).collect::<Result<Vec<_>, _>>().map_err(err)?;
        self.inner.add_point(p, label).map_err(err)
    }

    fn add_cycle_rel(&mut self, label: &str, relations: Vec<RelationIn>) -> PyResult<String> {
        let rels = relations.into_iter().map(|r| self.relation(r)).collect::<Result<Vec<_>, _>>().map_err(err)?;
        self.inner.add_cycle_rel(rels, label).map_err(err)
    }

    /// Moves a generation-0 node; returns the keys whose instances changed.
    fn modify_point(&mut self, name: &str, x: Num, y: Num) -> PyResult<Vec<String>> {
        let p = [x, y].iter().map(|v| parse_expr(&v.text(), self.inner.tower_mut())).collect::<Result<Vec<_>, _>>().map_err(err)?;
        self.inner.modify_point(name, p).map_err(err)
    }

    #[pyo3(signature = (name, cascade = false))]
    fn delete(&mut self, name: &str, cascade: bool) -> PyResult<Vec<String>> {
        self.inner.delete_cycle(name, cascade).map_err(err)
    }

    /// Instances as `(k, [l, n], m)` tuples of expression text.
    fn get_cycle(&self, name: &str) -> PyResult<Vec<CycleTuple>> {
        Ok(self.inner.get_cycle(name).map_err(err)?.iter().map(cycle_tuple).collect())
    }

    fn free_params(&self, name: &str) -> PyResult<Vec<String>> {
        Ok(self.inner.node(name).map_err(err)?.free_params.iter().map(|p| p.name().to_string()).collect())
    }

    fn generation(&self, name: &str) -> PyResult<i64> {
        Ok(self.inner.node(name).map_err(err)?.generation)
    }

    fn keys(&self) -> Vec<String> {
        self.inner.nodes().map(|n| n.key.clone()).collect()
    }

    /// One of "True", "False", "Unknown" per consistent instance pair.
    fn check_rel(&self, k1: &str, k2: &str, kind: &str) -> PyResult<Vec<&'static str>> {
        Ok(self.inner.check_rel(k1, k2, kind).map_err(err)?.into_iter().map(|v| v.verdict()).collect())
    }

    fn measure(&self, k1: &str, k2: &str, kind: &str) -> PyResult<Vec<String>> {
        Ok(self.inner.measure(k1, k2, kind).map_err(err)?.iter().map(ToString::to_string).collect())
    }

    /// SVG document; `params` assigns every free parameter of drawn nodes.
    #[pyo3(signature = (params = None, viewport = None))]
    fn render_svg(&self, params: Option<HashMap<String, Num>>, viewport: Option<(Num, Num, Num, Num)>) -> PyResult<String> {
        let mut assign = HashMap::new();
        for (name, v) in params.unwrap_or_default() {
            assign.insert(Param::new(&name), rational(&name, &v)?);
        }
        let vp = match viewport {
            None => Viewport::default(),
            Some((x0, x1, y0, y1)) => {
                let d = Viewport::default();
                Viewport::new(rational("xmin", &x0)?, rational("xmax", &x1)?, rational("ymin", &y0)?, rational("ymax", &y1)?, d.width_px, d.height_px)
                    .map_err(err)?
            }
        };
        render_figure(&self.inner, &vp, &StyleMap::default(), &assign).map_err(|e: RenderError| err(e))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.string()
    }

    fn __repr__(&self) -> String {
        format!("<Figure: {} cycles in {} nodes>", self.inner.instance_count(), self.inner.len())
    }
}

#[pymodule]
#[pyo3(name = "cyclekit")]
pub fn cyclekit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFigure>()?;
    m.add("CycleKitError", m.py().get_type::<CycleKitError>())?;
    m.add("INFINITY", cyclekit::figure::INFINITY)?;
    m.add("REAL_LINE", cyclekit::figure::REAL_LINE)?;
    Ok(())
}
