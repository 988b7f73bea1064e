use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cyclekit::cycle::{Cycle, Metric};
use cyclekit::figure::{Figure, FigureError, Relation, RelationKind, Target};
use cyclekit::render::{render_figure, StyleMap, Viewport};
use cyclekit::symkern::rational::parse_rational;
use cyclekit::symkern::{parse_expr, Param, Probe, Rational, ZeroTest};

use crate::script::{parse_script, Line, RelationText, Statement};
use crate::CliError;

/// Exit status of a script run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    AssertFailed,
    AssertUnknown,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::AssertFailed => 1,
            Outcome::AssertUnknown => 2,
        }
    }
}

pub struct Runner {
    probe: Probe,
    base: PathBuf,
    figure: Option<Figure>,
    outcome: Outcome,
}

fn at(line: usize, source: impl Into<CliError>) -> CliError {
    CliError::AtLine { line, source: Box::new(source.into()) }
}

/// Parses `name=value` assignments of rational values.
pub fn parse_assignments(pairs: &[(String, String)]) -> Result<HashMap<Param, Rational>, CliError> {
    let mut out = HashMap::new();
    for (name, value) in pairs {
        if !Param::is_valid_name(name) {
            return Err(CliError::Usage(format!("'{name}' is not a parameter name")));
        }
        let q = parse_rational(value).ok_or_else(|| CliError::Usage(format!("{name}: '{value}' is not a rational number")))?;
        out.insert(Param::new(name), q);
    }
    Ok(out)
}

pub fn render_to_file(figure: &Figure, out: &Path, assign: &HashMap<Param, Rational>) -> Result<(), CliError> {
    let svg = render_figure(figure, &Viewport::default(), &StyleMap::default(), assign)?;
    fs::write(out, svg).map_err(|e| CliError::Io { path: out.display().to_string(), source: e })
}

pub fn read_figure(path: &Path, probe: Probe) -> Result<Figure, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    Ok(Figure::from_json_with_probe(&text, probe)?)
}

impl Runner {
    /// Relative file names in statements resolve against `base`.
    pub fn new(probe: Probe, base: impl Into<PathBuf>) -> Runner {
        Runner { probe, base: base.into(), figure: None, outcome: Outcome::Ok }
    }

    pub fn figure(&self) -> Option<&Figure> {
        self.figure.as_ref()
    }

    /// Runs `text`, appending report lines to `out`. Stops at the first
    /// error; failed assertions do not stop the run.
    pub fn run(&mut self, text: &str, out: &mut String) -> Result<Outcome, CliError> {
        for line in parse_script(text)? {
            self.execute(&line, out)?;
        }
        Ok(self.outcome)
    }

    fn path(&self, file: &str) -> PathBuf {
        self.base.join(file)
    }

    fn figure_mut(&mut self, line: usize) -> Result<&mut Figure, CliError> {
        self.figure.as_mut().ok_or_else(|| at(line, CliError::NoFigure))
    }

    fn note(&mut self, verdicts: &[ZeroTest]) {
        if verdicts.contains(&ZeroTest::NonZero) {
            self.outcome = Outcome::AssertFailed;
        } else if verdicts.contains(&ZeroTest::Unknown) && self.outcome == Outcome::Ok {
            self.outcome = Outcome::AssertUnknown;
        }
    }

    fn execute(&mut self, line: &Line, out: &mut String) -> Result<(), CliError> {
        let n = line.number;
        match &line.statement {
            Statement::Figure { sigma, sigma_cycle } => {
                let metric = Metric::new(2, *sigma, *sigma_cycle).map_err(|e| at(n, FigureError::from(e)))?;
                self.figure = Some(Figure::with_probe(metric, self.probe).map_err(|e| at(n, e))?);
            }
            Statement::Cycle { label, text } => {
                let f = self.figure_mut(n)?;
                let labelled = |e: FigureError| at(n, CliError::Node { label: label.clone(), source: e });
                let c = Cycle::parse(text, f.tower_mut()).map_err(|e| labelled(e.into()))?;
                f.add_cycle(c, label).map_err(labelled)?;
            }
            Statement::Point { label, coords } => {
                let f = self.figure_mut(n)?;
                let labelled = |e: FigureError| at(n, CliError::Node { label: label.clone(), source: e });
                let p = coords.iter().map(|c| parse_expr(c, f.tower_mut()).map_err(|e| labelled(e.into()))).collect::<Result<Vec<_>, _>>()?;
                f.add_point(p, label).map_err(labelled)?;
            }
            Statement::Relations { label, relations } => {
                let f = self.figure_mut(n)?;
                let labelled = |e: FigureError| at(n, CliError::Node { label: label.clone(), source: e });
                let rels = relations.iter().map(|r| relation(r, f)).collect::<Result<Vec<_>, _>>().map_err(labelled)?;
                let key = f.add_cycle_rel(rels, label).map_err(labelled)?;
                for note in &f.node(&key).map_err(labelled)?.notes {
                    let _ = writeln!(out, "note: {label}: {note}");
                }
            }
            Statement::Check { assert, kind, a, b } => {
                let f = self.figure_mut(n)?;
                let verdicts = f.check_rel(a, b, kind).map_err(|e| at(n, e))?;
                for v in &verdicts {
                    let _ = writeln!(out, "{a} and {b} are {kind}: {}", v.verdict());
                }
                if verdicts.is_empty() {
                    let _ = writeln!(out, "{a} and {b} have no consistent instance pairs");
                }
                if *assert {
                    self.note(&verdicts);
                }
            }
            Statement::Measure { kind, a, b } => {
                let f = self.figure_mut(n)?;
                for v in f.measure(a, b, kind).map_err(|e| at(n, e))? {
                    let _ = writeln!(out, "{kind}({a}, {b}) = {v}");
                }
            }
            Statement::Print => {
                let f = self.figure_mut(n)?;
                out.push_str(&f.string());
                if !out.ends_with('\n') {
                    out.push('\n');
                }
            }
            Statement::Svg { file, params } => {
                let assign = parse_assignments(params).map_err(|e| at(n, e))?;
                let path = self.path(file);
                let f = self.figure_mut(n)?;
                render_to_file(f, &path, &assign).map_err(|e| at(n, e))?;
                let _ = writeln!(out, "wrote {file}");
            }
            Statement::Save { file } => {
                let path = self.path(file);
                let f = self.figure_mut(n)?;
                fs::write(&path, f.to_json()).map_err(|e| at(n, CliError::Io { path: file.clone(), source: e }))?;
                let _ = writeln!(out, "saved {file}");
            }
            Statement::Load { file } => {
                let f = read_figure(&self.path(file), self.probe).map_err(|e| at(n, e))?;
                let _ = writeln!(out, "loaded {file}: {} nodes", f.len());
                self.figure = Some(f);
            }
        }
        Ok(())
    }
}

fn relation(r: &RelationText, f: &mut Figure) -> Result<Relation, FigureError> {
    let value = r.value.as_deref().map(|v| parse_expr(v, f.tower_mut())).transpose()?;
    let kind = RelationKind::from_name(&r.kind, value)?;
    let target = match r.target.as_deref() {
        None | Some("SELF") => Target::SelfNode,
        Some(t) => Target::node(t),
    };
    Ok(Relation::new(kind, target))
}
