use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cycle::{self, Cycle, Metric};
use crate::symkern::{parse_expr, Expr, Param, Probe, Tower, ZeroTest};

use super::{Branch, Definition, Figure, FigureError, Node, Relation, RelationKind, Status, Subfigure, Target, INFINITY, REAL_LINE};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CycleDoc {
    pub k: String,
    pub l: Vec<String>,
    pub m: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RelationDoc {
    pub kind: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SubfigureDoc {
    /// Host keys bound to the inputs.
    pub inputs: Vec<String>,
    pub inner_inputs: Vec<String>,
    pub result: String,
    pub figure: Box<FigureDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NodeDoc {
    pub key: String,
    pub label: String,
    pub generation: i64,
    pub relations: Vec<RelationDoc>,
    pub instances: Vec<CycleDoc>,
    /// Ancestor branch choices per instance; omitted when trivial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Vec<Vec<Branch>>>,
    pub free_params: Vec<String>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subfigure: Option<SubfigureDoc>,
}

/// Serialized figure; nodes are listed so that targets precede dependents.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FigureDoc {
    pub version: u64,
    pub metric: Metric,
    pub nodes: Vec<NodeDoc>,
}

#[derive(Deserialize)]
struct VersionOnly {
    version: u64,
}

fn cycle_doc(c: &Cycle) -> CycleDoc {
    CycleDoc { k: c.k.to_string(), l: c.l.iter().map(Expr::to_string).collect(), m: c.m.to_string() }
}

fn parse_error(message: impl Into<String>) -> FigureError {
    FigureError::ParseError { line: 0, column: 0, message: message.into() }
}

fn expr(text: &str, tower: &mut Tower) -> Result<Expr, FigureError> {
    parse_expr(text, tower).map_err(|e| parse_error(format!("expression '{text}': {e}")))
}

fn cycle_from(doc: &CycleDoc, tower: &mut Tower) -> Result<Cycle, FigureError> {
    let l = doc.l.iter().map(|x| expr(x, tower)).collect::<Result<Vec<_>, _>>()?;
    Ok(Cycle::new(expr(&doc.k, tower)?, l, expr(&doc.m, tower)?))
}

impl Figure {
    pub fn to_doc(&self) -> FigureDoc {
        let nodes = self
            .nodes()
            .map(|n| NodeDoc {
                key: n.key.clone(),
                label: n.label.clone(),
                generation: n.generation,
                relations: n
                    .relations()
                    .iter()
                    .map(|r| RelationDoc {
                        kind: r.kind.name().to_string(),
                        target: r.target_key().unwrap_or("SELF").to_string(),
                        value: r.kind.value().map(Expr::to_string),
                    })
                    .collect(),
                instances: n.instances.iter().map(cycle_doc).collect(),
                lineage: n.lineage.iter().flatten().any(|b| !b.is_empty()).then(|| n.lineage.clone()),
                free_params: n.free_params.iter().map(|p| p.name().to_string()).collect(),
                status: n.status.name().to_string(),
                point: match &n.definition {
                    Definition::Point(p) => Some(p.iter().map(Expr::to_string).collect()),
                    _ => None,
                },
                subfigure: match &n.definition {
                    Definition::Subfigure { sub, inputs } => Some(SubfigureDoc {
                        inputs: inputs.clone(),
                        inner_inputs: sub.inputs.clone(),
                        result: sub.result.clone(),
                        figure: Box::new(sub.figure.to_doc()),
                    }),
                    _ => None,
                },
            })
            .collect();
        FigureDoc { version: SCHEMA_VERSION, metric: self.metric, nodes }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("figure documents serialize")
    }

    /// Reads a figure; expressions are parsed into a fresh tower.
    pub fn from_json(text: &str) -> Result<Figure, FigureError> {
        Figure::from_json_with_probe(text, Probe::default())
    }

    pub fn from_json_with_probe(text: &str, probe: Probe) -> Result<Figure, FigureError> {
        let located = |e: serde_json::Error| FigureError::ParseError { line: e.line(), column: e.column(), message: e.to_string() };
        let v: VersionOnly = serde_json::from_str(text).map_err(located)?;
        if v.version != SCHEMA_VERSION {
            return Err(FigureError::SchemaVersionMismatch(v.version));
        }
        let doc: FigureDoc = serde_json::from_str(text).map_err(located)?;
        Figure::from_doc(&doc, probe)
    }

    pub fn from_doc(doc: &FigureDoc, probe: Probe) -> Result<Figure, FigureError> {
        if doc.version != SCHEMA_VERSION {
            return Err(FigureError::SchemaVersionMismatch(doc.version));
        }
        let metric = Metric::new(doc.metric.dim, doc.metric.sigma, doc.metric.sigma_cycle)?;
        let mut f = Figure::with_probe(metric, probe)?;
        f.nodes.clear();
        f.order.clear();
        for nd in &doc.nodes {
            if f.nodes.contains_key(&nd.key) {
                return Err(parse_error(format!("duplicate key '{}'", nd.key)));
            }
            let instances = nd.instances.iter().map(|c| cycle_from(c, &mut f.tower)).collect::<Result<Vec<_>, _>>()?;
            let mut relations = Vec::new();
            for r in &nd.relations {
                let value = r.value.as_deref().map(|v| expr(v, &mut f.tower)).transpose()?;
                let kind = RelationKind::from_name(&r.kind, value).map_err(|e| parse_error(e.to_string()))?;
                let target = if r.target == "SELF" {
                    Target::SelfNode
                } else if f.nodes.contains_key(&r.target) {
                    Target::Node(r.target.clone())
                } else {
                    return Err(parse_error(format!("relation target '{}' is not listed before '{}'", r.target, nd.key)));
                };
                relations.push(Relation::new(kind, target));
            }
            let definition = if nd.key == INFINITY || nd.key == REAL_LINE {
                Definition::Reserved
            } else if let Some(s) = &nd.subfigure {
                if let Some(missing) = s.inputs.iter().find(|k| !f.nodes.contains_key(*k)) {
                    return Err(parse_error(format!("subfigure input '{missing}' is not listed before '{}'", nd.key)));
                }
                let inner = Figure::from_doc(&s.figure, probe)?;
                let inner_inputs: Vec<&str> = s.inner_inputs.iter().map(String::as_str).collect();
                let sub = Subfigure::new(inner, &inner_inputs, &s.result)?;
                Definition::Subfigure { sub: Arc::new(sub), inputs: s.inputs.clone() }
            } else if !relations.is_empty() {
                Definition::Relations(relations)
            } else if let Some(p) = &nd.point {
                Definition::Point(p.iter().map(|x| expr(x, &mut f.tower)).collect::<Result<_, _>>()?)
            } else {
                let c = instances.first().ok_or_else(|| parse_error(format!("root '{}' has no instance", nd.key)))?;
                Definition::Cycle(c.clone())
            };
            let status = match nd.status.as_str() {
                "solved" => Status::Solved,
                "unsatisfiable" => Status::Unsatisfiable,
                "pending_unknown" => Status::PendingUnknown,
                other => return Err(parse_error(format!("unknown status '{other}'"))),
            };
            if let Some(n) = nd.key.rsplit_once('.').and_then(|(_, n)| n.parse::<u64>().ok()) {
                f.counter = f.counter.max(n);
            }
            let lineage = nd.lineage.clone().unwrap_or_else(|| vec![vec![Branch::new()]; instances.len()]);
            if lineage.len() != instances.len() {
                return Err(parse_error(format!("lineage of '{}' does not match its instances", nd.key)));
            }
            f.insert(Node {
                key: nd.key.clone(),
                label: nd.label.clone(),
                generation: nd.generation,
                definition,
                instances,
                lineage,
                free_params: nd.free_params.iter().map(|p| Param::new(p)).collect(),
                status,
                notes: Vec::new(),
            });
        }
        for reserved in [INFINITY, REAL_LINE] {
            if !f.nodes.contains_key(reserved) {
                return Err(parse_error(format!("missing reserved node '{reserved}'")));
            }
        }
        Ok(f)
    }
}

fn same_cycle(a: &Cycle, b: &Cycle, probe: &Probe) -> bool {
    let na = cycle::normalize(a, probe).map(|n| n.cycle.to_string());
    let nb = cycle::normalize(b, probe).map(|n| n.cycle.to_string());
    matches!((na, nb), (Ok(x), Ok(y)) if x == y) || cycle::equal_up_to_scale(a, b, probe) == ZeroTest::Zero
}

/// Node-wise equality: keys, labels, generations, relations, and instances
/// up to scale. Works across figures with separate towers.
pub fn figures_equivalent(a: &Figure, b: &Figure) -> bool {
    let probe = a.probe();
    a.metric == b.metric
        && a.len() == b.len()
        && a.nodes().zip(b.nodes()).all(|(x, y)| {
            let rel = |n: &Node| n.relations().iter().map(|r| format!("{}:{:?}:{:?}", r.kind.name(), r.target, r.kind.value().map(Expr::to_string))).collect::<Vec<_>>();
            x.key == y.key
                && x.label == y.label
                && x.generation == y.generation
                && x.status == y.status
                && x.free_params == y.free_params
                && x.lineage == y.lineage
                && rel(x) == rel(y)
                && x.instances.len() == y.instances.len()
                && x.instances.iter().zip(&y.instances).all(|(c, d)| same_cycle(c, d, probe))
        })
}
