//! Ensembles of cycles defined by invariant relations.
//!
//! A [`Figure`] is a DAG of nodes. Roots hold explicit cycles or points;
//! every other node is defined by relations to earlier nodes (or by a
//! subfigure) and carries all solution branches as instances.

mod serial;
mod solver;

pub use serial::{figures_equivalent, CycleDoc, FigureDoc, NodeDoc, RelationDoc, SubfigureDoc, SCHEMA_VERSION};
pub use solver::{relation_residual, residual_certified_nonzero};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::cycle::{self, point_cycle, Cycle, CycleError, Metric, PointCoords};
use crate::symkern::{Expr, Param, Probe, SymError, Tower, ZeroTest};

pub const INFINITY: &str = "infty";
pub const DEFAULT_SOLVE_LIMIT: Duration = Duration::from_secs(5);
pub const REAL_LINE: &str = "R";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FigureError {
    #[error("figures support only dimension 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("label '{0}' is already used")]
    DuplicateLabel(String),
    #[error("invalid label '{0}'")]
    InvalidLabel(String),
    #[error("no node '{0}'")]
    UnknownKey(String),
    #[error("relation target '{0}' does not exist")]
    UnknownTarget(String),
    #[error("no defining relations given")]
    NoRelations,
    #[error("relations for '{label}' have no solution: {details}")]
    UnsatisfiableRelations { label: String, details: String },
    #[error("'{0}' is not a root node")]
    NotARoot(String),
    #[error("'{key}' has dependents: {}", dependents.join(", "))]
    HasDependents { key: String, dependents: Vec<String> },
    #[error("reserved node '{0}' cannot be changed")]
    ReservedNode(String),
    #[error("unsupported kind '{0}'")]
    UnsupportedKind(String),
    #[error("subfigure expects {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid subfigure: {0}")]
    InvalidSubfigure(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError { line: usize, column: usize, message: String },
    #[error("unsupported schema version {0}")]
    SchemaVersionMismatch(u64),
    #[error("solver invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Sym(#[from] SymError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    SelfNode,
    Node(String),
}

impl Target {
    pub fn node(name: &str) -> Target {
        Target::Node(name.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelationKind {
    Orthogonal,
    Tangent,
    SelfOrthogonal,
    PassesInfinity,
    SteinerPower(Expr),
    AngleCosSq(Expr),
    OnlyReals,
}

impl RelationKind {
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::Orthogonal => "orthogonal",
            RelationKind::Tangent => "tangent",
            RelationKind::SelfOrthogonal => "self_orthogonal",
            RelationKind::PassesInfinity => "passes_infinity",
            RelationKind::SteinerPower(_) => "steiner_power",
            RelationKind::AngleCosSq(_) => "angle_cos_sq",
            RelationKind::OnlyReals => "only_reals",
        }
    }

    pub fn value(&self) -> Option<&Expr> {
        match self {
            RelationKind::SteinerPower(v) | RelationKind::AngleCosSq(v) => Some(v),
            _ => None,
        }
    }

    /// Builds a kind from its name and optional value.
    pub fn from_name(name: &str, value: Option<Expr>) -> Result<RelationKind, FigureError> {
        let need = |v: Option<Expr>| v.ok_or_else(|| FigureError::UnsupportedKind(format!("{name} needs a value")));
        Ok(match name {
            "orthogonal" => RelationKind::Orthogonal,
            "tangent" => RelationKind::Tangent,
            "self_orthogonal" => RelationKind::SelfOrthogonal,
            "passes_infinity" => RelationKind::PassesInfinity,
            "only_reals" => RelationKind::OnlyReals,
            "steiner_power" => RelationKind::SteinerPower(need(value)?),
            "angle_cos_sq" => RelationKind::AngleCosSq(need(value)?),
            other => return Err(FigureError::UnsupportedKind(other.to_string())),
        })
    }

    fn targets_self(&self) -> bool {
        matches!(self, RelationKind::SelfOrthogonal | RelationKind::PassesInfinity | RelationKind::OnlyReals)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub kind: RelationKind,
    pub target: Target,
}

impl Relation {
    /// Self-referential kinds always target `SELF`; orthogonality to `SELF`
    /// is self-orthogonality.
    pub fn new(kind: RelationKind, target: Target) -> Relation {
        if kind.targets_self() {
            return Relation { kind, target: Target::SelfNode };
        }
        if kind == RelationKind::Orthogonal && target == Target::SelfNode {
            return Relation { kind: RelationKind::SelfOrthogonal, target };
        }
        Relation { kind, target }
    }

    pub fn orthogonal(target: &str) -> Relation {
        Relation::new(RelationKind::Orthogonal, Target::node(target))
    }

    pub fn tangent(target: &str) -> Relation {
        Relation::new(RelationKind::Tangent, Target::node(target))
    }

    pub fn self_orthogonal() -> Relation {
        Relation::new(RelationKind::SelfOrthogonal, Target::SelfNode)
    }

    pub fn passes_infinity() -> Relation {
        Relation::new(RelationKind::PassesInfinity, Target::SelfNode)
    }

    pub fn only_reals() -> Relation {
        Relation::new(RelationKind::OnlyReals, Target::SelfNode)
    }

    pub fn steiner_power(target: &str, value: Expr) -> Relation {
        Relation::new(RelationKind::SteinerPower(value), Target::node(target))
    }

    pub fn angle_cos_sq(target: &str, value: Expr) -> Relation {
        Relation::new(RelationKind::AngleCosSq(value), Target::node(target))
    }

    pub fn target_key(&self) -> Option<&str> {
        match &self.target {
            Target::Node(k) => Some(k),
            Target::SelfNode => None,
        }
    }
}

/// A figure used as a macro: host cycles replace `inputs`, and only the
/// instances of `result` come back.
#[derive(Clone, Debug)]
pub struct Subfigure {
    figure: Figure,
    inputs: Vec<String>,
    result: String,
}

impl Subfigure {
    pub fn new(figure: Figure, inputs: &[&str], result: &str) -> Result<Subfigure, FigureError> {
        let inputs = inputs.iter().map(|i| figure.resolve(i)).collect::<Result<Vec<_>, _>>()?;
        let result = figure.resolve(result)?;
        for i in &inputs {
            if !figure.nodes[i].is_root() {
                return Err(FigureError::InvalidSubfigure(format!("input '{i}' is not a root")));
            }
        }
        let ancestors = figure.ancestors(&result);
        if let Some(missing) = inputs.iter().find(|i| !ancestors.contains(*i)) {
            return Err(FigureError::InvalidSubfigure(format!("result does not depend on '{missing}'")));
        }
        Ok(Subfigure { figure, inputs, result })
    }

    pub fn figure(&self) -> &Figure {
        &self.figure
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn result(&self) -> &str {
        &self.result
    }
}

#[derive(Clone, Debug)]
pub enum Definition {
    Reserved,
    Cycle(Cycle),
    Point(PointCoords),
    Relations(Vec<Relation>),
    Subfigure { sub: Arc<Subfigure>, inputs: Vec<String> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Solved,
    Unsatisfiable,
    PendingUnknown,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Solved => "solved",
            Status::Unsatisfiable => "unsatisfiable",
            Status::PendingUnknown => "pending_unknown",
        }
    }
}

/// Instance indices chosen at multi-instance ancestors along one derivation.
pub type Branch = BTreeMap<String, usize>;

/// Instances, their lineages, and whether some branch stayed undecided.
type Instantiated = (Vec<Cycle>, Vec<Vec<Branch>>, bool);

type PairMeasure<'a> = Box<dyn Fn(&Cycle, &Cycle) -> Result<Expr, CycleError> + 'a>;

fn merge_branch(a: &Branch, b: &Branch) -> Option<Branch> {
    let mut out = a.clone();
    for (k, v) in b {
        match out.insert(k.clone(), *v) {
            Some(w) if w != *v => return None,
            _ => {}
        }
    }
    Some(out)
}

/// Whether two instances can belong to one consistent choice of branches.
pub fn compatible(a: &[Branch], b: &[Branch]) -> bool {
    a.iter().any(|x| b.iter().any(|y| merge_branch(x, y).is_some()))
}

/// Instance combinations of `keys` whose lineages agree, with the merged
/// lineage of each.
pub(crate) fn consistent_combos(nodes: &HashMap<String, Node>, keys: &[String]) -> Vec<(Vec<usize>, Vec<Branch>)> {
    let mut out: Vec<(Vec<usize>, Vec<Branch>)> = vec![(Vec::new(), vec![Branch::new()])];
    for k in keys {
        let node = &nodes[k];
        let mut next = Vec::new();
        for (idx, lin) in &out {
            for (i, own) in node.lineage.iter().enumerate() {
                let merged: Vec<Branch> = lin.iter().flat_map(|a| own.iter().filter_map(move |b| merge_branch(a, b))).collect();
                if !merged.is_empty() {
                    next.push(([idx.clone(), vec![i]].concat(), dedup_branches(merged)));
                }
            }
        }
        out = next;
    }
    out
}

fn dedup_branches(mut v: Vec<Branch>) -> Vec<Branch> {
    v.sort();
    v.dedup();
    v
}

/// Tags each lineage with the instance index when there is a real choice.
fn finish_lineage(key: &str, lineage: &mut [Vec<Branch>]) {
    if lineage.len() > 1 {
        for (i, lin) in lineage.iter_mut().enumerate() {
            for b in lin.iter_mut() {
                b.insert(key.to_string(), i);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub key: String,
    pub label: String,
    pub generation: i64,
    pub definition: Definition,
    pub instances: Vec<Cycle>,
    /// Per instance, the ancestor branch choices it was derived from.
    pub lineage: Vec<Vec<Branch>>,
    pub free_params: Vec<Param>,
    pub status: Status,
    /// Solver diagnostics: assumed-zero pivots, reality conditions.
    pub notes: Vec<String>,
}

impl Node {
    pub fn relations(&self) -> &[Relation] {
        match &self.definition {
            Definition::Relations(r) => r,
            _ => &[],
        }
    }

    pub fn is_root(&self) -> bool {
        matches!(self.definition, Definition::Cycle(_) | Definition::Point(_))
    }

    pub fn is_point(&self) -> bool {
        matches!(self.definition, Definition::Point(_))
    }

    pub fn is_reserved(&self) -> bool {
        matches!(self.definition, Definition::Reserved)
    }

    /// Keys this node is computed from.
    pub fn dependencies(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |k: &str| {
            if !out.iter().any(|x| x == k) {
                out.push(k.to_string());
            }
        };
        match &self.definition {
            Definition::Relations(rels) => rels.iter().filter_map(Relation::target_key).for_each(&mut push),
            Definition::Subfigure { inputs, .. } => inputs.iter().for_each(|k| push(k)),
            _ => {}
        }
        out
    }
}

/// Generation contribution of a node to its dependents.
fn generation_weight(n: &Node) -> i64 {
    if n.is_reserved() {
        -1
    } else {
        n.generation
    }
}

#[derive(Clone, Debug)]
pub struct Figure {
    metric: Metric,
    nodes: HashMap<String, Node>,
    order: Vec<String>,
    counter: u64,
    tower: Tower,
    solve_limit: Duration,
}

impl Figure {
    pub fn new(metric: Metric) -> Result<Figure, FigureError> {
        Figure::with_probe(metric, Probe::default())
    }

    pub fn with_probe(metric: Metric, probe: Probe) -> Result<Figure, FigureError> {
        if metric.dim != 2 {
            return Err(FigureError::UnsupportedDimension(metric.dim));
        }
        let mut f = Figure { metric, nodes: HashMap::new(), order: Vec::new(), counter: 0, tower: Tower::with_probe(probe), solve_limit: DEFAULT_SOLVE_LIMIT };
        f.insert_reserved(INFINITY, -2, Cycle::infinity(2));
        f.insert_reserved(REAL_LINE, -1, Cycle::real_line());
        Ok(f)
    }

    /// Time allowed per combination of target instances when solving.
    pub fn solve_limit(&self) -> Duration {
        self.solve_limit
    }

    pub fn set_solve_limit(&mut self, limit: Duration) {
        self.solve_limit = limit;
    }

    fn insert_reserved(&mut self, key: &str, generation: i64, c: Cycle) {
        self.insert(Node {
            key: key.to_string(),
            label: key.to_string(),
            generation,
            definition: Definition::Reserved,
            instances: vec![c],
            lineage: vec![vec![Branch::new()]],
            free_params: Vec::new(),
            status: Status::Solved,
            notes: Vec::new(),
        });
    }

    fn insert(&mut self, node: Node) {
        self.order.push(node.key.clone());
        self.nodes.insert(node.key.clone(), node);
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn probe(&self) -> &Probe {
        &self.tower.probe
    }

    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn tower_mut(&mut self) -> &mut Tower {
        &mut self.tower
    }

    /// Nodes in topological (insertion) order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.order.iter().map(|k| &self.nodes[k])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn instance_count(&self) -> usize {
        self.nodes().map(|n| n.instances.len()).sum()
    }

    /// Resolves a key or a label to a key.
    pub fn resolve(&self, name: &str) -> Result<String, FigureError> {
        if self.nodes.contains_key(name) {
            return Ok(name.to_string());
        }
        self.order
            .iter()
            .find(|k| self.nodes[*k].label == name)
            .cloned()
            .ok_or_else(|| FigureError::UnknownKey(name.to_string()))
    }

    pub fn node(&self, name: &str) -> Result<&Node, FigureError> {
        Ok(&self.nodes[&self.resolve(name)?])
    }

    pub fn get_cycle(&self, name: &str) -> Result<&[Cycle], FigureError> {
        Ok(&self.node(name)?.instances)
    }

    /// Every parameter occurring in non-reserved instances.
    pub fn params(&self) -> BTreeSet<Param> {
        let mut out = BTreeSet::new();
        for n in self.nodes().filter(|n| !n.is_reserved()) {
            for c in &n.instances {
                for e in c.coeffs() {
                    out.extend(e.params());
                }
            }
        }
        out
    }

    fn check_label(&self, label: &str) -> Result<(), FigureError> {
        let bad = label.is_empty()
            || label == "SELF"
            || label.chars().any(|c| c.is_whitespace() || "(),[]:=\"{}|;".contains(c));
        if bad {
            return Err(FigureError::InvalidLabel(label.to_string()));
        }
        if self.nodes.values().any(|n| n.label == label) {
            return Err(FigureError::DuplicateLabel(label.to_string()));
        }
        Ok(())
    }

    fn next_key(&self, label: &str) -> String {
        format!("{label}.{}", self.counter + 1)
    }

    fn add_root(&mut self, label: &str, definition: Definition, instance: Cycle) -> Result<String, FigureError> {
        self.check_label(label)?;
        if instance.dim() != 2 {
            return Err(CycleError::DimensionMismatch(2, instance.dim()).into());
        }
        let instance = cycle::normalize(&instance, self.probe())?.cycle;
        let key = self.next_key(label);
        self.counter += 1;
        let free_params = instance.coeffs().iter().flat_map(|e| e.params()).collect::<BTreeSet<_>>().into_iter().collect();
        self.insert(Node {
            key: key.clone(),
            label: label.to_string(),
            generation: 0,
            definition,
            instances: vec![instance],
            lineage: vec![vec![Branch::new()]],
            free_params,
            status: Status::Solved,
            notes: Vec::new(),
        });
        Ok(key)
    }

    /// Adds an explicit cycle at generation 0.
    pub fn add_cycle(&mut self, c: Cycle, label: &str) -> Result<String, FigureError> {
        let c = c.adopt(&mut self.tower);
        self.add_root(label, Definition::Cycle(c.clone()), c)
    }

    /// Adds a point at generation 0; its instance is the point cycle.
    pub fn add_point(&mut self, p: PointCoords, label: &str) -> Result<String, FigureError> {
        let p: PointCoords = p.iter().map(|e| self.tower.adopt(e)).collect();
        if p.len() != 2 {
            return Err(CycleError::DimensionMismatch(2, p.len()).into());
        }
        let c = point_cycle(&p, &self.metric);
        self.add_root(label, Definition::Point(p), c)
    }

    fn resolve_relations(&mut self, relations: Vec<Relation>, label: &str) -> Result<Vec<Relation>, FigureError> {
        let mut out = Vec::with_capacity(relations.len());
        for r in relations {
            out.push({
                let target = match &r.target {
                    Target::SelfNode => Target::SelfNode,
                    Target::Node(n) if n == label || n == "SELF" => Target::SelfNode,
                    Target::Node(n) => Target::Node(self.resolve(n).map_err(|_| FigureError::UnknownTarget(n.clone()))?),
                };
                let kind = match r.kind {
                    RelationKind::SteinerPower(v) => RelationKind::SteinerPower(self.tower.adopt(&v)),
                    RelationKind::AngleCosSq(v) => RelationKind::AngleCosSq(self.tower.adopt(&v)),
                    k => k,
                };
                Relation::new(kind, target)
            });
        }
        Ok(out)
    }

    fn generation_of(&self, deps: &[String]) -> i64 {
        deps.iter().map(|k| generation_weight(&self.nodes[k])).max().unwrap_or(-1) + 1
    }

    /// Adds a node defined by relations and solves it.
    pub fn add_cycle_rel(&mut self, relations: Vec<Relation>, label: &str) -> Result<String, FigureError> {
        if relations.is_empty() {
            return Err(FigureError::NoRelations);
        }
        self.check_label(label)?;
        let relations = self.resolve_relations(relations, label)?;
        let mut node = Node {
            key: String::new(),
            label: label.to_string(),
            generation: 0,
            definition: Definition::Relations(relations),
            instances: Vec::new(),
            lineage: Vec::new(),
            free_params: Vec::new(),
            status: Status::Solved,
            notes: Vec::new(),
        };
        node.generation = self.generation_of(&node.dependencies());
        node.key = self.next_key(label);
        self.solve_into(&mut node)?;
        if node.status != Status::Solved {
            return Err(FigureError::UnsatisfiableRelations { label: label.to_string(), details: node.notes.join("; ") });
        }
        self.counter += 1;
        let key = node.key.clone();
        self.insert(node);
        Ok(key)
    }

    /// Instantiates `sub` on host nodes; only its result becomes a node here.
    pub fn add_subfigure(&mut self, sub: Subfigure, inputs: &[&str], label: &str) -> Result<String, FigureError> {
        if inputs.len() != sub.inputs.len() {
            return Err(FigureError::ArityMismatch { expected: sub.inputs.len(), got: inputs.len() });
        }
        self.check_label(label)?;
        let inputs = inputs.iter().map(|i| self.resolve(i)).collect::<Result<Vec<_>, _>>()?;
        let mut node = Node {
            key: String::new(),
            label: label.to_string(),
            generation: self.generation_of(&inputs),
            definition: Definition::Subfigure { sub: Arc::new(sub), inputs },
            instances: Vec::new(),
            lineage: Vec::new(),
            free_params: Vec::new(),
            status: Status::Solved,
            notes: Vec::new(),
        };
        node.key = self.next_key(label);
        self.solve_into(&mut node)?;
        if node.status != Status::Solved {
            return Err(FigureError::UnsatisfiableRelations { label: label.to_string(), details: node.notes.join("; ") });
        }
        self.counter += 1;
        let key = node.key.clone();
        self.insert(node);
        Ok(key)
    }

    /// Recomputes the instances of a derived node from its definition.
    fn solve_into(&mut self, node: &mut Node) -> Result<(), FigureError> {
        match node.definition.clone() {
            Definition::Relations(rels) => {
                let out = solver::solve_relations(&self.nodes, self.solve_limit, &self.metric, &mut self.tower, &node.label, &rels)?;
                node.instances = out.instances;
                node.lineage = out.lineage;
                node.free_params = out.free_params;
                node.notes = out.notes;
                node.status = if !node.instances.is_empty() {
                    Status::Solved
                } else if out.undecided {
                    Status::PendingUnknown
                } else {
                    Status::Unsatisfiable
                };
                if node.status == Status::Unsatisfiable && node.notes.is_empty() {
                    node.notes.push("the relations are inconsistent".into());
                }
            }
            Definition::Subfigure { sub, inputs } => {
                let (instances, lineage, undecided) = self.instantiate(&sub, &inputs)?;
                node.lineage = lineage;
                let inherited: BTreeSet<Param> = inputs
                    .iter()
                    .flat_map(|k| self.nodes[k].instances.iter())
                    .flat_map(|c| c.coeffs().into_iter().flat_map(|e| e.params()).collect::<Vec<_>>())
                    .collect();
                let own: BTreeSet<Param> = instances.iter().flat_map(|c| c.coeffs().into_iter().flat_map(|e| e.params()).collect::<Vec<_>>()).collect();
                node.free_params = own.difference(&inherited).cloned().collect();
                node.instances = instances;
                node.notes.clear();
                node.status = if !node.instances.is_empty() {
                    Status::Solved
                } else if undecided {
                    Status::PendingUnknown
                } else {
                    Status::Unsatisfiable
                };
            }
            _ => {}
        }
        finish_lineage(&node.key, &mut node.lineage);
        Ok(())
    }

    fn instantiate(&mut self, sub: &Subfigure, inputs: &[String]) -> Result<Instantiated, FigureError> {
        let lists: Vec<Vec<Cycle>> = inputs.iter().map(|k| self.nodes[k].instances.clone()).collect();
        let mut out: Vec<Cycle> = Vec::new();
        let mut lineage: Vec<Vec<Branch>> = Vec::new();
        let mut undecided = false;
        for (combo, lin) in consistent_combos(&self.nodes, inputs) {
            let mut inner = sub.figure.clone();
            inner.tower.probe = self.tower.probe;
            for (slot, (inner_key, &i)) in sub.inputs.iter().zip(&combo).enumerate() {
                inner.set_root(inner_key, lists[slot][i].clone())?;
            }
            let result = &inner.nodes[&sub.result];
            if result.status == Status::PendingUnknown {
                undecided = true;
            }
            for c in result.instances.clone() {
                let c = c.adopt(&mut self.tower);
                match out.iter().position(|o| cycle::equal_up_to_scale(o, &c, self.probe()) == ZeroTest::Zero) {
                    Some(i) => lineage[i] = dedup_branches([lineage[i].clone(), lin.clone()].concat()),
                    None => {
                        out.push(c);
                        lineage.push(lin.clone());
                    }
                }
            }
        }
        Ok((out, lineage, undecided))
    }

    /// Replaces a root's definition and re-solves its dependents.
    fn set_root(&mut self, key: &str, c: Cycle) -> Result<Vec<String>, FigureError> {
        let node = &self.nodes[key];
        let definition = if node.is_point() && c.l.len() == 2 && self.probe().zero_test(&c.k) == ZeroTest::NonZero {
            Definition::Point(cycle::center(&c, self.probe())?)
        } else {
            Definition::Cycle(c.clone())
        };
        let c = cycle::normalize(&c, self.probe())?.cycle;
        let changed = self.nodes[key].instances != vec![c.clone()];
        let node = self.nodes.get_mut(key).expect("key checked");
        node.instances = vec![c];
        node.lineage = vec![vec![Branch::new()]];
        node.definition = definition;
        node.free_params = node.instances[0].coeffs().iter().flat_map(|e| e.params()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut updated = if changed { vec![key.to_string()] } else { Vec::new() };
        updated.extend(self.resolve_descendants(key)?);
        Ok(updated)
    }

    /// Re-solves every transitive dependent of `key` in topological order and
    /// returns the keys whose instances changed.
    fn resolve_descendants(&mut self, key: &str) -> Result<Vec<String>, FigureError> {
        let desc = self.descendants(key);
        let mut changed = Vec::new();
        for k in desc {
            let mut node = self.nodes[&k].clone();
            let before = node.instances.clone();
            node.generation = self.generation_of(&node.dependencies());
            if let Err(e) = self.solve_into(&mut node) {
                node.instances.clear();
                node.status = Status::Unsatisfiable;
                node.notes = vec![e.to_string()];
            }
            if node.instances != before {
                changed.push(k.clone());
            }
            self.nodes.insert(k, node);
        }
        Ok(changed)
    }

    fn root_key(&self, name: &str) -> Result<String, FigureError> {
        let key = self.resolve(name)?;
        let node = &self.nodes[&key];
        if node.is_reserved() {
            return Err(FigureError::ReservedNode(key));
        }
        if !node.is_root() {
            return Err(FigureError::NotARoot(key));
        }
        Ok(key)
    }

    /// Replaces the cycle of a generation-0 node; returns the keys whose
    /// instances changed.
    pub fn modify_cycle(&mut self, name: &str, c: Cycle) -> Result<Vec<String>, FigureError> {
        let key = self.root_key(name)?;
        let c = c.adopt(&mut self.tower);
        if c.dim() != 2 {
            return Err(CycleError::DimensionMismatch(2, c.dim()).into());
        }
        self.set_root(&key, c)
    }

    /// Moves a generation-0 node to the point cycle of `p`.
    pub fn modify_point(&mut self, name: &str, p: PointCoords) -> Result<Vec<String>, FigureError> {
        let key = self.root_key(name)?;
        if p.len() != 2 {
            return Err(CycleError::DimensionMismatch(2, p.len()).into());
        }
        let p: PointCoords = p.iter().map(|e| self.tower.adopt(e)).collect();
        let c = point_cycle(&p, &self.metric);
        let node = self.nodes.get_mut(&key).expect("key checked");
        node.definition = Definition::Point(p);
        self.set_root(&key, c)
    }

    /// Direct dependents in topological order.
    pub fn dependents(&self, key: &str) -> Vec<String> {
        self.order.iter().filter(|k| self.nodes[*k].dependencies().iter().any(|d| d == key)).cloned().collect()
    }

    /// Transitive dependents in topological order.
    pub fn descendants(&self, key: &str) -> Vec<String> {
        let mut seen: HashSet<&str> = HashSet::from([key]);
        let mut out = Vec::new();
        for k in &self.order {
            if self.nodes[k].dependencies().iter().any(|d| seen.contains(d.as_str())) {
                seen.insert(k);
                out.push(k.clone());
            }
        }
        out
    }

    /// Transitive dependencies of `key`.
    pub fn ancestors(&self, key: &str) -> HashSet<String> {
        let mut out = HashSet::new();
        let mut stack = vec![key.to_string()];
        while let Some(k) = stack.pop() {
            for d in self.nodes[&k].dependencies() {
                if out.insert(d.clone()) {
                    stack.push(d);
                }
            }
        }
        out
    }

    /// Removes a node, and with `cascade` all of its dependents; returns the
    /// removed keys.
    pub fn delete_cycle(&mut self, name: &str, cascade: bool) -> Result<Vec<String>, FigureError> {
        let key = self.resolve(name)?;
        if self.nodes[&key].is_reserved() {
            return Err(FigureError::ReservedNode(key));
        }
        let desc = self.descendants(&key);
        if !desc.is_empty() && !cascade {
            return Err(FigureError::HasDependents { key, dependents: desc });
        }
        let mut removed = vec![key];
        removed.extend(desc);
        for k in &removed {
            self.nodes.remove(k);
        }
        self.order.retain(|k| !removed.contains(k));
        Ok(removed)
    }

    /// Instance index pairs of two nodes whose lineages agree, in row-major
    /// order.
    pub fn instance_pairs(&self, k1: &str, k2: &str) -> Result<Vec<(usize, usize)>, FigureError> {
        let (a, b) = (self.node(k1)?, self.node(k2)?);
        let mut out = Vec::new();
        for i in 0..a.instances.len() {
            for j in 0..b.instances.len() {
                if compatible(&a.lineage[i], &b.lineage[j]) {
                    out.push((i, j));
                }
            }
        }
        Ok(out)
    }

    fn pairs(&self, k1: &str, k2: &str) -> Result<Vec<(Cycle, Cycle)>, FigureError> {
        let (a, b) = (self.get_cycle(k1)?, self.get_cycle(k2)?);
        Ok(self.instance_pairs(k1, k2)?.into_iter().map(|(i, j)| (a[i].clone(), b[j].clone())).collect())
    }

    /// One verdict per consistent instance pair; `Zero` means the relation
    /// holds.
    pub fn check_rel(&self, k1: &str, k2: &str, kind: &str) -> Result<Vec<ZeroTest>, FigureError> {
        let residual: fn(&Cycle, &Cycle, &Metric) -> Result<Expr, CycleError> = match kind {
            "orthogonal" => cycle::inner,
            "tangent" => cycle::tangency_defect,
            other => return Err(FigureError::UnsupportedKind(other.to_string())),
        };
        self.pairs(k1, k2)?
            .iter()
            .map(|(a, b)| Ok(self.probe().zero_test(&residual(a, b, &self.metric)?)))
            .collect()
    }

    /// One value per consistent instance pair.
    pub fn measure(&self, k1: &str, k2: &str, kind: &str) -> Result<Vec<Expr>, FigureError> {
        let (g, p) = (&self.metric, self.probe());
        let f: PairMeasure = match kind {
            "angle_cos_sq" => Box::new(move |a, b| cycle::angle_cos_sq(a, b, g, p)),
            "steiner_power" => Box::new(move |a, b| cycle::steiner_power(a, b, g, p)),
            "inner" => Box::new(move |a, b| cycle::inner(a, b, g)),
            other => return Err(FigureError::UnsupportedKind(other.to_string())),
        };
        self.pairs(k1, k2)?.iter().map(|(a, b)| f(a, b).map_err(Into::into)).collect()
    }

    /// Generation each node would get from a full recompute.
    pub fn recomputed_generation(&self, key: &str) -> Result<i64, FigureError> {
        let node = self.node(key)?;
        Ok(match node.definition {
            Definition::Reserved => node.generation,
            Definition::Cycle(_) | Definition::Point(_) => 0,
            _ => self.generation_of(&node.dependencies()),
        })
    }

    fn relation_abbrev(&self, label: &str, r: &Relation) -> String {
        let target = match r.target_key() {
            Some(k) => self.nodes.get(k).map_or(k, |n| n.label.as_str()).to_string(),
            None => label.to_string(),
        };
        match &r.kind {
            RelationKind::Orthogonal | RelationKind::SelfOrthogonal => format!("{target}|o"),
            RelationKind::Tangent => format!("{target}|t"),
            RelationKind::PassesInfinity => format!("{INFINITY}|o"),
            RelationKind::OnlyReals => format!("{target}|r"),
            RelationKind::SteinerPower(v) => format!("{target}|s={v}"),
            RelationKind::AngleCosSq(v) => format!("{target}|a={v}"),
        }
    }

    /// Human-readable dump, one line per node.
    pub fn string(&self) -> String {
        let mut s = String::new();
        for n in self.nodes() {
            let inst: Vec<String> = n.instances.iter().map(Cycle::to_string).collect();
            let deps: Vec<&str> = self.dependents(&n.key).iter().map(|k| self.nodes[k].label.as_str()).collect();
            let rels: Vec<String> = match &n.definition {
                Definition::Subfigure { inputs, .. } => {
                    inputs.iter().map(|k| format!("{}|sub", self.nodes[k].label)).collect()
                }
                _ => n.relations().iter().map(|r| self.relation_abbrev(&n.label, r)).collect(),
            };
            let mut body = inst.join(", ");
            if !body.is_empty() {
                body.push_str(", ");
            }
            let _ = writeln!(s, "{}: {{{}{}}} --> ({});  <-- ({})", n.label, body, n.generation, deps.join(","), rels.join(","));
        }
        let _ = write!(s, "Altogether {} cycles in {} cycle_nodes.", self.instance_count(), self.len());
        s
    }
}
