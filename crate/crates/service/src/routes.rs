use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderName, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use cyclekit::cycle::Cycle;
use cyclekit::figure::{CycleDoc, Figure, FigureError, Node, Relation, RelationKind, Target};
use cyclekit::render::{render_figure, StyleMap, Viewport};
use cyclekit::symkern::rational::parse_rational;
use cyclekit::symkern::{parse_expr, Expr, Param, Rational, Tower};

use crate::{ApiError, Session};

type Shared = State<Arc<Session>>;

const REVISION: HeaderName = HeaderName::from_static("x-revision");

pub fn routes(session: Arc<Session>) -> Router {
    Router::new()
        .route("/figure", get(get_figure))
        .route("/figure/nodes", post(add_node))
        .route("/figure/nodes/{key}", patch(move_node).delete(delete_node))
        .route("/figure/check", post(check))
        .route("/figure/render.svg", get(render))
        .with_state(session)
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

/// A JSON number or an expression string.
#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Text(String),
    Number(serde_json::Number),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Text(s) => s.clone(),
            Scalar::Number(n) => n.to_string(),
        }
    }

    fn expr(&self, tower: &mut Tower) -> Result<Expr, FigureError> {
        Ok(parse_expr(&self.text(), tower)?)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CycleInput {
    Text(String),
    Coeffs { k: Scalar, l: Vec<Scalar>, m: Scalar },
}

impl CycleInput {
    fn cycle(&self, tower: &mut Tower) -> Result<Cycle, FigureError> {
        Ok(match self {
            CycleInput::Text(t) => Cycle::parse(t, tower)?,
            CycleInput::Coeffs { k, l, m } => {
                let l = l.iter().map(|x| x.expr(tower)).collect::<Result<Vec<_>, _>>()?;
                Cycle::new(k.expr(tower)?, l, m.expr(tower)?)
            }
        })
    }
}

fn point(coords: &[Scalar], tower: &mut Tower) -> Result<Vec<Expr>, FigureError> {
    coords.iter().map(|x| x.expr(tower)).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationIn {
    kind: String,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    value: Option<Scalar>,
}

impl RelationIn {
    fn relation(&self, tower: &mut Tower) -> Result<Relation, FigureError> {
        let value = self.value.as_ref().map(|v| v.expr(tower)).transpose()?;
        let kind = RelationKind::from_name(&self.kind, value)?;
        let target = match self.target.as_deref() {
            None | Some("SELF") => Target::SelfNode,
            Some(t) => Target::node(t),
        };
        Ok(Relation::new(kind, target))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddNode {
    label: String,
    #[serde(default)]
    cycle: Option<CycleInput>,
    #[serde(default)]
    point: Option<Vec<Scalar>>,
    #[serde(default)]
    relations: Option<Vec<RelationIn>>,
    #[serde(default)]
    expected_revision: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveNode {
    #[serde(default)]
    point: Option<Vec<Scalar>>,
    #[serde(default)]
    cycle: Option<CycleInput>,
    #[serde(default)]
    expected_revision: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckBody {
    k1: String,
    k2: String,
    kind: String,
}

fn cycle_doc(c: &Cycle) -> CycleDoc {
    CycleDoc { k: c.k.to_string(), l: c.l.iter().map(Expr::to_string).collect(), m: c.m.to_string() }
}

fn node_view(n: &Node) -> Value {
    json!({
        "key": n.key,
        "label": n.label,
        "generation": n.generation,
        "instances": n.instances.iter().map(cycle_doc).collect::<Vec<_>>(),
        "free_params": n.free_params.iter().map(|p| p.name()).collect::<Vec<_>>(),
        "status": n.status.name(),
        "notes": n.notes,
    })
}

async fn get_figure(State(session): Shared) -> Response {
    let snap = session.snapshot();
    ([(header::CONTENT_TYPE, "application/json".to_string()), (REVISION, snap.revision.to_string())], snap.document().to_string()).into_response()
}

async fn add_node(State(session): Shared, body: Bytes) -> Result<Response, ApiError> {
    let req: AddNode = parse_body(&body)?;
    let given = [req.cycle.is_some(), req.point.is_some(), req.relations.is_some()].iter().filter(|x| **x).count();
    if given != 1 {
        return Err(ApiError::bad_request("give exactly one of cycle, point or relations"));
    }
    let expected = req.expected_revision;
    let (key, snap) = session
        .mutate(expected, move |f: &mut Figure| {
            if let Some(c) = &req.cycle {
                let c = c.cycle(f.tower_mut())?;
                f.add_cycle(c, &req.label)
            } else if let Some(p) = &req.point {
                let p = point(p, f.tower_mut())?;
                f.add_point(p, &req.label)
            } else {
                let rels = req.relations.as_deref().unwrap_or_default();
                let rels = rels.iter().map(|r| r.relation(f.tower_mut())).collect::<Result<Vec<_>, _>>()?;
                f.add_cycle_rel(rels, &req.label)
            }
        })
        .await?;
    let node = snap.figure.node(&key).map_err(ApiError::from)?;
    let mut body = node_view(node);
    body["revision"] = snap.revision.into();
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn move_node(State(session): Shared, Path(key): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: MoveNode = parse_body(&body)?;
    if req.point.is_some() == req.cycle.is_some() {
        return Err(ApiError::bad_request("give exactly one of point or cycle"));
    }
    let (updated, snap) = session
        .mutate(req.expected_revision, move |f: &mut Figure| {
            if let Some(p) = &req.point {
                let p = point(p, f.tower_mut())?;
                f.modify_point(&key, p)
            } else {
                let c = req.cycle.as_ref().expect("checked").cycle(f.tower_mut())?;
                f.modify_cycle(&key, c)
            }
        })
        .await?;
    Ok(Json(json!({ "revision": snap.revision, "updated_keys": updated })))
}

fn flag(q: &HashMap<String, String>, name: &str) -> Result<Option<bool>, ApiError> {
    q.get(name)
        .map(|v| match v.as_str() {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            _ => Err(ApiError::bad_request(format!("{name} must be true or false"))),
        })
        .transpose()
}

fn number<T: std::str::FromStr>(q: &HashMap<String, String>, name: &str) -> Result<Option<T>, ApiError> {
    q.get(name).map(|v| v.parse().map_err(|_| ApiError::bad_request(format!("{name} must be a non-negative integer")))).transpose()
}

async fn delete_node(State(session): Shared, Path(key): Path<String>, Query(q): Query<HashMap<String, String>>) -> Result<Json<Value>, ApiError> {
    let cascade = flag(&q, "cascade")?.unwrap_or(false);
    let expected = number(&q, "expected_revision")?;
    let (removed, snap) = session.mutate(expected, move |f: &mut Figure| f.delete_cycle(&key, cascade)).await?;
    Ok(Json(json!({ "revision": snap.revision, "removed_keys": removed })))
}

async fn check(State(session): Shared, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: CheckBody = parse_body(&body)?;
    let snap = session.snapshot();
    let figure = snap.figure.clone();
    let (verdicts, pairs) = tokio::task::spawn_blocking(move || {
        let verdicts = figure.check_rel(&req.k1, &req.k2, &req.kind)?;
        let pairs = figure.instance_pairs(&req.k1, &req.k2)?;
        Ok::<_, FigureError>((verdicts, pairs))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let verdicts: Vec<&str> = verdicts.iter().map(|v| v.verdict()).collect();
    Ok(Json(json!({ "verdicts": verdicts, "pairs": pairs, "revision": snap.revision })))
}

fn rational(name: &str, text: &str) -> Result<Rational, ApiError> {
    parse_rational(text).ok_or_else(|| ApiError::bad_request(format!("{name}: '{text}' is not a rational number")))
}

fn viewport(q: &HashMap<String, String>) -> Result<Viewport, ApiError> {
    let d = Viewport::default();
    let coord = |name: &str, default: &Rational| q.get(name).map_or(Ok(default.clone()), |v| rational(name, v));
    let vp = Viewport::new(
        coord("vp_xmin", &d.xmin)?,
        coord("vp_xmax", &d.xmax)?,
        coord("vp_ymin", &d.ymin)?,
        coord("vp_ymax", &d.ymax)?,
        number(q, "vp_width")?.unwrap_or(d.width_px),
        number(q, "vp_height")?.unwrap_or(d.height_px),
    )?;
    Ok(vp.with_samples(number(q, "vp_samples")?.unwrap_or(d.samples))?)
}

async fn render(State(session): Shared, Query(q): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let vp = viewport(&q)?;
    let mut assign = session.params().clone();
    for (name, value) in q.iter().filter(|(k, _)| !k.starts_with("vp_")) {
        if !Param::is_valid_name(name) {
            return Err(ApiError::bad_request(format!("'{name}' is not a parameter name")));
        }
        assign.insert(Param::new(name), rational(name, value)?);
    }
    let snap = session.snapshot();
    let figure = snap.figure.clone();
    let svg = tokio::task::spawn_blocking(move || render_figure(&figure, &vp, &StyleMap::default(), &assign))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml".to_string()), (REVISION, snap.revision.to_string())], svg).into_response())
}
