//! REST JSON facade over one live figure.
//!
//! Mutations run one at a time on a private copy of the figure and are then
//! published as a new immutable snapshot with the next revision. Reads work
//! on whatever snapshot is current when they arrive.

mod error;
mod routes;

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, OnceLock, RwLock};

use axum::http::HeaderValue;
use axum::Router;
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use cyclekit::figure::{Figure, FigureError};
use cyclekit::symkern::{Param, Rational};

pub use error::ApiError;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("invalid CORS origin '{0}'")]
    InvalidOrigin(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A published figure state.
#[derive(Debug)]
pub struct Snapshot {
    pub revision: u64,
    pub figure: Arc<Figure>,
    json: OnceLock<String>,
}

impl Snapshot {
    fn new(revision: u64, figure: Figure) -> Snapshot {
        Snapshot { revision, figure: Arc::new(figure), json: OnceLock::new() }
    }

    /// Figure document with a top-level `revision` field, serialized once.
    pub fn document(&self) -> &str {
        self.json.get_or_init(|| {
            let mut v = serde_json::to_value(self.figure.to_doc()).expect("figure documents serialize");
            v["revision"] = self.revision.into();
            v.to_string()
        })
    }
}

#[derive(Debug)]
pub struct Session {
    current: RwLock<Arc<Snapshot>>,
    writer: tokio::sync::Mutex<()>,
    params: HashMap<Param, Rational>,
}

impl Session {
    pub fn new(figure: Figure) -> Session {
        Session::with_params(figure, HashMap::new())
    }

    /// `params` are default values for rendering; request parameters win.
    pub fn with_params(figure: Figure, params: HashMap<Param, Rational>) -> Session {
        Session { current: RwLock::new(Arc::new(Snapshot::new(0, figure))), writer: tokio::sync::Mutex::new(()), params }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock").clone()
    }

    pub fn params(&self) -> &HashMap<Param, Rational> {
        &self.params
    }

    /// Applies `f` to a copy of the current figure and publishes the result
    /// under the next revision. Nothing is published when `f` fails.
    pub async fn mutate<T, F>(&self, expected_revision: Option<u64>, f: F) -> Result<(T, Arc<Snapshot>), ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Figure) -> Result<T, FigureError> + Send + 'static,
    {
        let _guard = self.writer.lock().await;
        let snap = self.snapshot();
        if let Some(expected) = expected_revision {
            if expected != snap.revision {
                return Err(ApiError::revision_conflict(expected, snap.revision));
            }
        }
        let mut figure = (*snap.figure).clone();
        let (figure, out) = tokio::task::spawn_blocking(move || {
            let out = f(&mut figure);
            (figure, out)
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
        let value = out?;
        let next = Arc::new(Snapshot::new(snap.revision + 1, figure));
        *self.current.write().expect("snapshot lock") = next.clone();
        Ok((value, next))
    }
}

/// Routes with CORS open to any origin.
pub fn router(session: Arc<Session>) -> Router {
    routes::routes(session).layer(CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any))
}

/// Routes with CORS restricted to `origin`.
pub fn router_for_origin(session: Arc<Session>, origin: &str) -> Result<Router, ServeError> {
    let value = HeaderValue::from_str(origin).map_err(|_| ServeError::InvalidOrigin(origin.to_string()))?;
    let cors = CorsLayer::new().allow_origin(AllowOrigin::exact(value)).allow_methods(Any).allow_headers(Any);
    Ok(routes::routes(session).layer(cors))
}

pub async fn bind(addr: SocketAddr) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        io::ErrorKind::AddrInUse => ServeError::PortInUse(addr.port()),
        _ => ServeError::Io(e),
    })
}

pub async fn serve(listener: TcpListener, app: Router) -> Result<(), ServeError> {
    axum::serve(listener, app).await?;
    Ok(())
}
