//! Read-only HTTP/JSON front end over a loaded [`Engine`].
//!
//! The listener comes up before the corpus finishes loading; until then
//! every data endpoint answers 503.

mod error;
mod routes;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::http::{HeaderValue, Method};
use axum::Router;
use litrec_core::config::EngineConfig;
use litrec_core::recommend::{WeightConfig, WeightError};
use litrec_core::Engine;
use thiserror::Error;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::trace::TraceLayer;

pub use error::ApiError;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("binding {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("serving: {0}")]
    Serve(std::io::Error),
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

#[derive(Debug, Clone)]
pub enum Readiness {
    Loading,
    Ready(Arc<Engine>),
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct AppState {
    readiness: Arc<RwLock<Readiness>>,
    default_weights: WeightConfig,
    max_results: usize,
}

impl AppState {
    pub fn loading(default_weights: WeightConfig, max_results: usize) -> Self {
        Self {
            readiness: Arc::new(RwLock::new(Readiness::Loading)),
            default_weights,
            max_results,
        }
    }

    pub fn ready(engine: Engine, default_weights: WeightConfig, max_results: usize) -> Self {
        let s = Self::loading(default_weights, max_results);
        s.set(Readiness::Ready(Arc::new(engine)));
        s
    }

    pub fn set(&self, r: Readiness) {
        *self.readiness.write().expect("readiness lock") = r;
    }

    pub fn readiness(&self) -> Readiness {
        self.readiness.read().expect("readiness lock").clone()
    }

    fn engine(&self) -> Result<Arc<Engine>, ApiError> {
        match self.readiness() {
            Readiness::Ready(e) => Ok(e),
            Readiness::Loading => Err(ApiError::unavailable("corpus is still loading")),
            Readiness::Failed(msg) => Err(ApiError::unavailable(format!("corpus failed to load: {msg}"))),
        }
    }
}

pub fn cors_layer(origins: &[String]) -> Result<CorsLayer, ServerError> {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    if origins.is_empty() || origins.iter().any(|o| o == "*") {
        return Ok(layer.allow_origin(Any));
    }
    let values = origins
        .iter()
        .map(|o| HeaderValue::from_str(o).map_err(|_| ServerError::CorsOrigin(o.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(layer.allow_origin(AllowOrigin::list(values)))
}

pub fn router(state: AppState) -> Router {
    routes::routes().with_state(state)
}

/// Bind, load the engine in the background, and serve until ctrl-c.
pub async fn serve(config: EngineConfig) -> Result<(), ServerError> {
    let weights = config.default_weights()?;
    let state = AppState::loading(weights, config.service.max_results);
    let app = router(state.clone())
        .layer(cors_layer(&config.service.cors_origins)?)
        .layer(TraceLayer::new_for_http());

    let addr = config.service.bind;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServerError::Bind { addr, source })?;
    tracing::info!(addr = %listener.local_addr().unwrap_or(addr), "listening");

    let paths = config.data.clone();
    tokio::task::spawn_blocking(move || {
        let r = match Engine::load(&paths) {
            Ok(engine) => Readiness::Ready(Arc::new(engine)),
            Err(e) => {
                tracing::error!(error = %e, "engine failed to load");
                Readiness::Failed(e.to_string())
            }
        };
        state.set(r);
    });

    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServerError::Serve)
}
