//! The remote provider against an in-process mock embeddings endpoint.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use litrec_core::embed::{
    offline_embed, EmbedCache, EmbedConfig, EmbedError, Embedder, EmbeddingProvider, HttpProvider,
};
use serde_json::{json, Value};

const DIM: usize = 4;

#[derive(Default)]
struct Mock {
    calls: AtomicUsize,
    flaky_failures: AtomicUsize,
}

fn embed_body(input: &[Value], dim: usize) -> Value {
    // Reverse order, so the client must reassemble by index.
    let data: Vec<Value> = input
        .iter()
        .enumerate()
        .rev()
        .map(|(i, t)| {
            let v: Vec<f32> = offline_embed(t.as_str().unwrap(), DIM).values()[..dim].to_vec();
            json!({"index": i, "embedding": v})
        })
        .collect();
    json!({ "data": data })
}

async fn ok(State(m): State<Arc<Mock>>, headers: HeaderMap, Json(req): Json<Value>) -> (StatusCode, Json<Value>) {
    m.calls.fetch_add(1, Ordering::SeqCst);
    if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some("Bearer sekrit") {
        return (StatusCode::UNAUTHORIZED, Json(json!({"error": {"message": "no key"}})));
    }
    assert_eq!(req["model"], "mock-model");
    (StatusCode::OK, Json(embed_body(req["input"].as_array().unwrap(), DIM)))
}

async fn flaky(State(m): State<Arc<Mock>>, Json(req): Json<Value>) -> (StatusCode, Json<Value>) {
    m.calls.fetch_add(1, Ordering::SeqCst);
    if m.flaky_failures.fetch_add(1, Ordering::SeqCst) < 2 {
        return (StatusCode::SERVICE_UNAVAILABLE, Json(json!({})));
    }
    (StatusCode::OK, Json(embed_body(req["input"].as_array().unwrap(), DIM)))
}

async fn reject(State(m): State<Arc<Mock>>) -> (StatusCode, Json<Value>) {
    m.calls.fetch_add(1, Ordering::SeqCst);
    (
        StatusCode::BAD_REQUEST,
        Json(json!({"error": {"message": "input too long", "index": 1}})),
    )
}

async fn short(Json(req): Json<Value>) -> Json<Value> {
    Json(embed_body(req["input"].as_array().unwrap(), DIM - 1))
}

fn spawn_mock() -> (SocketAddr, Arc<Mock>) {
    let mock = Arc::new(Mock::default());
    let state = mock.clone();
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let app = Router::new()
                .route("/ok", post(ok))
                .route("/flaky", post(flaky))
                .route("/reject", post(reject))
                .route("/short", post(short))
                .with_state(state);
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (rx.recv().unwrap(), mock)
}

fn provider(addr: SocketAddr, path: &str, key: Option<&str>) -> Arc<dyn EmbeddingProvider> {
    Arc::new(
        HttpProvider::new(
            format!("http://{addr}{path}"),
            "mock-model",
            key.map(str::to_owned),
            DIM,
            Duration::from_secs(5),
        )
        .unwrap(),
    )
}

fn config() -> EmbedConfig {
    EmbedConfig {
        dim: DIM,
        batch_size: 3,
        retries: 3,
        backoff_ms: 1,
        ..EmbedConfig::default()
    }
}

fn texts(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn success_preserves_order_across_batches() {
    let (addr, mock) = spawn_mock();
    let e = Embedder::new(provider(addr, "/ok", Some("sekrit")), None, config()).unwrap();
    let input = texts(&["alpha", "beta", "gamma", "delta", "epsilon"]);
    let out = e.embed_texts(&input).unwrap();
    for (t, v) in input.iter().zip(&out) {
        assert_eq!(v.to_le_bytes(), offline_embed(t, DIM).to_le_bytes());
    }
    assert_eq!(mock.calls.load(Ordering::SeqCst), 2);
    assert_eq!(e.stats().provider_calls, 2);
}

#[test]
fn missing_credential_is_not_retried() {
    let (addr, mock) = spawn_mock();
    let e = Embedder::new(provider(addr, "/ok", None), None, config()).unwrap();
    let err = e.embed_texts(&texts(&["alpha"])).unwrap_err();
    assert!(matches!(err, EmbedError::Provider { .. }), "{err}");
    assert!(err.to_string().contains("401"), "{err}");
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn server_errors_are_retried_with_backoff() {
    let (addr, mock) = spawn_mock();
    let e = Embedder::new(provider(addr, "/flaky", None), None, config()).unwrap();
    let out = e.embed_texts(&texts(&["alpha", "beta"])).unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
    assert_eq!(e.stats().retries, 2);
}

#[test]
fn retries_are_bounded() {
    let (addr, mock) = spawn_mock();
    let cfg = EmbedConfig {
        retries: 1,
        ..config()
    };
    let e = Embedder::new(provider(addr, "/flaky", None), None, cfg).unwrap();
    let err = e.embed_texts(&texts(&["alpha"])).unwrap_err();
    assert!(matches!(err, EmbedError::Network(_)), "{err}");
    assert_eq!(mock.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn rejection_names_the_offending_text() {
    let (addr, mock) = spawn_mock();
    let e = Embedder::new(provider(addr, "/reject", None), None, config()).unwrap();
    let err = e.embed_texts(&texts(&["fine", "way too long"])).unwrap_err();
    match err {
        EmbedError::Provider { index, message } => {
            assert_eq!(index, 1);
            assert!(message.contains("input too long"));
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn wrong_dimension_is_rejected_and_not_cached() {
    let (addr, _) = spawn_mock();
    let dir = tempfile::tempdir().unwrap();
    let cache = EmbedCache::open(dir.path()).unwrap();
    let e = Embedder::new(provider(addr, "/short", None), Some(cache), config()).unwrap();
    let err = e.embed_texts(&texts(&["alpha"])).unwrap_err();
    assert!(
        matches!(err, EmbedError::DimensionMismatch { expected: DIM, found } if found == DIM - 1),
        "{err}"
    );
    assert!(EmbedCache::open(dir.path()).unwrap().is_empty());
}

#[test]
fn cached_texts_skip_the_network() {
    let (addr, mock) = spawn_mock();
    let dir = tempfile::tempdir().unwrap();
    let first = Embedder::new(
        provider(addr, "/ok", Some("sekrit")),
        Some(EmbedCache::open(dir.path()).unwrap()),
        config(),
    )
    .unwrap();
    first.embed_texts(&texts(&["alpha", "beta"])).unwrap();
    drop(first);
    let second = Embedder::new(
        provider(addr, "/ok", Some("sekrit")),
        Some(EmbedCache::open(dir.path()).unwrap()),
        config(),
    )
    .unwrap();
    second.embed_texts(&texts(&["alpha", "  beta "])).unwrap();
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
    assert_eq!(second.stats().cache_hits, 2);
}
