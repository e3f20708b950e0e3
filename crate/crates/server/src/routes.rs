use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use litrec_core::api::{
    ArticleResponse, HealthResponse, RecommendRequest, RecommendResponse, SearchQuery,
    SearchResponse, StatsResponse,
};
use litrec_core::corpus::ArticleId;
use litrec_core::recommend::RecommendParams;

use crate::{ApiError, AppState, Readiness};

pub(crate) fn routes() -> Router<AppState> {
    Router::new()
        .route("/v1/healthz", get(healthz))
        .route("/v1/search", get(search))
        .route("/v1/article/{id}", get(article))
        .route("/v1/recommend", post(recommend))
        .route("/v1/stats", get(stats))
}

async fn healthz(State(state): State<AppState>) -> (StatusCode, Json<HealthResponse>) {
    let (code, status) = match state.readiness() {
        Readiness::Ready(_) => (StatusCode::OK, "ok"),
        Readiness::Loading => (StatusCode::SERVICE_UNAVAILABLE, "loading"),
        Readiness::Failed(_) => (StatusCode::SERVICE_UNAVAILABLE, "failed"),
    };
    (
        code,
        Json(HealthResponse {
            status: status.into(),
        }),
    )
}

async fn search(
    State(state): State<AppState>,
    query: Result<Query<SearchQuery>, QueryRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let engine = state.engine()?;
    if q.q.trim().is_empty() {
        return Err(ApiError::bad_request("query must not be empty"));
    }
    if q.m == 0 || q.m > state.max_results {
        return Err(ApiError::bad_request(format!(
            "m must be between 1 and {}",
            state.max_results
        )));
    }
    let hits = tokio::task::spawn_blocking({
        let q = q.clone();
        move || engine.search(&q.q, q.mode, q.m)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(SearchResponse {
        query: q.q,
        mode: q.mode,
        hits,
    }))
}

async fn article(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<ArticleResponse>, ApiError> {
    let engine = state.engine()?;
    let id = ArticleId::new(id).map_err(ApiError::bad_request)?;
    let g = engine.graph();
    let (Some(article), Ok(node)) = (engine.article(&id), g.node(&id)) else {
        return Err(ApiError::not_found(format!("unknown article id {id}")));
    };
    Ok(Json(ArticleResponse {
        article: article.clone(),
        in_degree: g.in_degree(node),
        out_degree: g.out_degree(node),
    }))
}

async fn recommend(
    State(state): State<AppState>,
    body: Result<Json<RecommendRequest>, JsonRejection>,
) -> Result<Json<RecommendResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let engine = state.engine()?;
    let weights = match &req.weights {
        Some(spec) => spec
            .resolve()
            .map_err(|e| ApiError::bad_request(e.to_string()))?,
        None => state.default_weights,
    };
    let defaults = RecommendParams::default();
    let params = RecommendParams {
        k: req.k.unwrap_or(defaults.k),
        period_len: req.period_len.unwrap_or(defaults.period_len),
        lists: req.lists.unwrap_or(defaults.lists),
    };
    if params.k > state.max_results {
        return Err(ApiError::bad_request(format!(
            "k must be at most {}",
            state.max_results
        )));
    }
    let result = tokio::task::spawn_blocking(move || engine.recommend(&req.id, &weights, &params))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(result))
}

async fn stats(State(state): State<AppState>) -> Result<Json<StatsResponse>, ApiError> {
    let engine = state.engine()?;
    Ok(Json(StatsResponse {
        graph: engine.stats().clone(),
        year_range: engine.corpus().year_range(),
        embeddings: engine.store().len(),
        embedding_model: engine.store().model_tag().to_owned(),
    }))
}
