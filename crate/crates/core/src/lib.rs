//! Hybrid literature recommendation over a citation network.

pub mod api;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod engine;
pub mod eval;
pub mod graph;
pub mod recommend;
pub mod text;
pub mod textsim;

pub use engine::{Engine, EngineError, SearchHit, SearchMode};
