//! Query-aware routing across multiple memory stores: store model, routing
//! policies, metrics, synthetic data generation and a downstream QA harness.

pub mod config;
pub mod error;
pub mod eval;
pub mod io;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod qa;
pub mod signals;
pub mod store;
pub mod synthgen;
pub mod tokenize;

pub use error::{Error, Result};
pub use model::{
    access_cost, label_for_type, CostModel, GroundTruthLabel, ItemId, MemoryCorpus, MemoryItem, Provenance, Query,
    QueryType, Regime, RouteDecision, ViewIndex,
};
pub use store::{StoreId, StoreSet};
