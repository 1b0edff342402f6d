//! Exact top-k decoding, min-heap beam search and hypothesis-space ranking
//! metrics for autoregressive sequence models.
//!
//! Models are small tabular conditionals ([`model::CondModel`]) so every
//! decoder can be checked against full enumeration of the hypothesis space.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod quality;
pub mod results;
pub mod search;

pub use error::{Error, Result, Violation};
pub use model::{load_scenario, CondModel, Order, Scenario, SourceId, TokenId, Vocab};
pub use search::{Hypothesis, SearchConfig};
