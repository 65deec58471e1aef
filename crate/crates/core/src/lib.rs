//! Prosocial conversation analytics: metric panels over threaded
//! discussions, a PCA trajectory score, first-comment forecasting and
//! pairwise ranking.

pub mod accommodation;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod numeric;
pub mod rank_eval;
pub mod resources;
pub mod scorers;
pub mod synth;
pub mod textlex;
pub mod trajectory;

pub use error::{Error, Result};
