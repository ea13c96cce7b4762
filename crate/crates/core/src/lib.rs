//! Order-book feature extraction, K-means clustering of order flow and
//! cluster-specific order flow imbalance strategies.

pub mod artifact;
pub mod clustering;
pub mod error;
pub mod features;
pub mod flow;
pub mod market_data;
pub mod pipeline;
pub mod strategy;
pub mod synth;

pub use error::{Error, Result};
