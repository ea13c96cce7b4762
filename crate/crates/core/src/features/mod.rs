//! Per-order features and their forward-rolling normalization.

mod engine;
mod normalize;

use serde::{Deserialize, Serialize};

pub use engine::{
    compute_raw_features, mirrored_price, update_history, Arrival, FeatureEngine, MidState,
    PriceLevelHistory,
};
pub use normalize::{rolling_normalize, RollingNormalizer};

pub const FEATURE_DIM: usize = 6;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = ["v", "t_m", "t_1", "t_prev", "sbs", "obs"];

/// The six per-order features, in the order used for clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Displayed shares at the order's price on its own side.
    pub volume: u64,
    /// Seconds since the mid-price last changed.
    pub since_mid_change: f64,
    /// Seconds since the first arrival at this price level.
    pub since_first_arrival: f64,
    /// Seconds since the previous arrival at this price level.
    pub since_prev_arrival: f64,
    /// Same-side shares from the best quote through the order price.
    pub same_side_depth: u64,
    /// Opposite-side shares from the opposite best through the mirrored price.
    pub opposite_side_depth: u64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.volume as f64,
            self.since_mid_change,
            self.since_first_arrival,
            self.since_prev_arrival,
            self.same_side_depth as f64,
            self.opposite_side_depth as f64,
        ]
    }
}
