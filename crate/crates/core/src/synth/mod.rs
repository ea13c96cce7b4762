//! Synthetic market-by-order days with three planted trader archetypes.
//!
//! The book holds a one-order quote per side and a fixed market-making wall
//! far from the touch on each side. Each 30-minute bucket has a drift
//! direction.
//!
//! * Directional flow moves the quotes in millisecond bursts of one-tick
//!   steps, mostly in the bucket's drift direction. Each step briefly
//!   flickers a one-lot order at the new best.
//! * Opportunistic flow trades against the quotes during quiet periods.
//!   Its OFI sign in bucket `j` equals the drift of bucket `j + 1` with
//!   probability `(1 + κ) / 2`.
//! * Market-making flow adds to, trims and cancels from the walls, never at
//!   the best quotes.

mod generator;
mod io;
mod random;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use generator::generate_day;
pub use io::{day_file_names, write_day, write_truth_csv, DayFiles};
pub use random::{random_stream, RandomStreamConfig};

use crate::error::{Error, Result};
use crate::market_data::{BookSnapshot, MboEvent, OrderBook, SessionConfig, DEFAULT_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Directional,
    Opportunistic,
    MarketMaking,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [
        Archetype::Directional,
        Archetype::Opportunistic,
        Archetype::MarketMaking,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Archetype::Directional => "directional",
            Archetype::Opportunistic => "opportunistic",
            Archetype::MarketMaking => "market_making",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_days: usize,
    /// Approximate in-session event count per day.
    pub events_per_day: usize,
    pub lot_size: u64,
    /// Tick in price units (1/10000 dollar).
    pub tick_size: i64,
    /// Opening mid-price in dollars.
    pub initial_mid: f64,
    /// Directional, opportunistic and market-making shares of the events.
    pub weights: [f64; 3],
    /// Market-making order size relative to the quote size.
    pub separation: f64,
    /// Strength of the link between opportunistic flow and the next
    /// bucket's drift.
    pub kappa: f64,
    /// Probability that a directional burst follows the bucket drift.
    pub drift_follow: f64,
    /// Every order and trade is exactly one lot.
    pub unit_size: bool,
    /// Feature window the generated days must be able to fill.
    pub window: usize,
    pub session: SessionConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            n_days: 20,
            events_per_day: 2_000,
            lot_size: 100,
            tick_size: 100,
            initial_mid: 100.0,
            weights: [0.6, 0.1, 0.3],
            separation: 10.0,
            kappa: 0.9,
            drift_follow: 0.85,
            unit_size: false,
            window: 100,
            session: SessionConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("synth: {msg}")));
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return bad("weights must be non-negative and sum to 1");
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return bad("kappa must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.drift_follow) {
            return bad("drift_follow must lie in [0, 1]");
        }
        if self.events_per_day < self.window {
            return bad("events_per_day must be at least the feature window");
        }
        if self.lot_size == 0 || self.tick_size <= 0 {
            return bad("lot and tick sizes must be positive");
        }
        if !(self.initial_mid > 0.0) || !(self.separation > 0.0) {
            return bad("initial_mid and separation must be positive");
        }
        self.session.validate()
    }
}

/// Labels and planted signals behind one generated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Archetype behind each event, aligned with the event stream.
    pub labels: Vec<Archetype>,
    /// Drift direction (+1/-1) of each bucket.
    pub drift: Vec<i8>,
    /// Sign of the opportunistic flow in each bucket.
    pub signal: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDay {
    pub events: Vec<MboEvent>,
    /// Book after each event.
    pub snapshots: Vec<BookSnapshot>,
    pub truth: GroundTruth,
}

/// True iff replaying `events` from an empty book reproduces every
/// snapshot at the displayed depth.
pub fn replay_check(events: &[MboEvent], snapshots: &[BookSnapshot]) -> bool {
    if events.len() != snapshots.len() {
        return false;
    }
    let mut book = OrderBook::new();
    for (event, expected) in events.iter().zip(snapshots) {
        if book.apply(event).is_err() {
            return false;
        }
        if &book.snapshot(DEFAULT_DEPTH) != expected {
            return false;
        }
    }
    true
}
