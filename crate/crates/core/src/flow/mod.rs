//! Best-level order flow imbalance in 30-minute buckets and the bucket
//! log-returns it is evaluated against.

mod contribution;
mod ofi;
mod returns;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use contribution::{classify_contribution, FlowContribution, FlowTerm};
pub use ofi::{aggregate_ofi, FlowRecord, FlowTable};
pub use returns::{boundary_mids, compute_bucket_returns, BucketReturns};

use crate::error::{Error, Result};
use crate::market_data::{SessionConfig, Timestamp, NANOS_PER_SEC};

pub const BUCKET_SECS: u64 = 1800;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Count executions against bids negative and against asks positive
    /// instead of the default `+M^b - M^a`.
    pub legacy_trade_sign: bool,
    /// Use the first snapshot after the open when none precedes it.
    pub open_mid_fallback: bool,
}

/// Number of buckets in the session (13 for 09:30-16:00).
pub fn bucket_count(session: &SessionConfig) -> usize {
    (session.session_end - session.session_start).div_ceil(BUCKET_SECS) as usize
}

/// 1-based bucket holding `time`: bucket `i` covers
/// `(start + (i-1)·1800, start + i·1800]`, and the opening instant belongs
/// to bucket 1.
pub fn bucket_index(time: Timestamp, session: &SessionConfig) -> Result<usize> {
    if !session.contains(time) {
        return Err(Error::OutOfSession(time.to_string()));
    }
    let offset = time.nanos() - session.start().nanos();
    if offset == 0 {
        return Ok(1);
    }
    Ok(((offset - 1) / (BUCKET_SECS * NANOS_PER_SEC)) as usize + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Size,
    Count,
}

impl Measure {
    pub const ALL: [Measure; 2] = [Measure::Size, Measure::Count];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventScope {
    All,
    Add,
    Cancel,
    Trade,
}

impl EventScope {
    pub const ALL: [EventScope; 4] = [
        EventScope::All,
        EventScope::Add,
        EventScope::Cancel,
        EventScope::Trade,
    ];

    pub fn includes(self, term: FlowTerm) -> bool {
        use FlowTerm::*;
        match self {
            EventScope::All => true,
            EventScope::Add => matches!(term, BidAdd | AskAdd),
            EventScope::Cancel => matches!(term, BidCancel | AskCancel),
            EventScope::Trade => matches!(term, BidTrade | AskTrade),
        }
    }
}

/// Which orders an OFI is computed over: one cluster (0-based) or all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterScope {
    Cluster(usize),
    All,
}

impl ClusterScope {
    pub fn is_benchmark(self) -> bool {
        self == ClusterScope::All
    }
}

impl fmt::Display for ClusterScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterScope::Cluster(i) => write!(f, "phi{}", i + 1),
            ClusterScope::All => f.write_str("phi_star"),
        }
    }
}

impl FromStr for ClusterScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "phi_star" {
            return Ok(ClusterScope::All);
        }
        s.strip_prefix("phi")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(|n| ClusterScope::Cluster(n - 1))
            .ok_or_else(|| Error::Config(format!("bad cluster scope {s:?}")))
    }
}

impl Serialize for ClusterScope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClusterScope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Size => "size",
            Measure::Count => "count",
        })
    }
}

impl fmt::Display for EventScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventScope::All => "all",
            EventScope::Add => "add",
            EventScope::Cancel => "cancel",
            EventScope::Trade => "trade",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(secs: u64) -> Timestamp {
        Timestamp::from_secs(secs)
    }

    #[test]
    fn bucket_edges() {
        let s = SessionConfig::default();
        assert_eq!(bucket_index(t(34_200), &s).unwrap(), 1);
        assert_eq!(bucket_index(t(34_210), &s).unwrap(), 1);
        assert_eq!(bucket_index(t(36_000), &s).unwrap(), 1);
        assert_eq!(
            bucket_index(Timestamp::from_nanos(36_000 * NANOS_PER_SEC + 1), &s).unwrap(),
            2
        );
        assert_eq!(bucket_index(t(57_600), &s).unwrap(), 13);
        assert!(bucket_index(t(34_199), &s).is_err());
        assert!(bucket_index(t(57_601), &s).is_err());
        assert_eq!(bucket_count(&s), 13);
    }

    #[test]
    fn scope_names_round_trip() {
        for scope in [ClusterScope::Cluster(0), ClusterScope::Cluster(2), ClusterScope::All] {
            assert_eq!(scope.to_string().parse::<ClusterScope>().unwrap(), scope);
        }
        assert!("phi0".parse::<ClusterScope>().is_err());
    }
}
