//! Market-by-order messages, order book snapshots and the trading session.
//!
//! Prices are integers in 1/10000 dollar units throughout, matching the
//! LOBSTER file convention. The mid-price is carried as `a¹ + b¹`, i.e. in
//! 1/20000 dollar units, so it stays exact on half-tick values.

mod book;
mod message;
mod orderbook;
mod session;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use book::{apply_event, OrderBook};
pub use message::{
    format_message, parse_message_file, parse_message_line, parse_message_str,
    serialize_messages, MessageReader,
};
pub use orderbook::{
    parse_orderbook_file, parse_orderbook_row, parse_orderbook_str, BookSnapshot, Level,
    ASK_SENTINEL, BID_SENTINEL, DEFAULT_DEPTH,
};
pub use session::{filter_session, SessionConfig};

use crate::error::{Error, Result};

/// Price units per dollar.
pub const PRICE_SCALE: i64 = 10_000;
/// One cent in price units.
pub const TICK: i64 = 100;
pub const NANOS_PER_SEC: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }

    /// LOBSTER direction column: +1 for a standing buy order, -1 for a sell.
    pub fn direction(self) -> i8 {
        match self {
            Side::Bid => 1,
            Side::Ask => -1,
        }
    }

    pub fn from_direction(direction: i64) -> Option<Side> {
        match direction {
            1 => Some(Side::Bid),
            -1 => Some(Side::Ask),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Bid => "bid",
            Side::Ask => "ask",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventType {
    Add = 1,
    PartialCancel = 2,
    Delete = 3,
    ExecVisible = 4,
    ExecHidden = 5,
    Auction = 6,
    Halt = 7,
}

impl EventType {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Option<EventType> {
        Some(match code {
            1 => EventType::Add,
            2 => EventType::PartialCancel,
            3 => EventType::Delete,
            4 => EventType::ExecVisible,
            5 => EventType::ExecHidden,
            6 => EventType::Auction,
            7 => EventType::Halt,
            _ => return None,
        })
    }

    /// Whether the event changes displayed volume.
    pub fn touches_visible_book(self) -> bool {
        matches!(
            self,
            EventType::Add | EventType::PartialCancel | EventType::Delete | EventType::ExecVisible
        )
    }
}

/// Time since midnight with nanosecond resolution.
///
/// The number of fractional digits seen on input is kept so a parsed file
/// re-serializes byte for byte. Ordering and equality use the instant only.
#[derive(Debug, Clone, Copy)]
pub struct Timestamp {
    nanos: u64,
    frac_digits: u8,
}

impl Timestamp {
    pub const fn from_nanos(nanos: u64) -> Self {
        Timestamp {
            nanos,
            frac_digits: 9,
        }
    }

    pub const fn from_secs(secs: u64) -> Self {
        Timestamp::from_nanos(secs * NANOS_PER_SEC)
    }

    pub fn nanos(self) -> u64 {
        self.nanos
    }

    pub fn as_secs_f64(self) -> f64 {
        self.nanos as f64 / NANOS_PER_SEC as f64
    }

    /// `self - earlier` in seconds; negative when `earlier` is later.
    pub fn secs_since(self, earlier: Timestamp) -> f64 {
        (self.nanos as i128 - earlier.nanos as i128) as f64 / NANOS_PER_SEC as f64
    }
}

impl PartialEq for Timestamp {
    fn eq(&self, other: &Self) -> bool {
        self.nanos == other.nanos
    }
}

impl Eq for Timestamp {}

impl Hash for Timestamp {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.nanos.hash(state);
    }
}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.nanos.cmp(&other.nanos)
    }
}

impl FromStr for Timestamp {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad time {s:?}"));
        }
        if frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad time {s:?}"));
        }
        let secs: u64 = whole.parse().map_err(|_| format!("bad time {s:?}"))?;
        let mut sub: u64 = 0;
        for b in frac.bytes() {
            sub = sub * 10 + u64::from(b - b'0');
        }
        sub *= 10u64.pow(9 - frac.len() as u32);
        let nanos = secs
            .checked_mul(NANOS_PER_SEC)
            .and_then(|n| n.checked_add(sub))
            .ok_or_else(|| format!("time out of range {s:?}"))?;
        Ok(Timestamp {
            nanos,
            frac_digits: if s.contains('.') { frac.len() as u8 } else { u8::MAX },
        })
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.nanos / NANOS_PER_SEC;
        let sub = self.nanos % NANOS_PER_SEC;
        match self.frac_digits {
            u8::MAX => write!(f, "{secs}"),
            0 => write!(f, "{secs}."),
            d => {
                let scaled = sub / 10u64.pow(9 - u32::from(d));
                write!(f, "{secs}.{scaled:0width$}", width = d as usize)
            }
        }
    }
}

/// One market-by-order message.
///
/// `side` is the side of the standing limit order, so a buy order is
/// `Side::Bid` with a positive `size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MboEvent {
    pub time: Timestamp,
    pub event_type: EventType,
    pub order_id: u64,
    pub size: u64,
    pub price: i64,
    pub side: Side,
}

impl MboEvent {
    pub fn new(
        time: Timestamp,
        event_type: EventType,
        order_id: u64,
        size: u64,
        price: i64,
        side: Side,
    ) -> Self {
        MboEvent {
            time,
            event_type,
            order_id,
            size,
            price,
            side,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.event_type.touches_visible_book() || self.event_type == EventType::ExecHidden {
            if self.size == 0 {
                return Err("size must be positive".into());
            }
            if self.price <= 0 {
                return Err("price must be positive".into());
            }
        }
        Ok(())
    }
}

pub(crate) fn record_error(row: usize, reason: impl Into<String>) -> Error {
    Error::Record {
        row,
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_keeps_digits() {
        for s in ["34200.123456789", "36000.5", "34200", "57600.000"] {
            let t: Timestamp = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        let t: Timestamp = "36000.5".parse().unwrap();
        assert_eq!(t.nanos(), 36_000_500_000_000);
        assert_eq!(t, Timestamp::from_nanos(36_000_500_000_000));
    }

    #[test]
    fn timestamp_rejects_garbage() {
        for s in ["", "-1.0", "1.0000000001", "12a", ".5"] {
            assert!(s.parse::<Timestamp>().is_err(), "{s}");
        }
    }

    #[test]
    fn time_differences_are_exact_in_nanos() {
        let a: Timestamp = "100.2".parse().unwrap();
        let b: Timestamp = "100.5".parse().unwrap();
        assert_eq!(b.secs_since(a), 0.3);
        assert!(a.secs_since(b) < 0.0);
    }
}
