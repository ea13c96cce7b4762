use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{record_error, Side};
use crate::error::{Error, Result};

pub const DEFAULT_DEPTH: usize = 10;
/// Price written for an unoccupied ask level.
pub const ASK_SENTINEL: i64 = 9_999_999_999;
/// Price written for an unoccupied bid level.
pub const BID_SENTINEL: i64 = -9_999_999_999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    pub price: i64,
    pub volume: u64,
}

impl Level {
    pub fn new(price: i64, volume: u64) -> Self {
        Level { price, volume }
    }
}

/// Top-of-book state: ask levels ascending, bid levels descending, absent
/// levels trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BookSnapshot {
    asks: Vec<Level>,
    bids: Vec<Level>,
}

impl BookSnapshot {
    pub fn empty() -> Self {
        BookSnapshot::default()
    }

    /// Build a snapshot, checking level ordering, volumes and that the book
    /// is not crossed. One-sided and empty books are allowed here.
    pub fn new(asks: Vec<Level>, bids: Vec<Level>) -> Result<Self> {
        for pair in asks.windows(2) {
            if pair[0].price >= pair[1].price {
                return Err(Error::Inconsistent("ask prices not ascending".into()));
            }
        }
        for pair in bids.windows(2) {
            if pair[0].price <= pair[1].price {
                return Err(Error::Inconsistent("bid prices not descending".into()));
            }
        }
        if asks.iter().chain(&bids).any(|l| l.volume == 0) {
            return Err(Error::Inconsistent("zero-volume level".into()));
        }
        if let (Some(a), Some(b)) = (asks.first(), bids.first()) {
            if a.price <= b.price {
                return Err(Error::CrossedBook {
                    bid: b.price,
                    ask: a.price,
                });
            }
        }
        Ok(BookSnapshot { asks, bids })
    }

    pub(crate) fn from_sorted_unchecked(asks: Vec<Level>, bids: Vec<Level>) -> Self {
        BookSnapshot { asks, bids }
    }

    pub fn asks(&self) -> &[Level] {
        &self.asks
    }

    pub fn bids(&self) -> &[Level] {
        &self.bids
    }

    pub fn levels(&self, side: Side) -> &[Level] {
        match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.asks.is_empty() && self.bids.is_empty()
    }

    pub fn best(&self, side: Side) -> Option<Level> {
        self.levels(side).first().copied()
    }

    pub fn best_bid(&self) -> Option<Level> {
        self.bids.first().copied()
    }

    pub fn best_ask(&self) -> Option<Level> {
        self.asks.first().copied()
    }

    pub fn spread(&self) -> Option<i64> {
        Some(self.best_ask()?.price - self.best_bid()?.price)
    }

    /// Mid-price in 1/20000 dollar units (`a¹ + b¹`).
    pub fn mid_x2(&self) -> Option<i64> {
        Some(self.best_ask()?.price + self.best_bid()?.price)
    }

    pub fn mid_dollars(&self) -> Option<f64> {
        self.mid_x2()
            .map(|m| m as f64 / (2 * super::PRICE_SCALE) as f64)
    }

    /// Displayed volume at `price` on `side`, zero when the level is absent.
    pub fn volume_at(&self, side: Side, price: i64) -> u64 {
        self.levels(side)
            .iter()
            .find(|l| l.price == price)
            .map_or(0, |l| l.volume)
    }

    /// `[a¹, v(a¹), b¹, v(b¹), …]` over `depth` levels with sentinels for
    /// absent levels.
    pub fn state_vector(&self, depth: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(4 * depth);
        for i in 0..depth {
            match self.asks.get(i) {
                Some(l) => out.extend([l.price, l.volume as i64]),
                None => out.extend([ASK_SENTINEL, 0]),
            }
            match self.bids.get(i) {
                Some(l) => out.extend([l.price, l.volume as i64]),
                None => out.extend([BID_SENTINEL, 0]),
            }
        }
        out
    }

    /// Append one orderbook row (no trailing newline).
    pub fn format_row(&self, depth: usize, out: &mut String) {
        for (i, v) in self.state_vector(depth).into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
    }

    pub fn trimmed(&self, depth: usize) -> BookSnapshot {
        BookSnapshot {
            asks: self.asks.iter().take(depth).copied().collect(),
            bids: self.bids.iter().take(depth).copied().collect(),
        }
    }
}

/// Parse one orderbook row of `4 × levels` integers.
pub fn parse_orderbook_row(line: &str, row: usize) -> Result<BookSnapshot> {
    let mut values = Vec::with_capacity(4 * DEFAULT_DEPTH);
    for field in line.trim_end().split(',') {
        let v: i64 = field
            .parse()
            .map_err(|_| record_error(row, format!("bad orderbook value {field:?}")))?;
        values.push(v);
    }
    if values.is_empty() || values.len() % 4 != 0 {
        return Err(record_error(
            row,
            format!("expected a multiple of 4 columns, got {}", values.len()),
        ));
    }
    let mut asks = Vec::new();
    let mut bids = Vec::new();
    for chunk in values.chunks_exact(4) {
        let (ap, av, bp, bv) = (chunk[0], chunk[1], chunk[2], chunk[3]);
        if av > 0 && ap > 0 && ap < ASK_SENTINEL {
            asks.push(Level::new(ap, av as u64));
        }
        if bv > 0 && bp > 0 {
            bids.push(Level::new(bp, bv as u64));
        }
    }
    if asks.is_empty() && bids.is_empty() {
        return Err(Error::EmptyBook);
    }
    BookSnapshot::new(asks, bids).map_err(|e| match e {
        Error::Inconsistent(reason) => record_error(row, reason),
        other => other,
    })
}

pub fn parse_orderbook_str(text: &str) -> Result<Vec<BookSnapshot>> {
    parse_rows(text.as_bytes())
}

pub fn parse_orderbook_file(path: &Path) -> Result<Vec<BookSnapshot>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_rows(BufReader::with_capacity(1 << 20, file))
}

fn parse_rows(reader: impl BufRead) -> Result<Vec<BookSnapshot>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<orderbook stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_orderbook_row(&line, i + 1)?);
    }
    Ok(out)
}
