use std::collections::HashMap;

use super::FeatureVector;
use crate::error::{Error, Result};
use crate::market_data::{BookSnapshot, EventType, MboEvent, Side, Timestamp, TICK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub first: Timestamp,
    pub last: Timestamp,
}

/// Add arrival times per (side, price). An entry is dropped when its level's
/// displayed volume reaches zero, so the next add re-seeds it.
#[derive(Debug, Clone, Default)]
pub struct PriceLevelHistory {
    entries: HashMap<(Side, i64), Arrival>,
}

impl PriceLevelHistory {
    pub fn get(&self, side: Side, price: i64) -> Option<Arrival> {
        self.entries.get(&(side, price)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn record_arrival(&mut self, side: Side, price: i64, time: Timestamp) {
        self.entries
            .entry((side, price))
            .and_modify(|a| a.last = time)
            .or_insert(Arrival {
                first: time,
                last: time,
            });
    }

    fn clear(&mut self, side: Side, price: i64) {
        self.entries.remove(&(side, price));
    }
}

/// Tracks when the mid-price last changed value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MidState {
    pub last_change: Option<Timestamp>,
    /// `a¹ + b¹`, or `None` while a side is empty.
    pub current: Option<i64>,
}

impl MidState {
    /// Start tracking from the first observed book.
    pub fn observe_start(book: &BookSnapshot, time: Timestamp) -> Self {
        MidState {
            last_change: Some(time),
            current: book.mid_x2(),
        }
    }

    fn update(&mut self, book_after: &BookSnapshot, time: Timestamp) {
        let mid = book_after.mid_x2();
        if mid != self.current {
            self.current = mid;
            self.last_change = Some(time);
        }
    }
}

/// Price symmetric to `price` around the mid, snapped to the tick grid
/// toward the opposite best quote.
pub fn mirrored_price(side: Side, price: i64, best_bid: i64, best_ask: i64) -> i64 {
    let raw = best_ask + best_bid - price;
    match side {
        // mirrored onto the ask side: round down, toward the best ask
        Side::Bid => raw.div_euclid(TICK) * TICK,
        Side::Ask => -((-raw).div_euclid(TICK) * TICK),
    }
}

/// Features of `event` against the book immediately before it.
pub fn compute_raw_features(
    event: &MboEvent,
    book_before: &BookSnapshot,
    history: &PriceLevelHistory,
    mid: &MidState,
) -> Result<FeatureVector> {
    let (best_bid, best_ask) = match (book_before.best_bid(), book_before.best_ask()) {
        (Some(b), Some(a)) => (b.price, a.price),
        _ => return Err(Error::Feature("one side of the book is empty".into())),
    };
    let t = event.time;
    let since_mid_change = match mid.last_change {
        Some(changed) => t.secs_since(changed),
        None => 0.0,
    };
    let (since_first_arrival, since_prev_arrival) = match history.get(event.side, event.price) {
        Some(a) => (t.secs_since(a.first), t.secs_since(a.last)),
        None => (0.0, 0.0),
    };

    let same_side_depth = depth_through(book_before, event.side, event.price);
    let mirror = mirrored_price(event.side, event.price, best_bid, best_ask);
    let opposite_side_depth = depth_through(book_before, event.side.opposite(), mirror);

    Ok(FeatureVector {
        volume: book_before.volume_at(event.side, event.price),
        since_mid_change,
        since_first_arrival,
        since_prev_arrival,
        same_side_depth,
        opposite_side_depth,
    })
}

/// Displayed volume on `side` from the best quote through `price` inclusive.
fn depth_through(book: &BookSnapshot, side: Side, price: i64) -> u64 {
    book.levels(side)
        .iter()
        .take_while(|l| match side {
            Side::Bid => l.price >= price,
            Side::Ask => l.price <= price,
        })
        .map(|l| l.volume)
        .sum()
}

/// Advance arrival history and mid state past `event`.
pub fn update_history(
    event: &MboEvent,
    book_after: &BookSnapshot,
    history: &mut PriceLevelHistory,
    mid: &mut MidState,
) {
    match event.event_type {
        EventType::Add => history.record_arrival(event.side, event.price, event.time),
        EventType::PartialCancel | EventType::Delete | EventType::ExecVisible => {
            if book_after.volume_at(event.side, event.price) == 0 {
                history.clear(event.side, event.price);
            }
        }
        EventType::ExecHidden | EventType::Auction | EventType::Halt => {}
    }
    mid.update(book_after, event.time);
}

/// Streaming feature extraction for one (stock, day) stream.
///
/// Every row of the day goes through [`FeatureEngine::process`] so history
/// and mid state see the whole stream; features are produced only for rows
/// the caller marks as featurized.
#[derive(Debug, Clone, Default)]
pub struct FeatureEngine {
    history: PriceLevelHistory,
    mid: Option<MidState>,
}

impl FeatureEngine {
    pub fn new() -> Self {
        FeatureEngine::default()
    }

    pub fn history(&self) -> &PriceLevelHistory {
        &self.history
    }

    pub fn mid(&self) -> Option<MidState> {
        self.mid
    }

    pub fn process(
        &mut self,
        event: &MboEvent,
        book_before: &BookSnapshot,
        book_after: &BookSnapshot,
        featurize: bool,
    ) -> Option<Result<FeatureVector>> {
        let mid = self
            .mid
            .get_or_insert_with(|| MidState::observe_start(book_before, event.time));
        let features =
            featurize.then(|| compute_raw_features(event, book_before, &self.history, mid));
        update_history(event, book_after, &mut self.history, mid);
        features
    }
}
