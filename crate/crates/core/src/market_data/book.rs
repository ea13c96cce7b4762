use std::collections::BTreeMap;

use super::{BookSnapshot, EventType, Level, MboEvent, Side};
use crate::error::{Error, Result};

/// Full-depth price-level book rebuilt from the event stream.
///
/// Snapshots trimmed to the displayed depth are taken from here; applying
/// events to a trimmed snapshot would lose levels that move back into view.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderBook {
    bids: BTreeMap<i64, u64>,
    asks: BTreeMap<i64, u64>,
}

impl OrderBook {
    pub fn new() -> Self {
        OrderBook::default()
    }

    pub fn from_snapshot(snapshot: &BookSnapshot) -> Self {
        OrderBook {
            bids: snapshot.bids().iter().map(|l| (l.price, l.volume)).collect(),
            asks: snapshot.asks().iter().map(|l| (l.price, l.volume)).collect(),
        }
    }

    fn side(&self, side: Side) -> &BTreeMap<i64, u64> {
        match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<i64, u64> {
        match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        }
    }

    pub fn best_price(&self, side: Side) -> Option<i64> {
        match side {
            Side::Bid => self.bids.keys().next_back().copied(),
            Side::Ask => self.asks.keys().next().copied(),
        }
    }

    pub fn volume_at(&self, side: Side, price: i64) -> u64 {
        self.side(side).get(&price).copied().unwrap_or(0)
    }

    /// Number of non-empty levels on `side`.
    pub fn depth(&self, side: Side) -> usize {
        self.side(side).len()
    }

    /// Price of the `n`-th non-empty level (0 = best).
    pub fn level_price(&self, side: Side, n: usize) -> Option<i64> {
        match side {
            Side::Bid => self.bids.keys().rev().nth(n).copied(),
            Side::Ask => self.asks.keys().nth(n).copied(),
        }
    }

    pub fn apply(&mut self, event: &MboEvent) -> Result<()> {
        match event.event_type {
            EventType::Add => {
                let opposite = self.best_price(event.side.opposite());
                let crosses = match (event.side, opposite) {
                    (Side::Bid, Some(ask)) => event.price >= ask,
                    (Side::Ask, Some(bid)) => event.price <= bid,
                    _ => false,
                };
                if crosses {
                    return Err(Error::Inconsistent(format!(
                        "{} add at {} crosses the book",
                        event.side, event.price
                    )));
                }
                *self.side_mut(event.side).entry(event.price).or_insert(0) += event.size;
            }
            EventType::PartialCancel | EventType::Delete => {
                self.reduce(event.side, event.price, event.size)?;
            }
            EventType::ExecVisible => {
                if self.best_price(event.side) != Some(event.price) {
                    return Err(Error::Inconsistent(format!(
                        "execution at {} is not at the best {}",
                        event.price, event.side
                    )));
                }
                self.reduce(event.side, event.price, event.size)?;
            }
            EventType::ExecHidden | EventType::Auction | EventType::Halt => {}
        }
        Ok(())
    }

    fn reduce(&mut self, side: Side, price: i64, size: u64) -> Result<()> {
        let levels = self.side_mut(side);
        let resting = levels.get(&price).copied().unwrap_or(0);
        if size > resting {
            return Err(Error::Inconsistent(format!(
                "removing {size} from {side} {price} holding {resting}"
            )));
        }
        if size == resting {
            levels.remove(&price);
        } else {
            levels.insert(price, resting - size);
        }
        Ok(())
    }

    pub fn snapshot(&self, depth: usize) -> BookSnapshot {
        let asks = self
            .asks
            .iter()
            .take(depth)
            .map(|(&p, &v)| Level::new(p, v))
            .collect();
        let bids = self
            .bids
            .iter()
            .rev()
            .take(depth)
            .map(|(&p, &v)| Level::new(p, v))
            .collect();
        BookSnapshot::from_sorted_unchecked(asks, bids)
    }
}

/// Apply one event to a displayed snapshot and return the next snapshot at
/// the same depth. Only the displayed levels are known, so levels beyond the
/// snapshot depth cannot reappear; use [`OrderBook`] for full replays.
pub fn apply_event(book: &BookSnapshot, event: &MboEvent) -> Result<BookSnapshot> {
    let depth = book.asks().len().max(book.bids().len()).max(super::DEFAULT_DEPTH);
    let mut full = OrderBook::from_snapshot(book);
    full.apply(event)?;
    Ok(full.snapshot(depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Timestamp;

    fn ev(kind: EventType, side: Side, price: i64, size: u64) -> MboEvent {
        MboEvent::new(Timestamp::from_secs(34_300), kind, 1, size, price, side)
    }

    fn book() -> BookSnapshot {
        BookSnapshot::new(
            vec![Level::new(1_000_100, 200)],
            vec![Level::new(1_000_000, 300), Level::new(999_900, 50)],
        )
        .unwrap()
    }

    #[test]
    fn add_accumulates() {
        let next = apply_event(&book(), &ev(EventType::Add, Side::Bid, 1_000_000, 100)).unwrap();
        assert_eq!(next.best_bid(), Some(Level::new(1_000_000, 400)));
    }

    #[test]
    fn delete_promotes_next_level() {
        let next =
            apply_event(&book(), &ev(EventType::Delete, Side::Bid, 1_000_000, 300)).unwrap();
        assert_eq!(next.best_bid(), Some(Level::new(999_900, 50)));
        assert_eq!(next.bids().len(), 1);
    }

    #[test]
    fn overfill_is_inconsistent() {
        let err = apply_event(&book(), &ev(EventType::ExecVisible, Side::Ask, 1_000_100, 500))
            .unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)));
    }

    #[test]
    fn crossing_add_is_inconsistent() {
        assert!(apply_event(&book(), &ev(EventType::Add, Side::Bid, 1_000_100, 5)).is_err());
    }

    #[test]
    fn hidden_and_auction_events_leave_book_alone() {
        for kind in [EventType::ExecHidden, EventType::Auction, EventType::Halt] {
            assert_eq!(apply_event(&book(), &ev(kind, Side::Ask, 1, 1)).unwrap(), book());
        }
    }

    #[test]
    fn deep_levels_come_back_into_view() {
        let mut full = OrderBook::new();
        for i in 0..12 {
            let e = ev(EventType::Add, Side::Ask, 1_000_100 + 100 * i, 10);
            full.apply(&e).unwrap();
        }
        assert_eq!(full.snapshot(10).asks().len(), 10);
        full.apply(&ev(EventType::Delete, Side::Ask, 1_000_100, 10)).unwrap();
        let snap = full.snapshot(10);
        assert_eq!(snap.asks().len(), 10);
        assert_eq!(snap.asks()[9].price, 1_001_100);
    }
}
