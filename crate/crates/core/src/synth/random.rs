use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::market_data::{
    BookSnapshot, EventType, MboEvent, OrderBook, Side, Timestamp, DEFAULT_DEPTH, NANOS_PER_SEC,
};

/// Unstructured order flow for property tests: random adds, cancels,
/// deletes and trades around a two-sided book, plus the occasional hidden
/// execution or halt message.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomStreamConfig {
    pub n_events: usize,
    pub unit_size: bool,
    pub lot_size: u64,
    pub tick_size: i64,
    /// Best bid of the seeded book, in price units.
    pub start_bid: i64,
    /// First in-session event time, seconds after midnight.
    pub start_secs: u64,
    /// Mean gap between events in seconds.
    pub mean_gap: f64,
    /// Share of messages that never touch the visible book.
    pub noise_share: f64,
}

impl Default for RandomStreamConfig {
    fn default() -> Self {
        RandomStreamConfig {
            n_events: 1_000,
            unit_size: false,
            lot_size: 100,
            tick_size: 100,
            start_bid: 1_000_000,
            start_secs: 34_200,
            mean_gap: 0.5,
            noise_share: 0.02,
        }
    }
}

/// Resting orders beyond which adds give way to cancellations.
const MAX_ORDERS: usize = 400;

struct Order {
    id: u64,
    side: Side,
    price: i64,
    size: u64,
}

/// Seeded pre-open book followed by `n_events` random in-session messages.
/// Returns the events and the book after each.
pub fn random_stream(
    seed: u64,
    config: &RandomStreamConfig,
) -> Result<(Vec<MboEvent>, Vec<BookSnapshot>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tick = config.tick_size;
    let mut book = OrderBook::new();
    let mut orders: Vec<Order> = Vec::new();
    let mut events = Vec::new();
    let mut snapshots = Vec::new();
    let mut next_id = 1u64;
    let size = |rng: &mut ChaCha8Rng| {
        if config.unit_size {
            config.lot_size
        } else {
            rng.random_range(1..=10u64) * config.lot_size
        }
    };
    let mut push = |event: MboEvent, book: &mut OrderBook| -> Result<()> {
        book.apply(&event)?;
        events.push(event);
        snapshots.push(book.snapshot(DEFAULT_DEPTH));
        Ok(())
    };

    let mut t = config.start_secs.saturating_sub(60) * NANOS_PER_SEC;
    for level in 0..5 {
        for (side, price) in [
            (Side::Bid, config.start_bid - level * tick),
            (Side::Ask, config.start_bid + (level + 2) * tick),
        ] {
            let s = size(&mut rng);
            push(MboEvent::new(Timestamp::from_nanos(t), EventType::Add, next_id, s, price, side), &mut book)?;
            orders.push(Order { id: next_id, side, price, size: s });
            next_id += 1;
            t += NANOS_PER_SEC / 100;
        }
    }

    t = config.start_secs * NANOS_PER_SEC;
    for _ in 0..config.n_events {
        // Repeated timestamps happen in real feeds; keep some.
        if rng.random::<f64>() > 0.1 {
            let gap = -config.mean_gap * (1.0 - rng.random::<f64>()).ln();
            t += (gap * NANOS_PER_SEC as f64) as u64 + 1;
        }
        let now = Timestamp::from_nanos(t);
        if rng.random::<f64>() < config.noise_share {
            let event = if rng.random::<bool>() {
                let bid = book.best_price(Side::Bid).unwrap_or(config.start_bid);
                MboEvent::new(now, EventType::ExecHidden, 0, size(&mut rng), bid, Side::Bid)
            } else {
                MboEvent::new(now, EventType::Halt, 0, 0, -1, Side::Ask)
            };
            push(event, &mut book)?;
            continue;
        }
        let side = if rng.random::<bool>() { Side::Bid } else { Side::Ask };
        let best = book.best_price(side);
        let opposite = book.best_price(side.opposite());
        let thin = book.depth(side) < 2;
        let mut r: f64 = rng.random();
        if orders.len() >= MAX_ORDERS && r < 0.45 {
            // A full book turns the add into a cancel or delete.
            r = 0.45 + r * (0.35 / 0.45);
        }
        if thin || r < 0.45 {
            // Add somewhere from two ticks inside the spread to eight behind.
            let anchor = best.or(opposite.map(|p| p - side.direction() as i64 * 2 * tick)).unwrap();
            let offset = rng.random_range(-2i64..=8) * tick;
            let mut price = anchor - side.direction() as i64 * offset;
            if let Some(opp) = opposite {
                price = match side {
                    Side::Bid => price.min(opp - tick),
                    Side::Ask => price.max(opp + tick),
                };
            }
            let s = size(&mut rng);
            push(MboEvent::new(now, EventType::Add, next_id, s, price, side), &mut book)?;
            orders.push(Order { id: next_id, side, price, size: s });
            next_id += 1;
            continue;
        }
        let candidates: Vec<usize> = if r < 0.8 {
            (0..orders.len()).filter(|&i| orders[i].side == side).collect()
        } else {
            (0..orders.len())
                .filter(|&i| orders[i].side == side && Some(orders[i].price) == best)
                .collect()
        };
        let Some(&i) = candidates.choose(&mut rng) else {
            continue;
        };
        let o = &orders[i];
        let kind = if r >= 0.8 {
            EventType::ExecVisible
        } else if r < 0.65 && o.size > config.lot_size {
            EventType::PartialCancel
        } else {
            EventType::Delete
        };
        let amount = match kind {
            EventType::Delete => o.size,
            EventType::PartialCancel => rng.random_range(1..o.size / config.lot_size) * config.lot_size,
            _ => rng.random_range(1..=o.size / config.lot_size) * config.lot_size,
        };
        push(MboEvent::new(now, kind, o.id, amount, o.price, o.side), &mut book)?;
        orders[i].size -= amount;
        if orders[i].size == 0 {
            orders.swap_remove(i);
        }
    }
    Ok((events, snapshots))
}
