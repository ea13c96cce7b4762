use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Archetype, GroundTruth, SynthConfig, SynthDay};
use crate::error::Result;
use crate::flow::{bucket_count, BUCKET_SECS};
use crate::market_data::{
    EventType, MboEvent, OrderBook, Side, Timestamp, DEFAULT_DEPTH, NANOS_PER_SEC, PRICE_SCALE,
};

const MS: u64 = 1_000_000;
/// Market-making walls rest this far from the opening mid.
const WALL_TICKS: i64 = 150;
/// Quotes never move closer than this to a wall.
const WALL_BUFFER_TICKS: i64 = 20;
/// Wall volume in lots per unit of separation; each adjustment moves a
/// twelfth of it.
const WALL_LOTS: f64 = 24.0;
const ADJUST_SHARE: f64 = 1.0 / 12.0;
const MIN_STEPS: usize = 6;
const MAX_STEPS: usize = 10;
/// Orders posted and pulled on the new lead during each step.
const FLICKERS: usize = 2;
const EVENTS_PER_STEP: f64 = 4.0 + 2.0 * FLICKERS as f64;
/// Share of each slot after a burst during which nobody else acts.
const QUIET_FRACTION: f64 = 0.6;
const QUOTE_LOTS: std::ops::RangeInclusive<u64> = 8..=16;

#[derive(Debug, Clone, Copy)]
struct Live {
    side: Side,
    price: i64,
    size: u64,
    owner: Archetype,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    Opportunistic,
    MarketMaking,
}

struct Sim<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    book: OrderBook,
    orders: BTreeMap<u64, Live>,
    next_id: u64,
    clock: u64,
    /// Bid and ask wall prices.
    walls: [i64; 2],
    day: SynthDay,
}

fn sign(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Bid => 0,
        Side::Ask => 1,
    }
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SynthConfig, day_index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(day_index as u64);
        Sim {
            cfg,
            rng,
            book: OrderBook::new(),
            orders: BTreeMap::new(),
            next_id: 1,
            clock: 0,
            walls: [0, 0],
            day: SynthDay {
                events: Vec::new(),
                snapshots: Vec::new(),
                truth: GroundTruth {
                    labels: Vec::new(),
                    drift: Vec::new(),
                    signal: Vec::new(),
                },
            },
        }
    }

    fn shares(&self, lots: u64) -> u64 {
        if self.cfg.unit_size {
            self.cfg.lot_size
        } else {
            lots * self.cfg.lot_size
        }
    }

    fn emit(&mut self, t: u64, kind: EventType, id: u64, size: u64, live: Live) -> Result<()> {
        self.clock = self.clock.max(t);
        let event = MboEvent::new(
            Timestamp::from_nanos(self.clock),
            kind,
            id,
            size,
            live.price,
            live.side,
        );
        self.book.apply(&event)?;
        if kind == EventType::Add {
            self.orders.insert(id, Live { size, ..live });
        } else {
            let order = self.orders.get_mut(&id).expect("live order");
            order.size -= size;
            if order.size == 0 {
                self.orders.remove(&id);
            }
        }
        self.day.events.push(event);
        self.day.snapshots.push(self.book.snapshot(DEFAULT_DEPTH));
        self.day.truth.labels.push(live.owner);
        Ok(())
    }

    fn add(&mut self, t: u64, side: Side, price: i64, size: u64, owner: Archetype) -> Result<u64> {
        let id = self.next_id;
        self.next_id += 1;
        let live = Live {
            side,
            price,
            size,
            owner,
        };
        self.emit(t, EventType::Add, id, size, live)?;
        Ok(id)
    }

    fn remove(&mut self, t: u64, id: u64, size: u64, kind: EventType, who: Archetype) -> Result<()> {
        let live = Live {
            owner: who,
            ..self.orders[&id]
        };
        self.emit(t, kind, id, size, live)
    }

    fn delete(&mut self, t: u64, id: u64, who: Archetype) -> Result<()> {
        let size = self.orders[&id].size;
        self.remove(t, id, size, EventType::Delete, who)
    }

    fn orders_at(&self, side: Side, price: i64) -> Vec<u64> {
        self.orders
            .iter()
            .filter(|(_, o)| o.side == side && o.price == price)
            .map(|(&id, _)| id)
            .collect()
    }

    fn best(&self, side: Side) -> i64 {
        self.book.best_price(side).expect("quotes are never withdrawn")
    }

    fn quote_size(&mut self) -> u64 {
        let q = self.rng.random_range(QUOTE_LOTS);
        self.shares(q)
    }

    fn wall_lots(&self, share: f64) -> u64 {
        let mean_quote = (*QUOTE_LOTS.start() + *QUOTE_LOTS.end()) as f64 / 2.0;
        let lots = self.cfg.separation * mean_quote / 12.0 * WALL_LOTS * share;
        (lots.round() as u64).max(1)
    }

    /// Pre-open book: a one-order quote per side, two ticks wide, and a
    /// market-making wall far behind each.
    fn setup(&mut self, t0: u64) -> Result<()> {
        let tick = self.cfg.tick_size;
        let mid = (self.cfg.initial_mid * PRICE_SCALE as f64 / tick as f64).round() as i64 * tick;
        self.walls = [mid - WALL_TICKS * tick, mid + WALL_TICKS * tick];
        let mut t = t0;
        for (side, price) in [(Side::Bid, mid - tick), (Side::Ask, mid + tick)] {
            let size = self.quote_size();
            self.add(t, side, price, size, Archetype::Directional)?;
            t += MS;
        }
        for side in [Side::Bid, Side::Ask] {
            let size = self.shares(self.wall_lots(1.0));
            self.add(t, side, self.walls[side_index(side)], size, Archetype::MarketMaking)?;
            t += MS;
        }
        Ok(())
    }

    /// One-tick quote move: post the new quotes, flicker small orders on the
    /// new lead, then pull the old quotes. Returns false if the book does not
    /// allow the move.
    fn step(&mut self, t: &mut u64, dir: i8) -> Result<bool> {
        let tick = self.cfg.tick_size;
        let (bid, ask) = (self.best(Side::Bid), self.best(Side::Ask));
        let (lead, trail, old_lead, old_trail) = if dir > 0 {
            (Side::Bid, Side::Ask, bid, ask)
        } else {
            (Side::Ask, Side::Bid, ask, bid)
        };
        let shift = tick * dir as i64;
        let (new_lead, new_trail) = (old_lead + shift, old_trail + shift);
        let room = (self.walls[side_index(trail)] - new_trail).abs() / tick;
        if ask - bid < 2 * tick || room < WALL_BUFFER_TICKS {
            return Ok(false);
        }
        let d = Archetype::Directional;
        let mut next = || {
            let now = *t;
            *t += MS;
            now
        };
        let (lead_size, trail_size) = (self.quote_size(), self.quote_size());
        self.add(next(), lead, new_lead, lead_size, d)?;
        self.add(next(), trail, new_trail, trail_size, d)?;
        for _ in 0..FLICKERS {
            let id = self.add(next(), lead, new_lead, self.shares(1), d)?;
            self.delete(next(), id, d)?;
        }
        for id in self.orders_at(trail, old_trail) {
            self.delete(next(), id, d)?;
        }
        for id in self.orders_at(lead, old_lead) {
            self.delete(next(), id, d)?;
        }
        Ok(true)
    }

    fn burst(&mut self, mut t: u64, steps: usize, dir: i8) -> Result<()> {
        for _ in 0..steps {
            if !self.step(&mut t, dir)? {
                break;
            }
        }
        Ok(())
    }

    /// Keep a wall near its target volume: post a small order when below it
    /// or when the wall is a single block, otherwise pull a small order or
    /// trim the block.
    fn mm_action(&mut self, t: u64) -> Result<()> {
        let mm = Archetype::MarketMaking;
        let side = if self.rng.random::<bool>() { Side::Bid } else { Side::Ask };
        let price = self.walls[side_index(side)];
        let adjust = self.shares(self.wall_lots(ADJUST_SHARE));
        let target = self.shares(self.wall_lots(1.0));
        let ids = self.orders_at(side, price);
        let level = self.book.volume_at(side, price);
        if ids.len() < 2 || (level < target && self.rng.random::<bool>()) {
            self.add(t, side, price, adjust, mm)?;
            return Ok(());
        }
        let (block, rest) = ids.split_first().expect("non-empty");
        let block_size = self.orders[block].size;
        if self.rng.random::<bool>() && block_size > target / 2 + adjust {
            self.remove(t, *block, adjust, EventType::PartialCancel, mm)
        } else {
            let id = rest[self.rng.random_range(0..rest.len())];
            self.delete(t, id, mm)
        }
    }

    /// Trade against the quote on the side that makes the bucket's OFI
    /// carry `signal`, leaving at least one lot resting.
    fn opportunistic_action(&mut self, t: u64, signal: i8) -> Result<()> {
        let side = if signal > 0 { Side::Bid } else { Side::Ask };
        let price = self.best(side);
        let level = self.book.volume_at(side, price);
        let Some(id) = self
            .orders_at(side, price)
            .into_iter()
            .max_by_key(|id| (self.orders[id].size, std::cmp::Reverse(*id)))
        else {
            return Ok(());
        };
        let lots = self.rng.random_range(1..=2);
        let want = self.shares(lots);
        let size = want
            .min(self.orders[&id].size)
            .min(level.saturating_sub(self.cfg.lot_size));
        if size == 0 {
            return Ok(());
        }
        self.remove(t, id, size, EventType::ExecVisible, Archetype::Opportunistic)
    }
}

fn secs(s: f64) -> u64 {
    (s * NANOS_PER_SEC as f64).round() as u64
}

/// Generate day `day_index` of the configured synthetic stock.
pub fn generate_day(config: &SynthConfig, day_index: usize) -> Result<SynthDay> {
    config.validate()?;
    let mut sim = Sim::new(config, day_index);
    let session = &config.session;
    let buckets = bucket_count(session);
    let start = session.session_start * NANOS_PER_SEC;
    let end = session.session_end * NANOS_PER_SEC;

    let drift: Vec<i8> = (0..buckets).map(|_| sign(&mut sim.rng)).collect();
    let agree = (1.0 + config.kappa) / 2.0;
    let signal: Vec<i8> = (0..buckets)
        .map(|j| match drift.get(j + 1) {
            Some(&next) if sim.rng.random::<f64>() < agree => next,
            Some(&next) => -next,
            None => sign(&mut sim.rng),
        })
        .collect();

    sim.setup(start.saturating_sub(secs(600.0)))?;

    let per_bucket = config.events_per_day as f64 / buckets as f64;
    let [w_d, w_o, w_m] = config.weights;
    let steps = ((w_d * per_bucket / EVENTS_PER_STEP).round() as usize).max(1);
    let n_opp = (w_o * per_bucket).round() as usize;
    let n_mm = (w_m * per_bucket).round() as usize;

    for j in 0..buckets {
        let b_start = start + j as u64 * BUCKET_SECS * NANOS_PER_SEC;
        let b_end = (b_start + BUCKET_SECS * NANOS_PER_SEC).min(end);
        let mut bursts = Vec::new();
        let mut left = steps;
        while left > 0 {
            let k = sim.rng.random_range(MIN_STEPS..=MAX_STEPS).min(left);
            bursts.push(k);
            left -= k;
        }
        let slot = (b_end - b_start) / bursts.len() as u64;
        let starts: Vec<u64> = (0..bursts.len())
            .map(|i| {
                let s = b_start + i as u64 * slot;
                s + (slot as f64 * sim.rng.random_range(0.001..0.05)) as u64
            })
            .collect();
        let mut quiet: Vec<Vec<(u64, Action)>> = vec![Vec::new(); bursts.len()];
        let actors = std::iter::repeat_n(Action::Opportunistic, n_opp)
            .chain(std::iter::repeat_n(Action::MarketMaking, n_mm));
        for action in actors {
            let i = sim.rng.random_range(0..bursts.len());
            let lo = starts[i] + (QUIET_FRACTION * slot as f64) as u64;
            let hi = b_start + (i as u64 + 1) * slot - MS;
            quiet[i].push((sim.rng.random_range(lo..hi), action));
        }
        for (i, &k) in bursts.iter().enumerate() {
            let dir = if sim.rng.random::<f64>() < config.drift_follow {
                drift[j]
            } else {
                -drift[j]
            };
            sim.burst(starts[i], k, dir)?;
            quiet[i].sort_unstable();
            for &(t, action) in &quiet[i] {
                match action {
                    Action::Opportunistic => sim.opportunistic_action(t, signal[j])?,
                    Action::MarketMaking => sim.mm_action(t)?,
                }
            }
        }
    }
    sim.day.truth.drift = drift;
    sim.day.truth.signal = signal;
    Ok(sim.day)
}
