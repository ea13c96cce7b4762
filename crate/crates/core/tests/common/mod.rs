//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lobflow::market_data::{EventType, MboEvent, Side};

const DISPLAYED: usize = 10;
const TICK: i64 = 100;
const OPEN: u64 = 34_200 * 1_000_000_000;
const CLOSE: u64 = 57_600 * 1_000_000_000;

/// Aggregate book rebuilt from scratch: (side, price) -> volume.
fn rebuild(events: &[MboEvent]) -> BTreeMap<(i8, i64), i64> {
    let mut book = BTreeMap::new();
    for e in events {
        let key = (e.side.direction(), e.price);
        let delta = match e.event_type {
            EventType::Add => e.size as i64,
            EventType::PartialCancel | EventType::Delete | EventType::ExecVisible => -(e.size as i64),
            _ => 0,
        };
        if delta != 0 {
            *book.entry(key).or_insert(0) += delta;
        }
    }
    book.retain(|_, v| *v > 0);
    book
}

/// Top displayed levels of one side, best first.
fn displayed(book: &BTreeMap<(i8, i64), i64>, side: i8) -> Vec<(i64, i64)> {
    let mut levels: Vec<(i64, i64)> = book
        .iter()
        .filter(|((s, _), _)| *s == side)
        .map(|((_, p), v)| (*p, *v))
        .collect();
    if side > 0 {
        levels.sort_by(|a, b| b.0.cmp(&a.0));
    } else {
        levels.sort_by(|a, b| a.0.cmp(&b.0));
    }
    levels.truncate(DISPLAYED);
    levels
}

fn mid_x2(book: &BTreeMap<(i8, i64), i64>) -> Option<i64> {
    let bid = displayed(book, 1).first().map(|l| l.0)?;
    let ask = displayed(book, -1).first().map(|l| l.0)?;
    Some(bid + ask)
}

fn volume_at(levels: &[(i64, i64)], price: i64) -> i64 {
    levels.iter().find(|l| l.0 == price).map_or(0, |l| l.1)
}

/// Sum of displayed volume from the best through `limit` inclusive.
fn depth(levels: &[(i64, i64)], side: i8, limit: i64) -> i64 {
    levels
        .iter()
        .filter(|(p, _)| if side > 0 { *p >= limit } else { *p <= limit })
        .map(|l| l.1)
        .sum()
}

pub fn featurized(e: &MboEvent) -> bool {
    let t = e.time.nanos();
    (OPEN..=CLOSE).contains(&t)
        && matches!(
            e.event_type,
            EventType::Add | EventType::PartialCancel | EventType::Delete | EventType::ExecVisible
        )
}

/// Oracle features of every featurized event, in stream order: V, T_m,
/// T_1, T_prev, SBS, OBS. `None` when a side of the book before the event
/// is empty. Each book is rebuilt from scratch and every feature rescans
/// the history.
pub fn oracle_features(events: &[MboEvent]) -> Vec<(usize, Option<[f64; 6]>)> {
    let after: Vec<BTreeMap<(i8, i64), i64>> = (0..events.len()).map(|j| rebuild(&events[..=j])).collect();
    let mids: Vec<Option<i64>> = after.iter().map(mid_x2).collect();
    let empty = BTreeMap::new();
    let book_before = |i: usize| if i == 0 { &empty } else { &after[i - 1] };
    (0..events.len())
        .filter(|&i| featurized(&events[i]))
        .map(|i| (i, oracle_one(events, &after, &mids, book_before(i), i)))
        .collect()
}

fn oracle_one(
    events: &[MboEvent],
    after: &[BTreeMap<(i8, i64), i64>],
    mids: &[Option<i64>],
    before: &BTreeMap<(i8, i64), i64>,
    i: usize,
) -> Option<[f64; 6]> {
    let e = &events[i];
    let side = e.side.direction();
    let own = displayed(before, side);
    let opp = displayed(before, -side);
    let bid = displayed(before, 1).first()?.0;
    let ask = displayed(before, -1).first()?.0;
    let secs = |from: u64| (e.time.nanos() - from) as f64 / 1e9;

    // Mid changes: compare the mid after each earlier event with the one
    // before it; the first event anchors the clock.
    let mut last_change = events[0].time.nanos();
    let mut prev_mid = None;
    for j in 0..i {
        let m = mids[j];
        if m != prev_mid {
            last_change = events[j].time.nanos();
        }
        prev_mid = m;
    }

    // Arrivals at this level since it last emptied through a reduction.
    let mut first = None;
    let mut last = None;
    for j in 0..i {
        let f = &events[j];
        if f.side != e.side || f.price != e.price {
            continue;
        }
        match f.event_type {
            EventType::Add => {
                first.get_or_insert(f.time.nanos());
                last = Some(f.time.nanos());
            }
            EventType::PartialCancel | EventType::Delete | EventType::ExecVisible => {
                if volume_at(&displayed(&after[j], side), e.price) == 0 {
                    first = None;
                    last = None;
                }
            }
            _ => {}
        }
    }

    // Mirror around the mid, snapped toward the opposite best.
    let raw = bid + ask - e.price;
    let mirror = if raw % TICK == 0 {
        raw
    } else {
        let lo = raw.div_euclid(TICK) * TICK;
        if e.side == Side::Bid {
            lo
        } else {
            lo + TICK
        }
    };

    Some([
        volume_at(&own, e.price) as f64,
        secs(last_change),
        first.map_or(0.0, secs),
        last.map_or(0.0, secs),
        depth(&own, side, e.price) as f64,
        depth(&opp, -side, mirror) as f64,
    ])
}

/// Whether two feature vectors agree: integer features exactly, times to
/// `1e-12` relative.
pub fn features_match(a: &[f64; 6], b: &[f64; 6]) -> bool {
    let exact = [0, 4, 5].iter().all(|&k| a[k] == b[k]);
    let times = [1, 2, 3].iter().all(|&k| {
        let scale = a[k].abs().max(b[k].abs());
        (a[k] - b[k]).abs() <= 1e-12 * scale
    });
    exact && times
}

/// Best one-to-one matching of `k` predicted labels onto `k` truth labels
/// by exhaustive search. Returns `map[pred] = truth` and the agreement.
pub fn best_matching(pred: &[usize], truth: &[usize], k: usize) -> (Vec<usize>, f64) {
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let mut best = (Vec::new(), 0usize);
    let mut perm: Vec<usize> = (0..k).collect();
    permute(&mut perm, 0, &mut |p| {
        let hits: usize = (0..k).map(|i| counts[i][p[i]]).sum();
        if best.0.is_empty() || hits > best.1 {
            best = (p.to_vec(), hits);
        }
    });
    (best.0, best.1 as f64 / pred.len().max(1) as f64)
}

fn permute(p: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == p.len() {
        visit(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, visit);
        p.swap(at, i);
    }
}
