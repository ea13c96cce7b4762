use lobflow::flow::{
    aggregate_ofi, bucket_index, classify_contribution, compute_bucket_returns, BucketReturns,
    ClusterScope, EventScope, FlowConfig, FlowRecord, FlowTable, Measure,
};
use lobflow::market_data::{BookSnapshot, EventType, MboEvent, SessionConfig, Side};
use lobflow::pipeline::{flow_table, DayData};
use lobflow::strategy::DaySignals;
use lobflow::synth::{generate_day, random_stream, RandomStreamConfig, SynthConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: usize = 3;

fn random_labels(n: usize, seed: u64) -> Vec<Option<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Some(rng.random_range(0..K))).collect()
}

/// Size OFI per bucket written out term by term from the event list.
fn naive_ofi(events: &[MboEvent], books: &[BookSnapshot], labels: &[Option<usize>], only: Option<usize>) -> Vec<i64> {
    let session = SessionConfig::default();
    let mut out = vec![0i64; 13];
    for (i, e) in events.iter().enumerate() {
        if !session.keeps(e) || (only.is_some() && labels[i] != only) {
            continue;
        }
        let (bid, ask) = if i == 0 {
            (None, None)
        } else {
            (books[i - 1].best_bid().map(|l| l.price), books[i - 1].best_ask().map(|l| l.price))
        };
        let size = e.size as i64;
        let v = match (e.event_type, e.side) {
            (EventType::Add, Side::Bid) if bid.is_none_or(|b| e.price >= b) => size,
            (EventType::Add, Side::Ask) if ask.is_none_or(|a| e.price <= a) => -size,
            (EventType::PartialCancel | EventType::Delete, Side::Bid) if bid == Some(e.price) => -size,
            (EventType::PartialCancel | EventType::Delete, Side::Ask) if ask == Some(e.price) => size,
            (EventType::ExecVisible, Side::Bid) if bid == Some(e.price) => size,
            (EventType::ExecVisible, Side::Ask) if ask == Some(e.price) => -size,
            _ => 0,
        };
        if v != 0 {
            out[bucket_index(e.time, &session).unwrap() - 1] += v;
        }
    }
    out
}

fn signals(data: &DayData, labels: &[Option<usize>]) -> DaySignals {
    let session = SessionConfig::default();
    let table = flow_table(data, labels, K, &session).unwrap();
    let returns = compute_bucket_returns(&data.times(), &data.books, &session, &FlowConfig::default()).unwrap();
    DaySignals::from_table("S", "d", &table, returns, false).unwrap()
}

fn get(s: &DaySignals, c: ClusterScope, e: EventScope, m: Measure) -> Vec<i64> {
    s.ofi[&lobflow::strategy::SignalKey { cluster_scope: c, event_scope: e, measure: m }].clone()
}

fn assert_identities(s: &DaySignals, lot: Option<i64>) {
    use ClusterScope as C;
    use EventScope as E;
    let scopes: Vec<C> = (0..K).map(C::Cluster).chain([C::All]).collect();
    for m in [Measure::Size, Measure::Count] {
        for &c in &scopes {
            let parts: Vec<Vec<i64>> = [E::Add, E::Cancel, E::Trade].iter().map(|&e| get(s, c, e, m)).collect();
            let total = get(s, c, E::All, m);
            for b in 0..total.len() {
                assert_eq!(total[b], parts[0][b] + parts[1][b] + parts[2][b]);
            }
        }
        for e in EventScope::ALL {
            let star = get(s, C::All, e, m);
            for b in 0..star.len() {
                let sum: i64 = (0..K).map(|c| get(s, C::Cluster(c), e, m)[b]).sum();
                assert_eq!(sum, star[b]);
            }
        }
    }
    if let Some(lot) = lot {
        for &c in &scopes {
            for e in EventScope::ALL {
                let size = get(s, c, e, Measure::Size);
                let count = get(s, c, e, Measure::Count);
                assert!(size.iter().zip(&count).all(|(s, n)| *s == n * lot));
            }
        }
    }
}

fn telescopes(r: &BucketReturns) -> bool {
    let n = r.mids_x2.len() - 1;
    let direct = (r.mids_x2[n] as f64 / r.mids_x2[0] as f64).ln();
    let sum: f64 = r.conr.iter().sum();
    let scale = direct.abs().max(r.conr.iter().map(|v| v.abs()).sum::<f64>());
    (sum - direct).abs() <= 1e-12 * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ofi_identities_on_random_streams(seed in any::<u64>(), unit in any::<bool>()) {
        let config = RandomStreamConfig { n_events: 1500, unit_size: unit, mean_gap: 15.0, ..Default::default() };
        let (events, books) = random_stream(seed, &config).unwrap();
        let data = DayData::new(events, books).unwrap();
        let labels = random_labels(data.len(), seed ^ 1);
        let s = signals(&data, &labels);
        assert_identities(&s, unit.then_some(config.lot_size as i64));

        let all = get(&s, ClusterScope::All, EventScope::All, Measure::Size);
        prop_assert_eq!(&all, &naive_ofi(&data.events, &data.books, &labels, None));
        for c in 0..K {
            let own = get(&s, ClusterScope::Cluster(c), EventScope::All, Measure::Size);
            prop_assert_eq!(own, naive_ofi(&data.events, &data.books, &labels, Some(c)));
        }
    }

    #[test]
    fn table_and_direct_aggregation_agree(seed in any::<u64>()) {
        let config = RandomStreamConfig { n_events: 800, mean_gap: 20.0, ..Default::default() };
        let (events, books) = random_stream(seed, &config).unwrap();
        let session = SessionConfig::default();
        let labels = random_labels(events.len(), seed);
        let records: Vec<FlowRecord> = events
            .iter()
            .enumerate()
            .filter(|(_, e)| session.keeps(e))
            .map(|(i, e)| {
                let before = if i == 0 { BookSnapshot::empty() } else { books[i - 1].clone() };
                FlowRecord {
                    time: e.time,
                    contribution: classify_contribution(e, before.best_bid().map(|l| l.price), before.best_ask().map(|l| l.price)),
                    label: labels[i],
                }
            })
            .collect();
        let table = FlowTable::build(&records, K, &session).unwrap();
        for c in (0..K).map(ClusterScope::Cluster).chain([ClusterScope::All]) {
            for e in EventScope::ALL {
                for m in [Measure::Size, Measure::Count] {
                    for legacy in [false, true] {
                        prop_assert_eq!(
                            table.ofi(c, e, m, legacy).unwrap(),
                            aggregate_ofi(&records, c, e, m, &session, legacy).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn conr_telescopes(mids in prop::collection::vec(1_000i64..100_000_000, 14)) {
        prop_assert!(telescopes(&BucketReturns::from_mids(mids).unwrap()));
    }
}

#[test]
fn identities_and_telescoping_on_generator_days() {
    for unit in [false, true] {
        let config = SynthConfig {
            unit_size: unit,
            seed: 5,
            ..SynthConfig::default()
        };
        for day in 0..10 {
            let g = generate_day(&config, day).unwrap();
            let data = DayData::new(g.events, g.snapshots).unwrap();
            let labels = random_labels(data.len(), day as u64);
            let s = signals(&data, &labels);
            assert_identities(&s, unit.then_some(config.lot_size as i64));
            assert!(telescopes(&s.returns));
        }
    }
}

#[test]
fn unlabeled_contributions_block_cluster_scopes() {
    let config = RandomStreamConfig { n_events: 300, ..Default::default() };
    let (events, books) = random_stream(3, &config).unwrap();
    let data = DayData::new(events, books).unwrap();
    let session = SessionConfig::default();
    let mut table = flow_table(&data, &random_labels(data.len(), 3), K, &session).unwrap();
    let c = lobflow::flow::FlowContribution { term: Some(lobflow::flow::FlowTerm::BidAdd), size: 1, count: 1 };
    table.add(1, None, c).unwrap();
    assert!(table.ofi(ClusterScope::Cluster(0), EventScope::All, Measure::Size, false).is_err());
    assert!(table.ofi(ClusterScope::All, EventScope::All, Measure::Size, false).is_ok());
}
