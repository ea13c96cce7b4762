use super::{bucket_count, bucket_index, ClusterScope, EventScope, FlowContribution, FlowTerm, Measure};
use crate::error::{Error, Result};
use crate::market_data::{SessionConfig, Timestamp};

/// One classified in-session event and the cluster of the order behind it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowRecord {
    pub time: Timestamp,
    pub contribution: FlowContribution,
    pub label: Option<usize>,
}

/// Per-bucket OFI for one scope combination, straight from the records.
///
/// Cluster scopes fail on a contributing event with no label; the benchmark
/// scope counts every record.
pub fn aggregate_ofi(
    records: &[FlowRecord],
    cluster: ClusterScope,
    events: EventScope,
    measure: Measure,
    session: &SessionConfig,
    legacy_trade_sign: bool,
) -> Result<Vec<i64>> {
    let mut out = vec![0i64; bucket_count(session)];
    for (row, r) in records.iter().enumerate() {
        let Some(term) = r.contribution.term else {
            continue;
        };
        if let ClusterScope::Cluster(c) = cluster {
            match r.label {
                None => return Err(Error::Unlabeled(row)),
                Some(l) if l != c => continue,
                Some(_) => {}
            }
        }
        if !events.includes(term) {
            continue;
        }
        let bucket = bucket_index(r.time, session)?;
        let amount = match measure {
            Measure::Size => r.contribution.size,
            Measure::Count => r.contribution.count,
        } as i64;
        out[bucket - 1] += term.sign(legacy_trade_sign) * amount;
    }
    Ok(out)
}

const TERMS: usize = FlowTerm::ALL.len();

/// Signed-term totals per (bucket, cluster, term), from which every scope
/// combination is read without another pass over the events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowTable {
    buckets: usize,
    clusters: usize,
    /// `[bucket][cluster slot][term] -> (size, count)`; the last slot holds
    /// unlabeled events.
    cells: Vec<(u64, u64)>,
    unlabeled_contributing: usize,
}

impl FlowTable {
    pub fn new(buckets: usize, clusters: usize) -> Self {
        FlowTable {
            buckets,
            clusters,
            cells: vec![(0, 0); buckets * (clusters + 1) * TERMS],
            unlabeled_contributing: 0,
        }
    }

    pub fn build(records: &[FlowRecord], clusters: usize, session: &SessionConfig) -> Result<Self> {
        let mut table = FlowTable::new(bucket_count(session), clusters);
        for r in records {
            let bucket = bucket_index(r.time, session)?;
            table.add(bucket, r.label, r.contribution)?;
        }
        Ok(table)
    }

    /// Record one contribution in 1-based `bucket`.
    pub fn add(&mut self, bucket: usize, label: Option<usize>, c: FlowContribution) -> Result<()> {
        let Some(term) = c.term else {
            return Ok(());
        };
        if bucket == 0 || bucket > self.buckets {
            return Err(Error::OutOfSession(format!("bucket {bucket}")));
        }
        let slot = match label {
            Some(l) if l < self.clusters => l,
            Some(l) => {
                return Err(Error::Clustering(format!(
                    "label {l} out of range for {} clusters",
                    self.clusters
                )))
            }
            None => {
                self.unlabeled_contributing += 1;
                self.clusters
            }
        };
        let idx = self.index(bucket - 1, slot, term);
        let cell = &mut self.cells[idx];
        cell.0 += c.size;
        cell.1 += c.count;
        Ok(())
    }

    fn index(&self, bucket: usize, slot: usize, term: FlowTerm) -> usize {
        (bucket * (self.clusters + 1) + slot) * TERMS + term.index()
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn unlabeled_contributing(&self) -> usize {
        self.unlabeled_contributing
    }

    pub fn ofi(
        &self,
        cluster: ClusterScope,
        events: EventScope,
        measure: Measure,
        legacy_trade_sign: bool,
    ) -> Result<Vec<i64>> {
        let slots = match cluster {
            ClusterScope::Cluster(c) if c >= self.clusters => {
                return Err(Error::Clustering(format!("no cluster {}", c + 1)))
            }
            ClusterScope::Cluster(_) if self.unlabeled_contributing > 0 => {
                return Err(Error::Unlabeled(self.unlabeled_contributing))
            }
            ClusterScope::Cluster(c) => c..c + 1,
            ClusterScope::All => 0..self.clusters + 1,
        };
        let out = (0..self.buckets)
            .map(|b| {
                let mut total = 0i64;
                for slot in slots.clone() {
                    for term in FlowTerm::ALL.into_iter().filter(|&t| events.includes(t)) {
                        let (size, count) = self.cells[self.index(b, slot, term)];
                        let amount = match measure {
                            Measure::Size => size,
                            Measure::Count => count,
                        } as i64;
                        total += term.sign(legacy_trade_sign) * amount;
                    }
                }
                total
            })
            .collect();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(secs: u64, term: FlowTerm, size: u64, label: Option<usize>) -> FlowRecord {
        FlowRecord {
            time: Timestamp::from_secs(secs),
            contribution: FlowContribution {
                term: Some(term),
                size,
                count: 1,
            },
            label,
        }
    }

    #[test]
    fn single_bucket_example() {
        // +100 bid add, +50 ask cancel, -30 bid cancel, -20 ask add => 100
        let s = SessionConfig::default();
        let records = [
            rec(34_300, FlowTerm::BidAdd, 100, Some(0)),
            rec(34_400, FlowTerm::AskCancel, 50, Some(0)),
            rec(34_500, FlowTerm::BidCancel, 30, Some(0)),
            rec(34_600, FlowTerm::AskAdd, 20, Some(0)),
        ];
        let ofi = aggregate_ofi(&records, ClusterScope::All, EventScope::All, Measure::Size, &s, false)
            .unwrap();
        assert_eq!(ofi[0], 100);
        assert!(ofi[1..].iter().all(|&v| v == 0));
        let count =
            aggregate_ofi(&records, ClusterScope::All, EventScope::All, Measure::Count, &s, false)
                .unwrap();
        assert_eq!(count[0], 0);
    }

    #[test]
    fn two_adds_and_an_ask_cancel() {
        let s = SessionConfig::default();
        let records = [
            rec(34_300, FlowTerm::BidAdd, 100, Some(0)),
            rec(34_301, FlowTerm::BidAdd, 50, Some(1)),
            rec(34_302, FlowTerm::AskCancel, 30, Some(2)),
        ];
        let agg = |m| aggregate_ofi(&records, ClusterScope::All, EventScope::All, m, &s, false).unwrap();
        assert_eq!(agg(Measure::Size)[0], 180);
        assert_eq!(agg(Measure::Count)[0], 3);
    }

    #[test]
    fn unlabeled_contributor_fails_cluster_scope() {
        let s = SessionConfig::default();
        let records = [rec(34_300, FlowTerm::BidAdd, 100, None)];
        let err = aggregate_ofi(
            &records,
            ClusterScope::Cluster(0),
            EventScope::All,
            Measure::Size,
            &s,
            false,
        );
        assert!(matches!(err, Err(Error::Unlabeled(0))));
        let table = FlowTable::build(&records, 3, &s).unwrap();
        assert!(table
            .ofi(ClusterScope::Cluster(0), EventScope::All, Measure::Size, false)
            .is_err());
        assert_eq!(
            table.ofi(ClusterScope::All, EventScope::All, Measure::Size, false).unwrap()[0],
            100
        );
    }

    #[test]
    fn table_matches_direct_aggregation() {
        let s = SessionConfig::default();
        let records = [
            rec(34_200, FlowTerm::BidAdd, 10, Some(1)),
            rec(36_000, FlowTerm::AskTrade, 7, Some(2)),
            rec(36_001, FlowTerm::BidTrade, 3, Some(0)),
            rec(57_600, FlowTerm::AskCancel, 4, Some(1)),
        ];
        let table = FlowTable::build(&records, 3, &s).unwrap();
        for cluster in [0, 1, 2].map(ClusterScope::Cluster).into_iter().chain([ClusterScope::All]) {
            for events in EventScope::ALL {
                for measure in Measure::ALL {
                    for legacy in [false, true] {
                        assert_eq!(
                            table.ofi(cluster, events, measure, legacy).unwrap(),
                            aggregate_ofi(&records, cluster, events, measure, &s, legacy).unwrap()
                        );
                    }
                }
            }
        }
    }
}
