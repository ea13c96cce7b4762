use serde::{Deserialize, Serialize};

use super::{bucket_count, FlowConfig, BUCKET_SECS};
use crate::error::{Error, Result};
use crate::market_data::{BookSnapshot, SessionConfig, Timestamp, NANOS_PER_SEC};

/// Mid-prices at the bucket boundaries and the log-returns between them.
///
/// With `n` buckets, `mids_x2` has `n + 1` entries (open, then the end of
/// each bucket). `conr[i]` is the return over bucket `i + 1`; `frnb[i]` is
/// the return over the bucket after it and `freb[i]` the return from its
/// end to the close, both defined for the first `n - 1` buckets only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReturns {
    pub mids_x2: Vec<i64>,
    pub conr: Vec<f64>,
    pub frnb: Vec<f64>,
    pub freb: Vec<f64>,
}

fn log_ratio(to: i64, from: i64) -> f64 {
    ((to - from) as f64 / from as f64).ln_1p()
}

impl BucketReturns {
    pub fn from_mids(mids_x2: Vec<i64>) -> Result<Self> {
        if mids_x2.len() < 2 {
            return Err(Error::Undefined("need at least two boundary mids".into()));
        }
        if let Some(m) = mids_x2.iter().find(|&&m| m <= 0) {
            return Err(Error::Undefined(format!("non-positive mid {m}")));
        }
        let n = mids_x2.len() - 1;
        let close = mids_x2[n];
        let conr: Vec<f64> = mids_x2.windows(2).map(|w| log_ratio(w[1], w[0])).collect();
        let frnb = conr[1..].to_vec();
        let freb = (1..n).map(|i| log_ratio(close, mids_x2[i])).collect();
        Ok(BucketReturns {
            mids_x2,
            conr,
            frnb,
            freb,
        })
    }

    pub fn buckets(&self) -> usize {
        self.conr.len()
    }
}

/// Mid (`a¹ + b¹`) of the last snapshot at or before each bucket boundary.
///
/// `times[i]` is the time of the event after which `books[i]` holds. The
/// stream must be time-ordered and may start before the session.
pub fn boundary_mids(
    times: &[Timestamp],
    books: &[BookSnapshot],
    session: &SessionConfig,
    open_fallback: bool,
) -> Result<Vec<i64>> {
    if times.len() != books.len() {
        return Err(Error::Dimension {
            expected: times.len(),
            got: books.len(),
        });
    }
    let n = bucket_count(session);
    let start = session.start().nanos();
    let end = session.end().nanos();
    let mut mids = Vec::with_capacity(n + 1);
    let mut next = 0usize;
    for i in 0..=n {
        let boundary = (start + i as u64 * BUCKET_SECS * NANOS_PER_SEC).min(end);
        while next < times.len() && times[next].nanos() <= boundary {
            next += 1;
        }
        let book = match next {
            0 if i == 0 && open_fallback && !books.is_empty() => &books[0],
            0 => {
                return Err(Error::Undefined(format!(
                    "no book snapshot at or before {}",
                    Timestamp::from_nanos(boundary)
                )))
            }
            j => &books[j - 1],
        };
        let mid = book.mid_x2().ok_or_else(|| {
            Error::Undefined(format!(
                "one-sided book at boundary {}",
                Timestamp::from_nanos(boundary)
            ))
        })?;
        mids.push(mid);
    }
    Ok(mids)
}

pub fn compute_bucket_returns(
    times: &[Timestamp],
    books: &[BookSnapshot],
    session: &SessionConfig,
    config: &FlowConfig,
) -> Result<BucketReturns> {
    BucketReturns::from_mids(boundary_mids(times, books, session, config.open_mid_fallback)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Level;

    fn book(bid: i64, ask: i64) -> BookSnapshot {
        BookSnapshot::new(vec![Level::new(ask, 1)], vec![Level::new(bid, 1)]).unwrap()
    }

    #[test]
    fn conr_example() {
        let mut mids = vec![2_000_000; 14];
        mids[1] = 2_020_000; // 100 -> 101 dollars over bucket 1
        for m in mids.iter_mut().skip(2) {
            *m = 2_020_000;
        }
        let r = BucketReturns::from_mids(mids).unwrap();
        assert!((r.conr[0] - 0.00995033).abs() < 1e-8);
        assert_eq!(r.conr.len(), 13);
        assert_eq!(r.frnb.len(), 12);
        assert_eq!(r.freb.len(), 12);
        assert_eq!(r.frnb[0], r.conr[1]);
    }

    #[test]
    fn boundary_uses_last_snapshot_at_or_before() {
        let s = SessionConfig::default();
        let times = [
            Timestamp::from_secs(34_000),
            Timestamp::from_secs(36_000),
            Timestamp::from_secs(36_001),
        ];
        let books = [book(990_000, 990_200), book(1_000_000, 1_000_200), book(1, 3)];
        let mids = boundary_mids(&times, &books, &s, false).unwrap();
        assert_eq!(mids[0], 1_980_200);
        assert_eq!(mids[1], 2_000_200);
        assert_eq!(mids[2], 4);
    }

    #[test]
    fn missing_open_snapshot() {
        let s = SessionConfig::default();
        let times = [Timestamp::from_secs(34_201)];
        let books = [book(1_000_000, 1_000_200)];
        assert!(boundary_mids(&times, &books, &s, false).is_err());
        let mids = boundary_mids(&times, &books, &s, true).unwrap();
        assert_eq!(mids.len(), 14);
    }

    #[test]
    fn one_sided_boundary_is_an_error() {
        let s = SessionConfig::default();
        let one_sided = BookSnapshot::new(vec![], vec![Level::new(1_000_000, 5)]).unwrap();
        assert!(boundary_mids(&[Timestamp::from_secs(34_000)], &[one_sided], &s, false).is_err());
    }
}
