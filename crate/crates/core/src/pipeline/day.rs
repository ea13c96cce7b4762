use std::path::Path;

use log::debug;

use crate::clustering::{predict, ClusterModel, PointSet};
use crate::error::{Error, Result};
use crate::features::{FeatureEngine, RollingNormalizer, FEATURE_DIM};
use crate::flow::{
    bucket_count, bucket_index, classify_contribution, compute_bucket_returns, FlowConfig,
    FlowTable,
};
use crate::market_data::{
    parse_message_file, parse_orderbook_file, BookSnapshot, MboEvent, SessionConfig, Timestamp,
};
use crate::strategy::DaySignals;

/// Raw message stream of one stock-day with the book after each message.
#[derive(Debug, Clone, PartialEq)]
pub struct DayData {
    pub events: Vec<MboEvent>,
    pub books: Vec<BookSnapshot>,
}

impl DayData {
    pub fn new(events: Vec<MboEvent>, books: Vec<BookSnapshot>) -> Result<Self> {
        if events.len() != books.len() {
            return Err(Error::Dimension {
                expected: events.len(),
                got: books.len(),
            });
        }
        Ok(DayData { events, books })
    }

    pub fn load(message: &Path, orderbook: &Path) -> Result<Self> {
        DayData::new(parse_message_file(message)?, parse_orderbook_file(orderbook)?)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Book in force just before row `i`.
    pub fn book_before(&self, i: usize) -> &BookSnapshot {
        static EMPTY: std::sync::OnceLock<BookSnapshot> = std::sync::OnceLock::new();
        match i {
            0 => EMPTY.get_or_init(BookSnapshot::empty),
            _ => &self.books[i - 1],
        }
    }

    pub fn times(&self) -> Vec<Timestamp> {
        self.events.iter().map(|e| e.time).collect()
    }
}

/// Features of one in-session event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRow {
    /// Row of the event in the day's message file.
    pub event_index: usize,
    pub raw: [f64; FEATURE_DIM],
    /// `None` while the normalization window is filling.
    pub normalized: Option<[f64; FEATURE_DIM]>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DayFeatures {
    pub rows: Vec<FeatureRow>,
    /// In-session events whose features could not be computed.
    pub failed: usize,
}

impl DayFeatures {
    pub fn normalized_points(&self) -> PointSet {
        let mut points = PointSet::with_dim(FEATURE_DIM);
        for row in &self.rows {
            if let Some(z) = row.normalized {
                points.push(&z).expect("feature dimension");
            }
        }
        points
    }
}

/// Features for every session-kept event, normalized over the day's own
/// trailing window. Events outside the session still advance the engine.
pub fn extract_features(day: &DayData, session: &SessionConfig, window: usize) -> DayFeatures {
    let mut engine = FeatureEngine::new();
    let mut normalizer = RollingNormalizer::<FEATURE_DIM>::new(window);
    let mut out = DayFeatures::default();
    for (i, (event, after)) in day.events.iter().zip(&day.books).enumerate() {
        let keep = session.keeps(event);
        match engine.process(event, day.book_before(i), after, keep) {
            Some(Ok(features)) => {
                let raw = features.to_array();
                out.rows.push(FeatureRow {
                    event_index: i,
                    raw,
                    normalized: normalizer.push(raw),
                });
            }
            Some(Err(e)) => {
                debug!("row {i}: {e}");
                out.failed += 1;
            }
            None => {}
        }
    }
    out
}

/// Cluster label of every event; `None` for events without normalized
/// features.
pub fn label_events(day: &DayData, features: &DayFeatures, model: &ClusterModel) -> Result<Vec<Option<usize>>> {
    let labels = predict(model, &features.normalized_points())?;
    let mut out = vec![None; day.len()];
    let labelled = features.rows.iter().filter(|r| r.normalized.is_some());
    for (row, label) in labelled.zip(labels) {
        out[row.event_index] = Some(label);
    }
    Ok(out)
}

/// Best-level flow of the labelled in-session events, bucketed by cluster.
/// Unlabelled events are left out of every scope.
pub fn flow_table(
    day: &DayData,
    labels: &[Option<usize>],
    clusters: usize,
    session: &SessionConfig,
) -> Result<FlowTable> {
    let mut table = FlowTable::new(bucket_count(session), clusters);
    for (i, event) in day.events.iter().enumerate() {
        let Some(label) = labels[i] else { continue };
        if !session.keeps(event) {
            continue;
        }
        let before = day.book_before(i);
        let c = classify_contribution(
            event,
            before.best_bid().map(|l| l.price),
            before.best_ask().map(|l| l.price),
        );
        if c.term.is_some() {
            table.add(bucket_index(event.time, session)?, Some(label), c)?;
        }
    }
    Ok(table)
}

/// Everything downstream of the cluster model for one stock-day.
pub fn day_signals(
    stock: &str,
    date: &str,
    day: &DayData,
    features: &DayFeatures,
    model: &ClusterModel,
    session: &SessionConfig,
    flow: &FlowConfig,
) -> Result<DaySignals> {
    let labels = label_events(day, features, model)?;
    let table = flow_table(day, &labels, model.k, session)?;
    let returns = compute_bucket_returns(&day.times(), &day.books, session, flow)?;
    DaySignals::from_table(stock, date, &table, returns, flow.legacy_trade_sign)
}
