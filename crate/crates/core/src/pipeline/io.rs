use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::day::{DayData, DayFeatures};
use crate::artifact::ArtifactMeta;
use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;
use crate::flow::{BucketReturns, ClusterScope, EventScope, Measure};
use crate::strategy::{DaySignals, SignalKey};

/// Write `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn finish(w: csv::Writer<&mut Vec<u8>>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(())
}

/// Header of the feature CSV.
pub fn feature_columns() -> Vec<String> {
    let mut cols: Vec<String> = ["event_index", "time", "event_type", "side", "price"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(FEATURE_NAMES.iter().map(|n| n.to_string()));
    cols.extend(FEATURE_NAMES.iter().map(|n| format!("z_{n}")));
    cols
}

/// One row per featurized event; normalized columns are empty while the
/// window fills.
pub fn features_csv(day: &DayData, features: &DayFeatures, meta: &ArtifactMeta) -> Result<Vec<u8>> {
    let mut out = meta.csv_comment().into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(feature_columns())?;
    for row in &features.rows {
        let e = &day.events[row.event_index];
        let mut rec = vec![
            row.event_index.to_string(),
            e.time.to_string(),
            e.event_type.code().to_string(),
            e.side.direction().to_string(),
            e.price.to_string(),
        ];
        rec.extend(row.raw.iter().map(f64::to_string));
        match row.normalized {
            Some(z) => rec.extend(z.iter().map(f64::to_string)),
            None => rec.extend(std::iter::repeat_n(String::new(), FEATURE_NAMES.len())),
        }
        w.write_record(&rec)?;
    }
    finish(w)?;
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalRecord {
    stock: String,
    date: String,
    bucket: usize,
    cluster_scope: ClusterScope,
    event_scope: EventScope,
    measure: Measure,
    ofi_value: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReturnRecord {
    stock: String,
    date: String,
    bucket: usize,
    conr: f64,
    frnb: Option<f64>,
    freb: Option<f64>,
}

pub fn signals_csv(days: &[DaySignals], meta: &ArtifactMeta) -> Result<Vec<u8>> {
    let mut out = meta.csv_comment().into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    for day in days {
        for (key, values) in &day.ofi {
            for (i, &ofi_value) in values.iter().enumerate() {
                w.serialize(SignalRecord {
                    stock: day.stock.clone(),
                    date: day.date.clone(),
                    bucket: i + 1,
                    cluster_scope: key.cluster_scope,
                    event_scope: key.event_scope,
                    measure: key.measure,
                    ofi_value,
                })?;
            }
        }
    }
    finish(w)?;
    Ok(out)
}

pub fn returns_csv(days: &[DaySignals], meta: &ArtifactMeta) -> Result<Vec<u8>> {
    let mut out = meta.csv_comment().into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    for day in days {
        let r = &day.returns;
        for (i, &conr) in r.conr.iter().enumerate() {
            w.serialize(ReturnRecord {
                stock: day.stock.clone(),
                date: day.date.clone(),
                bucket: i + 1,
                conr,
                frnb: r.frnb.get(i).copied(),
                freb: r.freb.get(i).copied(),
            })?;
        }
    }
    finish(w)?;
    Ok(out)
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn bucket_error(path: &Path, stock: &str, date: &str, bucket: usize) -> Error {
    Error::Inconsistent(format!(
        "{}: {stock} {date} bucket {bucket} out of order",
        path.display()
    ))
}

/// Rebuild per-day signals from the signal and returns CSVs. Boundary mids
/// are not stored, so `returns.mids_x2` is left empty.
pub fn read_signals(signals: &Path, returns: &Path) -> Result<Vec<DaySignals>> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut ofi: BTreeMap<(String, String), BTreeMap<SignalKey, Vec<i64>>> = BTreeMap::new();
    for rec in reader(signals)?.deserialize() {
        let rec: SignalRecord = rec?;
        let day = (rec.stock.clone(), rec.date.clone());
        if !ofi.contains_key(&day) {
            order.push(day.clone());
        }
        let key = SignalKey {
            cluster_scope: rec.cluster_scope,
            event_scope: rec.event_scope,
            measure: rec.measure,
        };
        let values = ofi.entry(day).or_default().entry(key).or_default();
        if rec.bucket != values.len() + 1 {
            return Err(bucket_error(signals, &rec.stock, &rec.date, rec.bucket));
        }
        values.push(rec.ofi_value);
    }

    let mut rets: BTreeMap<(String, String), BucketReturns> = BTreeMap::new();
    for rec in reader(returns)?.deserialize() {
        let rec: ReturnRecord = rec?;
        let r = rets
            .entry((rec.stock.clone(), rec.date.clone()))
            .or_insert_with(|| BucketReturns {
                mids_x2: Vec::new(),
                conr: Vec::new(),
                frnb: Vec::new(),
                freb: Vec::new(),
            });
        if rec.bucket != r.conr.len() + 1 {
            return Err(bucket_error(returns, &rec.stock, &rec.date, rec.bucket));
        }
        r.conr.push(rec.conr);
        r.frnb.extend(rec.frnb);
        r.freb.extend(rec.freb);
    }

    order
        .into_iter()
        .map(|day| {
            let returns = rets.remove(&day).ok_or_else(|| {
                Error::Inconsistent(format!("{} {}: no returns", day.0, day.1))
            })?;
            let ofi = ofi.remove(&day).unwrap_or_default();
            Ok(DaySignals {
                stock: day.0,
                date: day.1,
                ofi,
                returns,
            })
        })
        .collect()
}
