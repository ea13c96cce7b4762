use std::fs;
use std::path::{Path, PathBuf};

use super::SynthDay;
use crate::artifact::ArtifactMeta;
use crate::error::{Error, Result};
use crate::flow::bucket_index;
use crate::market_data::{serialize_messages, SessionConfig, DEFAULT_DEPTH};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayFiles {
    pub message: PathBuf,
    pub orderbook: PathBuf,
    pub truth: PathBuf,
}

/// LOBSTER-style names: `{ticker}_{date}_{start_ms}_{end_ms}_message_10.csv`
/// and the matching orderbook file, plus `{ticker}_{date}_truth.csv`.
pub fn day_file_names(dir: &Path, ticker: &str, date: &str, session: &SessionConfig) -> DayFiles {
    let stem = format!(
        "{ticker}_{date}_{}_{}",
        session.session_start * 1000,
        session.session_end * 1000
    );
    DayFiles {
        message: dir.join(format!("{stem}_message_{DEFAULT_DEPTH}.csv")),
        orderbook: dir.join(format!("{stem}_orderbook_{DEFAULT_DEPTH}.csv")),
        truth: dir.join(format!("{ticker}_{date}_truth.csv")),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Ground truth per event: archetype, bucket (0 before the open) and the
/// bucket's planted drift and opportunistic sign.
pub fn write_truth_csv(
    path: &Path,
    date: &str,
    day: &SynthDay,
    session: &SessionConfig,
    meta: &ArtifactMeta,
) -> Result<()> {
    let mut out = meta.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["event_index", "date", "archetype", "bucket", "bucket_drift", "bucket_signal"])?;
        for (i, (event, label)) in day.events.iter().zip(&day.truth.labels).enumerate() {
            let bucket = bucket_index(event.time, session).unwrap_or(0);
            let (drift, signal) = match bucket {
                0 => (0, 0),
                b => (day.truth.drift[b - 1], day.truth.signal[b - 1]),
            };
            w.write_record([
                i.to_string(),
                date.to_string(),
                label.to_string(),
                bucket.to_string(),
                drift.to_string(),
                signal.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write the message, orderbook and truth files of one day.
pub fn write_day(
    dir: &Path,
    ticker: &str,
    date: &str,
    day: &SynthDay,
    session: &SessionConfig,
    meta: &ArtifactMeta,
) -> Result<DayFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = day_file_names(dir, ticker, date, session);
    write(&files.message, &serialize_messages(&day.events))?;
    let mut book = String::with_capacity(day.snapshots.len() * 40 * 10);
    for snapshot in &day.snapshots {
        snapshot.format_row(DEFAULT_DEPTH, &mut book);
        book.push('\n');
    }
    write(&files.orderbook, &book)?;
    write_truth_csv(&files.truth, date, day, session, meta)?;
    Ok(files)
}
