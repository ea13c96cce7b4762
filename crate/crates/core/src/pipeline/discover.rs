use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::warn;

use super::config::{PipelineConfig, Split, TickGroup};
use crate::error::{Error, Result};
use crate::market_data::DEFAULT_DEPTH;

/// One stock-day of input, the unit of parallel work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayTask {
    pub ticker: String,
    pub group: TickGroup,
    pub date: NaiveDate,
    pub split: Split,
    pub message: PathBuf,
    pub orderbook: PathBuf,
}

impl DayTask {
    pub fn date_str(&self) -> String {
        self.date.format("%Y-%m-%d").to_string()
    }
}

#[derive(Default)]
struct Pair {
    message: Option<PathBuf>,
    orderbook: Option<PathBuf>,
}

/// Split `{ticker}_{date}_{start}_{end}_{kind}_{levels}.csv`.
fn parse_name(name: &str) -> Option<(&str, NaiveDate, &str)> {
    let stem = name.strip_suffix(".csv")?;
    let mut parts = stem.rsplitn(6, '_');
    let levels = parts.next()?;
    let kind = parts.next()?;
    let _end = parts.next()?;
    let _start = parts.next()?;
    let date = NaiveDate::parse_from_str(parts.next()?, "%Y-%m-%d").ok()?;
    let ticker = parts.next()?;
    if levels != DEFAULT_DEPTH.to_string() || !matches!(kind, "message" | "orderbook") {
        return None;
    }
    Some((ticker, date, kind))
}

/// Stock-days under `data_root` that fall in the train or test range,
/// ordered by the configured stock order, then date. A day with only one
/// of its two files is skipped with a warning.
pub fn discover(config: &PipelineConfig) -> Result<Vec<DayTask>> {
    discover_in(&config.data_root, config)
}

pub fn discover_in(root: &Path, config: &PipelineConfig) -> Result<Vec<DayTask>> {
    let mut found: BTreeMap<(String, NaiveDate), Pair> = BTreeMap::new();
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let name = entry.file_name();
        let Some((ticker, date, kind)) = name.to_str().and_then(parse_name) else {
            continue;
        };
        let pair = found.entry((ticker.to_string(), date)).or_default();
        let slot = match kind {
            "message" => &mut pair.message,
            _ => &mut pair.orderbook,
        };
        *slot = Some(entry.path());
    }

    let mut tasks = Vec::new();
    for stock in &config.stocks {
        for ((ticker, date), pair) in found.range((stock.ticker.clone(), NaiveDate::MIN)..) {
            if *ticker != stock.ticker {
                break;
            }
            let Some(split) = config.split_of(*date) else {
                continue;
            };
            match (&pair.message, &pair.orderbook) {
                (Some(message), Some(orderbook)) => tasks.push(DayTask {
                    ticker: ticker.clone(),
                    group: stock.group,
                    date: *date,
                    split,
                    message: message.clone(),
                    orderbook: orderbook.clone(),
                }),
                (None, _) => warn!("{ticker} {date}: message file missing, day skipped"),
                (_, None) => warn!("{ticker} {date}: orderbook file missing, day skipped"),
            }
        }
        if !tasks.iter().any(|t| t.ticker == stock.ticker) {
            warn!("{}: no input days found", stock.ticker);
        }
    }
    Ok(tasks)
}
