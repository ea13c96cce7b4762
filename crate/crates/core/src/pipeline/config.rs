use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::artifact::short_hash;
use crate::clustering::KMeansConfig;
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::market_data::SessionConfig;
use crate::strategy::BacktestConfig;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TickGroup {
    Small,
    Medium,
    Large,
}

impl fmt::Display for TickGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TickGroup::Small => "small",
            TickGroup::Medium => "medium",
            TickGroup::Large => "large",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StockEntry {
    pub ticker: String,
    pub group: TickGroup,
}

impl StockEntry {
    pub fn new(ticker: impl Into<String>, group: TickGroup) -> Self {
        StockEntry {
            ticker: ticker.into(),
            group,
        }
    }
}

/// The 2021 NASDAQ universe, by tick-size group.
pub fn default_stocks() -> Vec<StockEntry> {
    use TickGroup::*;
    [
        ("CHTR", Small),
        ("GOOG", Small),
        ("GS", Small),
        ("IBM", Small),
        ("MCD", Small),
        ("NVDA", Small),
        ("AAPL", Medium),
        ("ABBV", Medium),
        ("PM", Medium),
        ("CMCSA", Large),
        ("CSCO", Large),
        ("INTC", Large),
        ("MSFT", Large),
        ("KO", Large),
        ("VZ", Large),
    ]
    .into_iter()
    .map(|(t, g)| StockEntry::new(t, g))
    .collect()
}

/// Inclusive calendar date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// The first `n` weekdays of the range.
    pub fn business_days(&self, n: usize) -> Result<Vec<NaiveDate>> {
        let mut out = Vec::with_capacity(n);
        let mut d = self.start;
        while out.len() < n {
            if d > self.end {
                return Err(Error::Config(format!(
                    "{} to {} has fewer than {n} weekdays",
                    self.start, self.end
                )));
            }
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                out.push(d);
            }
            d = d + Days::new(1);
        }
        Ok(out)
    }
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
    /// Cap on the training points per stock, sampled uniformly.
    pub subsample: Option<usize>,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let k = KMeansConfig::default();
        ClusteringConfig {
            k: k.k,
            max_iter: k.max_iter,
            tol: k.tol,
            n_init: k.n_init,
            subsample: None,
        }
    }
}

impl ClusteringConfig {
    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            max_iter: self.max_iter,
            tol: self.tol,
            n_init: self.n_init,
        }
    }
}

/// Generator settings for the `synth` stage. Seeds, the session and the
/// feature window come from the pipeline config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthStageConfig {
    /// Days generated from the start of the train and test ranges.
    pub train_days: usize,
    pub test_days: usize,
    pub events_per_day: usize,
    pub lot_size: u64,
    pub tick_size: i64,
    pub initial_mid: f64,
    pub weights: [f64; 3],
    pub separation: f64,
    pub kappa: f64,
    pub drift_follow: f64,
    pub unit_size: bool,
}

impl Default for SynthStageConfig {
    fn default() -> Self {
        let g = SynthConfig::default();
        SynthStageConfig {
            train_days: 60,
            test_days: 60,
            events_per_day: g.events_per_day,
            lot_size: g.lot_size,
            tick_size: g.tick_size,
            initial_mid: g.initial_mid,
            weights: g.weights,
            separation: g.separation,
            kappa: g.kappa,
            drift_follow: g.drift_follow,
            unit_size: g.unit_size,
        }
    }
}

/// Per-stock generator seed.
pub fn stock_seed(seed: u64, stock_index: usize) -> u64 {
    seed.wrapping_mul(1000).wrapping_add(stock_index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data_root: PathBuf,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub seed: u64,
    /// Rolling normalization window `w`.
    pub window: usize,
    /// Stock whose K-means++ fit seeds every other stock. Drawn from the
    /// universe with `seed` when unset.
    pub reference_stock: Option<String>,
    pub stocks: Vec<StockEntry>,
    pub train: DateRange,
    pub test: DateRange,
    pub session: SessionConfig,
    pub clustering: ClusteringConfig,
    pub flow: FlowConfig,
    pub backtest: BacktestConfig,
    pub synth: SynthStageConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data_root: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            workers: 0,
            seed: 1,
            window: 100,
            reference_stock: None,
            stocks: default_stocks(),
            train: DateRange::new(date(2021, 1, 1), date(2021, 6, 30)),
            test: DateRange::new(date(2021, 7, 1), date(2021, 12, 31)),
            session: SessionConfig::default(),
            clustering: ClusteringConfig::default(),
            flow: FlowConfig::default(),
            backtest: BacktestConfig::default(),
            synth: SynthStageConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.stocks.is_empty() {
            return Err(Error::Config("no stocks configured".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.stocks {
            if s.ticker.is_empty() || s.ticker.contains(['/', '\\']) {
                return Err(Error::Config(format!("bad ticker {:?}", s.ticker)));
            }
            if !seen.insert(s.ticker.as_str()) {
                return Err(Error::Config(format!("duplicate ticker {}", s.ticker)));
            }
        }
        if let Some(r) = &self.reference_stock {
            if !seen.contains(r.as_str()) {
                return Err(Error::Config(format!("reference stock {r} is not in the universe")));
            }
        }
        for (name, range) in [("train", self.train), ("test", self.test)] {
            if range.end < range.start {
                return Err(Error::Config(format!("{name} range ends before it starts")));
            }
        }
        if self.train.end >= self.test.start {
            return Err(Error::Config("the train range must end before the test range starts".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        self.session.validate()?;
        self.clustering.kmeans().validate()?;
        if self.clustering.k != 3 {
            return Err(Error::Config("role assignment needs k = 3".into()));
        }
        if self.clustering.subsample == Some(0) {
            return Err(Error::Config("subsample cap must be positive".into()));
        }
        self.backtest.metrics.validate()?;
        self.synth_config(0).validate()
    }

    /// Generator config for the stock at `stock_index`.
    pub fn synth_config(&self, stock_index: usize) -> SynthConfig {
        let s = &self.synth;
        SynthConfig {
            seed: stock_seed(self.seed, stock_index),
            n_days: s.train_days + s.test_days,
            events_per_day: s.events_per_day,
            lot_size: s.lot_size,
            tick_size: s.tick_size,
            initial_mid: s.initial_mid,
            weights: s.weights,
            separation: s.separation,
            kappa: s.kappa,
            drift_follow: s.drift_follow,
            unit_size: s.unit_size,
            window: self.window,
            session: self.session.clone(),
        }
    }

    /// Hash of every setting that can change an output. Paths and the
    /// worker count are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.data_root = PathBuf::new();
        c.output_dir = PathBuf::new();
        c.workers = 0;
        short_hash(c.to_toml().unwrap_or_default().as_bytes())
    }

    pub fn group_of(&self, ticker: &str) -> Option<TickGroup> {
        self.stocks.iter().find(|s| s.ticker == ticker).map(|s| s.group)
    }

    pub fn split_of(&self, date: NaiveDate) -> Option<Split> {
        if self.train.contains(date) {
            Some(Split::Train)
        } else if self.test.contains(date) {
            Some(Split::Test)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}
