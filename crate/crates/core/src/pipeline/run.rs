use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::algorithm::{backtest_group, choose_reference, fit_models, group_roles, GroupBacktest, GroupRoles};
use super::config::{PipelineConfig, Split, TickGroup};
use super::day::{day_signals, extract_features, DayData};
use super::discover::{discover, DayTask};
use super::io::{features_csv, read_json, read_signals, returns_csv, signals_csv, write_file, write_json};
use crate::artifact::ArtifactMeta;
use crate::clustering::{ClusterModel, PointSet};
use crate::error::{Error, Result};
use crate::strategy::DaySignals;
use crate::synth::{generate_day, write_day};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Synth,
    Features,
    Cluster,
    Signals,
    Roles,
    Backtest,
    All,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Synth,
        Stage::Features,
        Stage::Cluster,
        Stage::Signals,
        Stage::Roles,
        Stage::Backtest,
        Stage::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Features => "features",
            Stage::Cluster => "cluster",
            Stage::Signals => "signals",
            Stage::Roles => "roles",
            Stage::Backtest => "backtest",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const ERROR_REPORT: &str = "error.json";

/// Output locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn features(&self, ticker: &str, date: &str) -> PathBuf {
        self.root.join("features").join(ticker).join(format!("{ticker}_{date}_features.csv"))
    }

    pub fn model(&self, ticker: &str) -> PathBuf {
        self.root.join("models").join(format!("{ticker}.json"))
    }

    pub fn reference_model(&self) -> PathBuf {
        self.root.join("models").join("reference.json")
    }

    pub fn signals(&self) -> PathBuf {
        self.root.join("signals").join("signals.csv")
    }

    pub fn returns(&self) -> PathBuf {
        self.root.join("signals").join("returns.csv")
    }

    pub fn roles(&self) -> PathBuf {
        self.root.join("roles.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("backtest").join("report.json")
    }

    pub fn training_table(&self) -> PathBuf {
        self.root.join("backtest").join("training_sharpe.csv")
    }

    pub fn pnl(&self, group: TickGroup, spec: &str) -> PathBuf {
        let name = spec.replace('/', "_");
        self.root.join("backtest").join("pnl").join(format!("{group}_{name}.csv"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifestDay {
    pub ticker: String,
    pub date: String,
    pub split: Split,
    pub day_index: usize,
    pub events: usize,
    pub message: String,
    pub orderbook: String,
    pub truth: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifest {
    pub meta: ArtifactMeta,
    /// Generator seed of each stock.
    pub seeds: BTreeMap<String, u64>,
    pub days: Vec<SynthManifestDay>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub meta: ArtifactMeta,
    pub reference: String,
    pub stocks: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RolesDocument {
    pub meta: ArtifactMeta,
    pub groups: BTreeMap<TickGroup, GroupRoles>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BacktestReport {
    pub meta: ArtifactMeta,
    pub groups: BTreeMap<TickGroup, GroupBacktest>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub stage: String,
    pub error: String,
    pub meta: ArtifactMeta,
}

/// Record a failed run: `error.json` plus the incomplete marker.
pub fn write_error_report(out: &Path, stage: &str, error: &str, config_hash: &str) -> Result<()> {
    let report = ErrorReport {
        stage: stage.to_string(),
        error: error.to_string(),
        meta: ArtifactMeta::new(config_hash),
    };
    write_json(&out.join(ERROR_REPORT), &report)?;
    write_file(&out.join(INCOMPLETE_MARKER), format!("{stage}\n"))
}

pub struct Pipeline {
    config: PipelineConfig,
    meta: ArtifactMeta,
    layout: Layout,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Pipeline {
            meta: ArtifactMeta::new(config.hash()),
            layout: Layout {
                root: config.output_dir.clone(),
            },
            config,
            pool,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn meta(&self) -> &ArtifactMeta {
        &self.meta
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Run a stage. The output directory carries the incomplete marker
    /// until the stage succeeds.
    pub fn run(&self, stage: Stage) -> Result<()> {
        let out = &self.layout.root;
        let marker = out.join(INCOMPLETE_MARKER);
        write_file(&marker, format!("{stage}\n"))?;
        let _ = fs::remove_file(out.join(ERROR_REPORT));
        match stage {
            Stage::Synth => self.synth()?,
            Stage::Features => self.features()?,
            Stage::Cluster => {
                self.cluster()?;
            }
            Stage::Signals => {
                self.signals()?;
            }
            Stage::Roles => {
                self.roles()?;
            }
            Stage::Backtest => {
                self.backtest()?;
            }
            Stage::All => {
                self.features()?;
                self.cluster()?;
                self.signals()?;
                self.roles()?;
                self.backtest()?;
            }
        }
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
        info!("stage {stage} done");
        Ok(())
    }

    fn par_map<T, R, F>(&self, items: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R> + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    fn tasks(&self) -> Result<Vec<DayTask>> {
        let tasks = discover(&self.config)?;
        info!("{} stock-days found under {}", tasks.len(), self.config.data_root.display());
        Ok(tasks)
    }

    fn load(&self, task: &DayTask) -> Result<DayData> {
        DayData::load(&task.message, &task.orderbook).map_err(|e| {
            Error::Inconsistent(format!("{} {}: {e}", task.ticker, task.date_str()))
        })
    }

    /// Generate the configured universe into the data root.
    pub fn synth(&self) -> Result<()> {
        let c = &self.config;
        let mut dates: Vec<(Split, chrono::NaiveDate)> = Vec::new();
        dates.extend(c.train.business_days(c.synth.train_days)?.into_iter().map(|d| (Split::Train, d)));
        dates.extend(c.test.business_days(c.synth.test_days)?.into_iter().map(|d| (Split::Test, d)));
        let jobs: Vec<(usize, usize)> = (0..c.stocks.len())
            .flat_map(|s| (0..dates.len()).map(move |d| (s, d)))
            .collect();
        let root = &c.data_root;
        let days = self.par_map(&jobs, |&(s, d)| {
            let ticker = &c.stocks[s].ticker;
            let date = dates[d].1.format("%Y-%m-%d").to_string();
            let day = generate_day(&c.synth_config(s), d)?;
            let files = write_day(root, ticker, &date, &day, &c.session, &self.meta)?;
            let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(SynthManifestDay {
                ticker: ticker.clone(),
                date,
                split: dates[d].0,
                day_index: d,
                events: day.events.len(),
                message: name(&files.message),
                orderbook: name(&files.orderbook),
                truth: name(&files.truth),
            })
        })?;
        let seeds = (0..c.stocks.len())
            .map(|s| (c.stocks[s].ticker.clone(), c.synth_config(s).seed))
            .collect();
        write_json(
            &root.join("manifest.json"),
            &SynthManifest {
                meta: self.meta.clone(),
                seeds,
                days,
            },
        )?;
        info!("generated {} stock-days", jobs.len());
        Ok(())
    }

    pub fn features(&self) -> Result<()> {
        let tasks = self.tasks()?;
        let c = &self.config;
        self.par_map(&tasks, |t| {
            let day = self.load(t)?;
            let features = extract_features(&day, &c.session, c.window);
            if features.failed > 0 {
                warn!("{} {}: {} events without features", t.ticker, t.date_str(), features.failed);
            }
            write_file(
                &self.layout.features(&t.ticker, &t.date_str()),
                features_csv(&day, &features, &self.meta)?,
            )
        })?;
        Ok(())
    }

    /// Fit the reference model and the base-initialized per-stock models
    /// on the training days.
    pub fn cluster(&self) -> Result<BTreeMap<String, ClusterModel>> {
        let tasks: Vec<DayTask> = self.tasks()?.into_iter().filter(|t| t.split == Split::Train).collect();
        let c = &self.config;
        let per_day = self.par_map(&tasks, |t| {
            Ok(extract_features(&self.load(t)?, &c.session, c.window).normalized_points())
        })?;
        let mut points: Vec<(String, PointSet)> = Vec::new();
        for (t, p) in tasks.iter().zip(per_day) {
            match points.last_mut() {
                Some((ticker, acc)) if *ticker == t.ticker => acc.extend(&p)?,
                _ => points.push((t.ticker.clone(), p)),
            }
        }
        points.retain(|(ticker, p)| {
            if p.is_empty() {
                warn!("{ticker}: no normalized training features, stock left out");
            }
            !p.is_empty()
        });
        let candidates: Vec<String> = points.iter().map(|(t, _)| t.clone()).collect();
        let reference = choose_reference(c.reference_stock.as_deref(), &candidates, c.seed)?;
        info!("reference stock {reference}");
        let fits = fit_models(&points, &reference, &c.clustering, c.seed)?;

        let stamp = |m: &ClusterModel| {
            let mut m = m.clone();
            m.meta = Some(self.meta.clone());
            m
        };
        write_file(&self.layout.reference_model(), stamp(&fits.reference_model).to_json()?)?;
        for (ticker, model) in &fits.models {
            write_file(&self.layout.model(ticker), stamp(model).to_json()?)?;
        }
        write_json(
            &self.layout.root.join("models").join("summary.json"),
            &ClusterSummary {
                meta: self.meta.clone(),
                reference,
                stocks: candidates,
            },
        )?;
        Ok(fits.models)
    }

    fn load_models(&self, tickers: impl Iterator<Item = String>) -> Result<BTreeMap<String, ClusterModel>> {
        let mut models = BTreeMap::new();
        for ticker in tickers {
            let path = self.layout.model(&ticker);
            if path.exists() {
                models.insert(ticker, ClusterModel::load(&path)?);
            } else {
                warn!("{ticker}: no cluster model, stock skipped");
            }
        }
        Ok(models)
    }

    /// Label every stock-day with its stock's model and export bucket OFIs
    /// and returns.
    pub fn signals(&self) -> Result<Vec<DaySignals>> {
        let c = &self.config;
        let models = self.load_models(c.stocks.iter().map(|s| s.ticker.clone()))?;
        let tasks: Vec<DayTask> = self
            .tasks()?
            .into_iter()
            .filter(|t| models.contains_key(&t.ticker))
            .collect();
        let days = self.par_map(&tasks, |t| {
            let day = self.load(t)?;
            let features = extract_features(&day, &c.session, c.window);
            day_signals(&t.ticker, &t.date_str(), &day, &features, &models[&t.ticker], &c.session, &c.flow)
                .map_err(|e| Error::Inconsistent(format!("{} {}: {e}", t.ticker, t.date_str())))
        })?;
        write_file(&self.layout.signals(), signals_csv(&days, &self.meta)?)?;
        write_file(&self.layout.returns(), returns_csv(&days, &self.meta)?)?;
        Ok(days)
    }

    /// Signals from the exported CSVs, split by group and period.
    fn grouped_signals(&self) -> Result<BTreeMap<TickGroup, (Vec<DaySignals>, Vec<DaySignals>)>> {
        let days = read_signals(&self.layout.signals(), &self.layout.returns())?;
        let mut groups: BTreeMap<TickGroup, (Vec<DaySignals>, Vec<DaySignals>)> = BTreeMap::new();
        for day in days {
            let Some(group) = self.config.group_of(&day.stock) else {
                warn!("{}: not in the configured universe, ignored", day.stock);
                continue;
            };
            let date = chrono::NaiveDate::parse_from_str(&day.date, "%Y-%m-%d")
                .map_err(|e| Error::Inconsistent(format!("date {}: {e}", day.date)))?;
            let entry = groups.entry(group).or_default();
            match self.config.split_of(date) {
                Some(Split::Train) => entry.0.push(day),
                Some(Split::Test) => entry.1.push(day),
                None => {}
            }
        }
        Ok(groups)
    }

    pub fn roles(&self) -> Result<RolesDocument> {
        let mut groups = BTreeMap::new();
        for (group, (train, _)) in self.grouped_signals()? {
            if train.is_empty() {
                warn!("{group}: no training days, roles not assigned");
                continue;
            }
            let roles = group_roles(&train, self.config.clustering.k)?;
            info!("{group}: roles {:?}", roles.roles.roles);
            groups.insert(group, roles);
        }
        let doc = RolesDocument {
            meta: self.meta.clone(),
            groups,
        };
        write_json(&self.layout.roles(), &doc)?;
        Ok(doc)
    }

    pub fn backtest(&self) -> Result<BacktestReport> {
        let roles: RolesDocument = read_json(&self.layout.roles())?;
        let k = self.config.clustering.k;
        let mut groups = BTreeMap::new();
        for (group, (train, test)) in self.grouped_signals()? {
            let Some(r) = roles.groups.get(&group) else {
                warn!("{group}: no roles, backtest skipped");
                continue;
            };
            if test.is_empty() {
                warn!("{group}: no test days, backtest skipped");
                continue;
            }
            groups.insert(group, backtest_group(&train, &test, &r.roles, k, &self.config.backtest)?);
        }
        self.write_backtest(&groups)?;
        let report = BacktestReport {
            meta: self.meta.clone(),
            groups,
        };
        write_json(&self.layout.report(), &report)?;
        Ok(report)
    }

    fn write_backtest(&self, groups: &BTreeMap<TickGroup, GroupBacktest>) -> Result<()> {
        let mut table = self.meta.csv_comment().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut table);
            w.write_record(["group", "horizon", "event_scope", "measure", "cluster_scope", "days", "sharpe"])?;
            for (group, g) in groups {
                for row in &g.training {
                    let s = row.spec;
                    w.write_record([
                        group.to_string(),
                        s.horizon.to_string(),
                        s.event_scope.to_string(),
                        s.measure.to_string(),
                        s.cluster_scope.to_string(),
                        row.days.to_string(),
                        row.sharpe.map(|v| v.to_string()).unwrap_or_default(),
                    ])?;
                }
            }
            w.flush().map_err(|e| Error::io(self.layout.training_table(), e))?;
        }
        write_file(&self.layout.training_table(), table)?;

        for (group, g) in groups {
            for ev in &g.evaluations {
                for e in std::iter::once(&ev.best).chain(&ev.benchmarks) {
                    let mut out = self.meta.csv_comment().into_bytes();
                    {
                        let mut w = csv::Writer::from_writer(&mut out);
                        w.write_record(["date", "cumulative_pnl"])?;
                        for (date, v) in e.series.dates.iter().zip(e.series.cumulative()) {
                            w.write_record([date.clone(), v.to_string()])?;
                        }
                        w.flush().map_err(|err| Error::io(self.layout.pnl(*group, ""), err))?;
                    }
                    write_file(&self.layout.pnl(*group, &e.spec.to_string()), out)?;
                }
            }
        }
        Ok(())
    }
}
