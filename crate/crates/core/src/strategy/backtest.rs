use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, sample_std, vol_target, MetricsConfig, MetricsReport};
use super::roles::StockCorrelations;
use super::{daily_pnl, equal_weighted_pnl, pearson_correlation, Horizon, PnlSeries, StrategySpec};
use crate::error::{Error, Result};
use crate::flow::{BucketReturns, ClusterScope, EventScope, FlowTable, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignalKey {
    pub cluster_scope: ClusterScope,
    pub event_scope: EventScope,
    pub measure: Measure,
}

/// Bucket OFIs for every scope combination and the bucket returns of one
/// stock-day.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySignals {
    pub stock: String,
    pub date: String,
    pub ofi: BTreeMap<SignalKey, Vec<i64>>,
    pub returns: BucketReturns,
}

impl DaySignals {
    pub fn from_table(
        stock: impl Into<String>,
        date: impl Into<String>,
        table: &FlowTable,
        returns: BucketReturns,
        legacy_trade_sign: bool,
    ) -> Result<Self> {
        let scopes = (0..table.clusters())
            .map(ClusterScope::Cluster)
            .chain([ClusterScope::All]);
        let mut ofi = BTreeMap::new();
        for cluster_scope in scopes {
            for event_scope in EventScope::ALL {
                for measure in Measure::ALL {
                    let values = table.ofi(cluster_scope, event_scope, measure, legacy_trade_sign)?;
                    ofi.insert(
                        SignalKey {
                            cluster_scope,
                            event_scope,
                            measure,
                        },
                        values,
                    );
                }
            }
        }
        Ok(DaySignals {
            stock: stock.into(),
            date: date.into(),
            ofi,
            returns,
        })
    }

    /// Renumber clusters so new cluster `i` is old cluster `order[i]`.
    pub fn relabeled(&self, order: &[usize]) -> DaySignals {
        let mut out = self.clone();
        out.ofi = self
            .ofi
            .iter()
            .map(|(key, v)| {
                let mut key = *key;
                if let ClusterScope::Cluster(old) = key.cluster_scope {
                    let new = order.iter().position(|&o| o == old).unwrap_or(old);
                    key.cluster_scope = ClusterScope::Cluster(new);
                }
                (key, v.clone())
            })
            .collect();
        out
    }

    pub fn horizon_returns(&self, horizon: Horizon) -> &[f64] {
        match horizon {
            Horizon::Frnb => &self.returns.frnb,
            Horizon::Freb => &self.returns.freb,
        }
    }

    fn signal(&self, key: SignalKey) -> Result<&[i64]> {
        self.ofi.get(&key).map(Vec::as_slice).ok_or_else(|| {
            Error::Undefined(format!(
                "{} {}: no {}/{}/{} signal",
                self.stock, self.date, key.cluster_scope, key.event_scope, key.measure
            ))
        })
    }
}

/// Equal-weighted daily PnL of a strategy over a panel of stock-days.
pub fn strategy_series(panel: &[DaySignals], spec: StrategySpec) -> Result<PnlSeries> {
    let key = SignalKey {
        cluster_scope: spec.cluster_scope,
        event_scope: spec.event_scope,
        measure: spec.measure,
    };
    let mut per_stock: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for day in panel {
        let pnl = daily_pnl(day.signal(key)?, day.horizon_returns(spec.horizon))?;
        per_stock
            .entry(day.stock.clone())
            .or_default()
            .insert(day.date.clone(), pnl);
    }
    Ok(equal_weighted_pnl(&per_stock))
}

/// Pooled (day, bucket) correlations of each cluster's total OFI with CONR
/// and FREB for the days of one stock.
pub fn stock_correlations(stock: &str, days: &[&DaySignals], k: usize) -> Result<StockCorrelations> {
    let mut conr = Vec::with_capacity(k);
    let mut freb = Vec::with_capacity(k);
    for c in 0..k {
        let mut pair_conr = [None; 2];
        let mut pair_freb = [None; 2];
        for (m, measure) in Measure::ALL.into_iter().enumerate() {
            let key = SignalKey {
                cluster_scope: ClusterScope::Cluster(c),
                event_scope: EventScope::All,
                measure,
            };
            let (mut x1, mut y1, mut x2, mut y2) = (vec![], vec![], vec![], vec![]);
            for day in days {
                let ofi = day.signal(key)?;
                for (o, r) in ofi.iter().zip(&day.returns.conr) {
                    x1.push(*o as f64);
                    y1.push(*r);
                }
                for (o, r) in ofi.iter().zip(&day.returns.freb) {
                    x2.push(*o as f64);
                    y2.push(*r);
                }
            }
            pair_conr[m] = pearson_correlation(&x1, &y1).ok();
            pair_freb[m] = pearson_correlation(&x2, &y2).ok();
        }
        conr.push(pair_conr);
        freb.push(pair_freb);
    }
    Ok(StockCorrelations {
        stock: stock.to_string(),
        conr,
        freb,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub metrics: MetricsConfig,
    pub horizons: Vec<Horizon>,
    pub event_scopes: Vec<EventScope>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            metrics: MetricsConfig::default(),
            horizons: Horizon::ALL.to_vec(),
            event_scopes: EventScope::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub spec: StrategySpec,
    pub days: usize,
    pub sharpe: Option<f64>,
}

fn sharpe_of(values: &[f64], config: &MetricsConfig) -> Option<f64> {
    let sd = sample_std(values);
    if !(sd > 0.0) {
        return None;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    Some(m / sd * config.annualization.sqrt())
}

/// Training Sharpe ratio of every measure × cluster scope (benchmarks
/// included) for each configured horizon and event scope.
pub fn training_table(
    panel: &[DaySignals],
    k: usize,
    config: &BacktestConfig,
) -> Result<Vec<TrainingRow>> {
    let mut rows = Vec::new();
    for &horizon in &config.horizons {
        for &event_scope in &config.event_scopes {
            for measure in Measure::ALL {
                for cluster_scope in (0..k).map(ClusterScope::Cluster).chain([ClusterScope::All]) {
                    let spec = StrategySpec {
                        measure,
                        cluster_scope,
                        event_scope,
                        horizon,
                    };
                    let series = strategy_series(panel, spec)?;
                    rows.push(TrainingRow {
                        spec,
                        days: series.len(),
                        sharpe: sharpe_of(&series.values, &config.metrics),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Highest-Sharpe clustered strategy. Undefined Sharpe ratios rank last;
/// ties go to the size measure, then the lowest cluster index.
pub fn select_best_strategy(candidates: &[TrainingRow]) -> Result<StrategySpec> {
    candidates
        .iter()
        .filter(|r| !r.spec.is_benchmark())
        .min_by(|a, b| {
            let sa = a.sharpe.unwrap_or(f64::NEG_INFINITY);
            let sb = b.sharpe.unwrap_or(f64::NEG_INFINITY);
            sb.total_cmp(&sa)
                .then(a.spec.measure.cmp(&b.spec.measure))
                .then(a.spec.cluster_scope.cmp(&b.spec.cluster_scope))
                .then(a.spec.cmp(&b.spec))
        })
        .map(|r| r.spec)
        .ok_or_else(|| Error::Undefined("no clustered strategy to select from".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSpec {
    pub spec: StrategySpec,
    pub train_sharpe: Option<f64>,
    /// False when the test series has no spread and was left unscaled.
    pub vol_targeted: bool,
    pub test: MetricsReport,
    /// Test-period PnL after volatility targeting.
    pub series: PnlSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub horizon: Horizon,
    pub event_scope: EventScope,
    pub best: EvaluatedSpec,
    pub benchmarks: Vec<EvaluatedSpec>,
}

fn evaluate_spec(
    spec: StrategySpec,
    training: &[TrainingRow],
    test: &[DaySignals],
    config: &MetricsConfig,
) -> Result<EvaluatedSpec> {
    let raw = strategy_series(test, spec)?;
    if raw.is_empty() {
        return Err(Error::Undefined(format!("no test days for {spec}")));
    }
    let (values, vol_targeted) = match vol_target(&raw.values, config) {
        Ok(v) => (v, true),
        Err(e) => {
            warn!("{spec}: {e}; reporting the unscaled series");
            (raw.values.clone(), false)
        }
    };
    let test_metrics = metrics(&values, config)?;
    Ok(EvaluatedSpec {
        spec,
        train_sharpe: training.iter().find(|r| r.spec == spec).and_then(|r| r.sharpe),
        vol_targeted,
        test: test_metrics,
        series: PnlSeries { values, ..raw },
    })
}

/// Test-period metrics of the selected strategy and of the size and count
/// benchmarks for the same horizon and event scope.
pub fn evaluate_out_of_sample(
    best: StrategySpec,
    training: &[TrainingRow],
    test: &[DaySignals],
    config: &BacktestConfig,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Undefined("empty test set".into()));
    }
    let best_eval = evaluate_spec(best, training, test, &config.metrics)?;
    let benchmarks = Measure::ALL
        .into_iter()
        .map(|measure| {
            let spec = StrategySpec {
                measure,
                cluster_scope: ClusterScope::All,
                ..best
            };
            evaluate_spec(spec, training, test, &config.metrics)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        horizon: best.horizon,
        event_scope: best.event_scope,
        best: best_eval,
        benchmarks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(measure: Measure, c: usize, sharpe: Option<f64>) -> TrainingRow {
        TrainingRow {
            spec: StrategySpec {
                measure,
                cluster_scope: ClusterScope::Cluster(c),
                event_scope: EventScope::All,
                horizon: Horizon::Frnb,
            },
            days: 10,
            sharpe,
        }
    }

    #[test]
    fn selects_argmax() {
        let mut rows = vec![
            row(Measure::Size, 0, Some(0.5)),
            row(Measure::Size, 1, Some(1.2)),
            row(Measure::Size, 2, Some(-0.1)),
            row(Measure::Count, 0, Some(0.4)),
            row(Measure::Count, 1, Some(1.0)),
            row(Measure::Count, 2, Some(0.0)),
        ];
        let best = select_best_strategy(&rows).unwrap();
        assert_eq!((best.measure, best.cluster_scope), (Measure::Size, ClusterScope::Cluster(1)));
        rows.reverse();
        assert_eq!(select_best_strategy(&rows).unwrap(), best);
    }

    #[test]
    fn ties_prefer_size_then_low_index() {
        let rows = [
            row(Measure::Count, 0, Some(1.0)),
            row(Measure::Size, 2, Some(1.0)),
            row(Measure::Size, 1, Some(1.0)),
        ];
        let best = select_best_strategy(&rows).unwrap();
        assert_eq!((best.measure, best.cluster_scope), (Measure::Size, ClusterScope::Cluster(1)));
    }

    #[test]
    fn never_abstains() {
        let rows = [row(Measure::Size, 0, Some(-2.0)), row(Measure::Count, 1, None)];
        assert_eq!(select_best_strategy(&rows).unwrap().cluster_scope, ClusterScope::Cluster(0));
        assert!(select_best_strategy(&[]).is_err());
    }
}
