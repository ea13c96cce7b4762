//! Role assignment, daily strategy PnL, volatility targeting, performance
//! metrics and the train/test strategy comparison.

mod backtest;
mod metrics;
mod roles;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use backtest::{
    evaluate_out_of_sample, select_best_strategy, stock_correlations, strategy_series,
    training_table, BacktestConfig, DaySignals, Evaluation, EvaluatedSpec, SignalKey,
    TrainingRow,
};
pub use metrics::{metrics, sample_std, vol_target, MetricsConfig, MetricsReport};
pub use roles::{assign_roles, Role, RoleMap, StockCorrelations};

use crate::error::{Error, Result};
use crate::flow::{ClusterScope, EventScope, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Horizon {
    Frnb,
    Freb,
}

impl Horizon {
    pub const ALL: [Horizon; 2] = [Horizon::Frnb, Horizon::Freb];
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Horizon::Frnb => "FRNB",
            Horizon::Freb => "FREB",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategySpec {
    pub measure: Measure,
    pub cluster_scope: ClusterScope,
    pub event_scope: EventScope,
    pub horizon: Horizon,
}

impl StrategySpec {
    pub fn is_benchmark(&self) -> bool {
        self.cluster_scope.is_benchmark()
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}",
            self.horizon, self.event_scope, self.measure, self.cluster_scope
        )
    }
}

/// One day's strategy PnL: `Σ_j sign(OFI_j) · R_j` over the buckets that
/// have a forward return. `sign(0) = 0`.
pub fn daily_pnl(ofi: &[i64], returns: &[f64]) -> Result<f64> {
    if ofi.len() < returns.len() {
        return Err(Error::Dimension {
            expected: returns.len(),
            got: ofi.len(),
        });
    }
    Ok(ofi
        .iter()
        .zip(returns)
        .map(|(&o, &r)| o.signum() as f64 * r)
        .sum())
}

/// Daily values of an equal-weighted portfolio, keyed by date.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PnlSeries {
    pub dates: Vec<String>,
    pub values: Vec<f64>,
    /// Dates on which some stock had no value and the mean was taken over
    /// the rest.
    pub partial_dates: Vec<String>,
}

impl PnlSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> PnlSeries {
        PnlSeries {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.values
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }
}

/// Mean across stocks per date. `per_stock` maps stock to (date to pnl).
pub fn equal_weighted_pnl(per_stock: &BTreeMap<String, BTreeMap<String, f64>>) -> PnlSeries {
    let mut by_date: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for days in per_stock.values() {
        for (date, v) in days {
            let e = by_date.entry(date).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    let mut out = PnlSeries::default();
    for (date, (sum, n)) in by_date {
        if n < per_stock.len() {
            out.partial_dates.push(date.to_string());
        }
        out.dates.push(date.to_string());
        out.values.push(sum / n as f64);
    }
    out
}

/// Sample Pearson correlation. Fails on fewer than two points or a
/// constant series.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Undefined("correlation needs two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pnl_examples() {
        let r = [0.01, 0.02, 0.0];
        assert!((daily_pnl(&[5, -3, 0], &r).unwrap() + 0.01).abs() < 1e-15);
        assert_eq!(daily_pnl(&[0; 13], &[0.3; 12]).unwrap(), 0.0);
        assert_eq!(daily_pnl(&[7], &[0.005]).unwrap(), 0.005);
        assert!(daily_pnl(&[1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn equal_weighting() {
        let mut m = BTreeMap::new();
        for (stock, v) in [("A", 0.01), ("B", -0.01), ("C", 0.03)] {
            m.insert(stock.to_string(), BTreeMap::from([("d1".to_string(), v)]));
        }
        m.get_mut("A").unwrap().insert("d2".into(), 0.5);
        let s = equal_weighted_pnl(&m);
        assert!((s.values[0] - 0.01).abs() < 1e-15);
        assert_eq!(s.values[1], 0.5);
        assert_eq!(s.partial_dates, vec!["d2".to_string()]);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_correlation(&x, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        // Closed form: sxy = 5, sxx = 2, syy = 38/3.
        let expected = 5.0 / (2.0f64 * 38.0 / 3.0).sqrt();
        assert!((pearson_correlation(&x, &[2.0, 4.0, 7.0]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.9934).abs() < 1e-4);
        assert!(pearson_correlation(&x, &[1.0, 1.0, 1.0]).is_err());
    }
}
