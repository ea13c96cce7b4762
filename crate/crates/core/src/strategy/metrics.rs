use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub annualization: f64,
    pub sigma_target: f64,
    /// Positions taken per day, one per bucket with a forward return.
    pub trades_per_day: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            annualization: 252.0,
            sigma_target: 0.15,
            trades_per_day: 12.0,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.annualization, self.sigma_target, self.trades_per_day]
            .iter()
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(Error::Config(
                "annualization, sigma_target and trades_per_day must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Performance table for one daily PnL series. Ratios whose denominator is
/// zero are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub days: usize,
    pub expected_return: f64,
    pub volatility: f64,
    pub downside_deviation: f64,
    pub max_drawdown: f64,
    pub sortino: Option<f64>,
    pub calmar: Option<f64>,
    pub hit_rate: f64,
    pub avg_profit_over_avg_loss: Option<f64>,
    /// Mean daily PnL per trade, in basis points.
    pub pnl_per_trade: f64,
    pub sharpe: Option<f64>,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard deviation with the `n - 1` divisor.
pub fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Scale `series` so its annualized sample volatility equals the target.
pub fn vol_target(series: &[f64], config: &MetricsConfig) -> Result<Vec<f64>> {
    let sd = sample_std(series);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Undefined(
            "cannot volatility-target a series with zero or undefined spread".into(),
        ));
    }
    let factor = config.sigma_target / (sd * config.annualization.sqrt());
    Ok(series.iter().map(|v| v * factor).collect())
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0 && den.is_finite()).then(|| num / den)
}

pub fn metrics(series: &[f64], config: &MetricsConfig) -> Result<MetricsReport> {
    if series.len() < 2 {
        return Err(Error::Undefined(format!(
            "metrics need at least two days, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Undefined("non-finite PnL value".into()));
    }
    let ann = config.annualization;
    let m = mean(series);
    let sd = sample_std(series);
    let downside =
        (series.iter().map(|&v| v.min(0.0).powi(2)).sum::<f64>() / series.len() as f64).sqrt()
            * ann.sqrt();
    let mut cum = 0.0f64;
    let mut peak = 0.0f64;
    let mut max_drawdown = 0.0f64;
    for v in series {
        cum += v;
        peak = peak.max(cum);
        max_drawdown = max_drawdown.min(cum - peak);
    }
    let wins: Vec<f64> = series.iter().copied().filter(|&v| v > 0.0).collect();
    let losses: Vec<f64> = series.iter().copied().filter(|&v| v < 0.0).collect();
    let avg_ratio = if wins.is_empty() || losses.is_empty() {
        None
    } else {
        ratio(mean(&wins), mean(&losses).abs())
    };
    let expected_return = m * ann;
    Ok(MetricsReport {
        days: series.len(),
        expected_return,
        volatility: sd * ann.sqrt(),
        downside_deviation: downside,
        max_drawdown,
        sortino: ratio(expected_return, downside),
        calmar: ratio(expected_return, max_drawdown.abs()),
        hit_rate: wins.len() as f64 / series.len() as f64,
        avg_profit_over_avg_loss: avg_ratio,
        pnl_per_trade: m / config.trades_per_day * 1e4,
        sharpe: ratio(m, sd).map(|r| r * ann.sqrt()),
    })
}
