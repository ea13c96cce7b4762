//! The global steps of the train/test procedure, on in-memory data.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ClusteringConfig;
use crate::clustering::{base_initialize, kmeans_fit, ClusterModel, Init, PointSet};
use crate::error::{Error, Result};
use crate::flow::ClusterScope;
use crate::strategy::{
    assign_roles, evaluate_out_of_sample, select_best_strategy, stock_correlations,
    training_table, BacktestConfig, DaySignals, Evaluation, RoleMap, StockCorrelations,
    TrainingRow,
};

/// The configured reference stock, or one drawn with `seed`.
pub fn choose_reference(configured: Option<&str>, candidates: &[String], seed: u64) -> Result<String> {
    match configured {
        Some(r) if candidates.iter().any(|c| c == r) => Ok(r.to_string()),
        Some(r) => Err(Error::Clustering(format!("reference stock {r} has no training data"))),
        None => candidates
            .choose(&mut ChaCha8Rng::seed_from_u64(seed))
            .cloned()
            .ok_or_else(|| Error::Clustering("no stock has training data".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFits {
    pub reference: String,
    pub reference_model: ClusterModel,
    /// Base-initialized model of every stock, the reference included.
    pub models: BTreeMap<String, ClusterModel>,
}

/// K-means++ on the reference stock, then every stock refitted from the
/// reference centroids so cluster indices agree across stocks.
pub fn fit_models(
    points: &[(String, PointSet)],
    reference: &str,
    config: &ClusteringConfig,
    seed: u64,
) -> Result<ClusterFits> {
    let kmeans = config.kmeans();
    let capped: Vec<(&str, PointSet)> = points
        .iter()
        .enumerate()
        .map(|(i, (ticker, p))| {
            let p = match config.subsample {
                Some(cap) => p.subsample(cap, seed.wrapping_add(i as u64)),
                None => p.clone(),
            };
            (ticker.as_str(), p)
        })
        .collect();
    let reference_points = capped
        .iter()
        .find(|(t, _)| *t == reference)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::Clustering(format!("no points for reference stock {reference}")))?;
    let mut reference_model = kmeans_fit(reference_points, &kmeans, Init::PlusPlus { seed })?.model;
    reference_model.subsample = config.subsample;

    let mut models = BTreeMap::new();
    for (ticker, p) in &capped {
        let mut model = base_initialize(&reference_model, p, &kmeans)?.model;
        model.subsample = config.subsample;
        models.insert(ticker.to_string(), model);
    }
    Ok(ClusterFits {
        reference: reference.to_string(),
        reference_model,
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRoles {
    pub roles: RoleMap,
    pub correlations: Vec<StockCorrelations>,
}

/// Per-stock correlations over the training days and the consensus roles.
pub fn group_roles(train: &[DaySignals], k: usize) -> Result<GroupRoles> {
    let mut stocks: Vec<&str> = Vec::new();
    for d in train {
        if !stocks.contains(&d.stock.as_str()) {
            stocks.push(&d.stock);
        }
    }
    let correlations = stocks
        .iter()
        .map(|s| {
            let days: Vec<&DaySignals> = train.iter().filter(|d| d.stock == *s).collect();
            stock_correlations(s, &days, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupRoles {
        roles: assign_roles(&correlations)?,
        correlations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBacktest {
    /// Cluster `i` of the relabeled signals is original cluster `order[i]`.
    pub order: Vec<usize>,
    pub training: Vec<TrainingRow>,
    /// One per horizon and event scope.
    pub evaluations: Vec<Evaluation>,
}

/// Relabel clusters by role, rank every spec on the training days, pick the
/// best clustered spec per horizon and event scope and evaluate it against
/// the benchmarks on the test days.
pub fn backtest_group(
    train: &[DaySignals],
    test: &[DaySignals],
    roles: &RoleMap,
    k: usize,
    config: &BacktestConfig,
) -> Result<GroupBacktest> {
    let relabel = |days: &[DaySignals]| -> Vec<DaySignals> {
        days.iter().map(|d| d.relabeled(&roles.order)).collect()
    };
    let (train, test) = (relabel(train), relabel(test));
    let training = training_table(&train, k, config)?;
    let mut evaluations = Vec::new();
    for &horizon in &config.horizons {
        for &event_scope in &config.event_scopes {
            let rows: Vec<TrainingRow> = training
                .iter()
                .filter(|r| r.spec.horizon == horizon && r.spec.event_scope == event_scope)
                .cloned()
                .collect();
            let best = select_best_strategy(&rows)?;
            evaluations.push(evaluate_out_of_sample(best, &training, &test, config)?);
        }
    }
    Ok(GroupBacktest {
        order: roles.order.clone(),
        training,
        evaluations,
    })
}

impl GroupBacktest {
    /// Whether the selected spec's test Sharpe beats both benchmarks'.
    pub fn beats_benchmarks(evaluation: &Evaluation) -> bool {
        let Some(best) = evaluation.best.test.sharpe else {
            return false;
        };
        evaluation
            .benchmarks
            .iter()
            .all(|b| b.spec.cluster_scope == ClusterScope::All && b.test.sharpe.is_none_or(|s| best > s))
    }
}
