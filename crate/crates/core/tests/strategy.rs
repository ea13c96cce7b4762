use lobflow::flow::{ClusterScope, EventScope, Measure};
use lobflow::strategy::{
    assign_roles, metrics, sample_std, select_best_strategy, vol_target, Horizon, MetricsConfig,
    StockCorrelations, StrategySpec, TrainingRow,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SERIES: [f64; 10] = [0.012, -0.008, 0.005, 0.020, -0.015, -0.004, 0.009, 0.001, -0.011, 0.016];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn metrics_match_hand_computed_values() {
    // Worked out by hand at high precision for SERIES with 252 days a year
    // and 12 trades a day.
    let r = metrics(&SERIES, &MetricsConfig::default()).unwrap();
    let tol = 1e-10;
    assert!(close(r.expected_return, 0.63, tol));
    assert!(close(r.volatility, 0.188_610_710_194_304_71, tol));
    assert!(close(r.downside_deviation, 0.103_610_810_246_807_74, tol));
    assert!(close(r.max_drawdown, -0.02, tol));
    assert!(close(r.sortino.unwrap(), 6.080_446_610_728_153_8, tol));
    assert!(close(r.calmar.unwrap(), 31.5, tol));
    assert!(close(r.hit_rate, 0.6, tol));
    assert!(close(r.avg_profit_over_avg_loss.unwrap(), 1.105_263_157_894_736_8, tol));
    assert!(close(r.pnl_per_trade, 2.083_333_333_333_333_3, tol));
    assert!(close(r.sharpe.unwrap(), 3.340_213_285_613_424_7, tol));
}

#[test]
fn ratios_without_a_denominator_are_none() {
    let r = metrics(&[0.01, 0.02, 0.03], &MetricsConfig::default()).unwrap();
    assert_eq!(r.sortino, None);
    assert_eq!(r.calmar, None);
    assert_eq!(r.avg_profit_over_avg_loss, None);
    assert!(r.sharpe.is_some());
    assert_eq!(metrics(&[0.01, 0.01], &MetricsConfig::default()).unwrap().sharpe, None);
}

proptest! {
    #[test]
    fn vol_targeting_hits_the_target(values in prop::collection::vec(-1.0f64..1.0, 3..200)) {
        let cfg = MetricsConfig::default();
        prop_assume!(sample_std(&values) > 1e-9);
        let scaled = vol_target(&values, &cfg).unwrap();
        prop_assert!(close(sample_std(&scaled) * 252f64.sqrt(), 0.15, 1e-12));
    }

    #[test]
    fn sharpe_is_scale_invariant(
        values in prop::collection::vec(-1.0f64..1.0, 3..100),
        scales in prop::collection::vec(1e-4f64..1e4, 100),
    ) {
        let cfg = MetricsConfig::default();
        prop_assume!(sample_std(&values) > 1e-9);
        let base = metrics(&values, &cfg).unwrap().sharpe.unwrap();
        for c in scales {
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            let s = metrics(&scaled, &cfg).unwrap().sharpe.unwrap();
            prop_assert!((s - base).abs() <= 1e-9 * base.abs().max(1.0));
        }
    }

    #[test]
    fn roles_follow_a_cluster_permutation(
        corr in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 12), 1..8),
        perm_seed in any::<u64>(),
    ) {
        let stocks: Vec<StockCorrelations> = corr
            .iter()
            .enumerate()
            .map(|(i, v)| StockCorrelations {
                stock: format!("S{i}"),
                conr: (0..3).map(|c| [Some(v[2 * c]), Some(v[2 * c + 1])]).collect(),
                freb: (0..3).map(|c| [Some(v[6 + 2 * c]), Some(v[7 + 2 * c])]).collect(),
            })
            .collect();
        let base = assign_roles(&stocks).unwrap();
        prop_assume!(base.tie_breaks.is_empty());

        let mut perm = vec![0, 1, 2];
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        // New cluster j holds old cluster perm[j].
        let permuted: Vec<StockCorrelations> = stocks
            .iter()
            .map(|s| StockCorrelations {
                stock: s.stock.clone(),
                conr: perm.iter().map(|&o| s.conr[o]).collect(),
                freb: perm.iter().map(|&o| s.freb[o]).collect(),
            })
            .collect();
        let moved = assign_roles(&permuted).unwrap();
        for j in 0..3 {
            prop_assert_eq!(moved.roles[j], base.roles[perm[j]]);
        }
        let mut roles = base.roles.clone();
        roles.sort();
        prop_assert_eq!(roles, vec![
            lobflow::strategy::Role::Directional,
            lobflow::strategy::Role::Opportunistic,
            lobflow::strategy::Role::MarketMaking,
        ]);
    }

    #[test]
    fn selection_ignores_row_order(
        sharpes in prop::collection::vec(prop::option::weighted(0.9, -5.0f64..5.0), 8),
        shuffle_seed in any::<u64>(),
    ) {
        let scopes = [ClusterScope::Cluster(0), ClusterScope::Cluster(1), ClusterScope::Cluster(2), ClusterScope::All];
        let mut rows: Vec<TrainingRow> = Measure::ALL
            .into_iter()
            .flat_map(|m| scopes.map(move |c| (m, c)))
            .zip(&sharpes)
            .map(|((measure, cluster_scope), s)| TrainingRow {
                spec: StrategySpec { measure, cluster_scope, event_scope: EventScope::All, horizon: Horizon::Frnb },
                days: 60,
                sharpe: *s,
            })
            .collect();
        let best = select_best_strategy(&rows).unwrap();
        prop_assert!(!best.is_benchmark());
        let top = rows
            .iter()
            .filter(|r| !r.spec.is_benchmark())
            .map(|r| r.sharpe.unwrap_or(f64::NEG_INFINITY))
            .fold(f64::NEG_INFINITY, f64::max);
        let chosen = rows.iter().find(|r| r.spec == best).unwrap();
        prop_assert_eq!(chosen.sharpe.unwrap_or(f64::NEG_INFINITY), top);
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        prop_assert_eq!(select_best_strategy(&rows).unwrap(), best);
    }
}
