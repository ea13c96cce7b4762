use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Directional,
    Opportunistic,
    MarketMaking,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Directional, Role::Opportunistic, Role::MarketMaking];
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Directional => "directional",
            Role::Opportunistic => "opportunistic",
            Role::MarketMaking => "market_making",
        })
    }
}

/// Per-cluster correlations of one stock's OFI with CONR and FREB, as
/// `[size, count]`. `None` marks an undefined correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockCorrelations {
    pub stock: String,
    pub conr: Vec<[Option<f64>; 2]>,
    pub freb: Vec<[Option<f64>; 2]>,
}

/// Consensus roles of the fitted clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleMap {
    /// Role of each original cluster index.
    pub roles: Vec<Role>,
    /// `order[i]` is the original cluster that becomes `phi{i+1}`:
    /// directional, opportunistic, market-making.
    pub order: Vec<usize>,
    /// Per-stock role of each original cluster.
    pub votes: BTreeMap<String, Vec<Role>>,
    /// Per-cluster vote counts in role order.
    pub counts: Vec<[usize; 3]>,
    /// Notes on every tie or conflict that needed a tie-break.
    pub tie_breaks: Vec<String>,
}

impl RoleMap {
    pub fn cluster_for(&self, role: Role) -> usize {
        self.order[role as usize]
    }
}

fn score(pair: &[Option<f64>; 2]) -> f64 {
    pair.iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn argmax(candidates: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in candidates {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn stock_vote(c: &StockCorrelations, k: usize) -> Result<Vec<Role>> {
    if c.conr.len() != k || c.freb.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: c.conr.len().min(c.freb.len()),
        });
    }
    let dir = argmax((0..k).map(|i| (i, score(&c.conr[i])))).expect("k > 0");
    let opp = argmax((0..k).filter(|&i| i != dir).map(|i| (i, score(&c.freb[i])))).expect("k > 1");
    Ok((0..k)
        .map(|i| match i {
            _ if i == dir => Role::Directional,
            _ if i == opp => Role::Opportunistic,
            _ => Role::MarketMaking,
        })
        .collect())
}

/// Vote a role for each cluster per stock, then take the per-cluster mode.
///
/// When the modes do not cover the three roles exactly once, roles are
/// filled in order (directional, opportunistic, market-making), each going
/// to the unassigned cluster with the most votes for it, lowest index first.
pub fn assign_roles(stocks: &[StockCorrelations]) -> Result<RoleMap> {
    const K: usize = 3;
    if stocks.is_empty() {
        return Err(Error::Undefined("no stocks to assign roles from".into()));
    }
    let mut votes = BTreeMap::new();
    let mut counts = vec![[0usize; 3]; K];
    for c in stocks {
        let vote = stock_vote(c, K)?;
        for (cluster, role) in vote.iter().enumerate() {
            counts[cluster][*role as usize] += 1;
        }
        votes.insert(c.stock.clone(), vote);
    }

    let mut tie_breaks = Vec::new();
    let modes: Vec<Role> = counts
        .iter()
        .enumerate()
        .map(|(cluster, row)| {
            let top = *row.iter().max().expect("three roles");
            let tied: Vec<Role> = Role::ALL.into_iter().filter(|r| row[*r as usize] == top).collect();
            if tied.len() > 1 {
                tie_breaks.push(format!(
                    "cluster {cluster}: mode tie between {tied:?}, took {}",
                    tied[0]
                ));
            }
            tied[0]
        })
        .collect();

    let mut roles = modes.clone();
    let mut sorted = modes.clone();
    sorted.sort();
    if sorted != Role::ALL {
        tie_breaks.push(format!(
            "modes {modes:?} are not one role per cluster; assigned by vote count"
        ));
        let mut taken = [false; K];
        for role in Role::ALL {
            let c = argmax(
                (0..K)
                    .filter(|&c| !taken[c])
                    .map(|c| (c, counts[c][role as usize] as f64)),
            )
            .expect("a cluster is left");
            taken[c] = true;
            roles[c] = role;
        }
    }
    let order = Role::ALL
        .iter()
        .map(|r| roles.iter().position(|x| x == r).expect("bijection"))
        .collect();
    Ok(RoleMap {
        roles,
        order,
        votes,
        counts,
        tie_breaks,
    })
}
