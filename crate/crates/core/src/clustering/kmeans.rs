use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::ClusterModel;
use super::points::{squared_distance, PointSet};
use crate::error::{Error, Result};

const PARALLEL_MIN_POINTS: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// K-means++ restarts; the lowest final inertia wins. Restart `r` seeds
    /// with `seed + r`.
    pub n_init: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 3,
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.n_init == 0 {
            return Err(Error::Config("n_init must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Init {
    PlusPlus { seed: u64 },
    Centroids(Vec<Vec<f64>>),
}

/// Result of a Lloyd run.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: ClusterModel,
    pub labels: Vec<usize>,
    /// Inertia after each assignment step, including the final one.
    pub inertia_history: Vec<f64>,
}

fn count_distinct_up_to(points: &PointSet, limit: usize) -> usize {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for row in points.rows() {
        // +0.0 and -0.0 are the same location
        seen.insert(row.iter().map(|v| (v + 0.0).to_bits()).collect());
        if seen.len() >= limit {
            break;
        }
    }
    seen.len()
}

/// D² seeding: the first centre is uniform over the points, each further
/// centre is drawn with probability proportional to its squared distance to
/// the nearest centre chosen so far.
pub fn kmeanspp_init(points: &PointSet, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::Clustering("k must be at least 1".into()));
    }
    points.check_finite()?;
    if count_distinct_up_to(points, k) < k {
        return Err(Error::Clustering(format!(
            "fewer than {k} distinct points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut centroids = vec![points.row(rng.random_range(0..n)).to_vec()];
    let mut nearest: Vec<f64> = points
        .rows()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut cumulative = 0.0;
        let mut chosen = None;
        for (i, d) in nearest.iter().enumerate() {
            cumulative += d;
            if cumulative > target && *d > 0.0 {
                chosen = Some(i);
                break;
            }
        }
        // rounding can leave `target` at the very top of the range
        let chosen = chosen
            .or_else(|| nearest.iter().rposition(|d| *d > 0.0))
            .expect("a point with positive distance exists");
        let centre = points.row(chosen).to_vec();
        for (d, p) in nearest.iter_mut().zip(points.rows()) {
            *d = d.min(squared_distance(p, &centre));
        }
        centroids.push(centre);
    }
    Ok(centroids)
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        // strict comparison keeps the lowest index on ties
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Labels and squared distances to the nearest centroid.
fn assign(points: &PointSet, centroids: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64]) {
    let dim = points.dim();
    let work = |(chunk, (lab, dist)): (&[f64], (&mut [usize], &mut [f64]))| {
        for ((p, l), d) in chunk.chunks_exact(dim).zip(lab.iter_mut()).zip(dist.iter_mut()) {
            let (j, dd) = nearest_centroid(p, centroids);
            *l = j;
            *d = dd;
        }
    };
    let rows_per_chunk = 4096;
    if points.len() >= PARALLEL_MIN_POINTS {
        points
            .as_slice()
            .par_chunks(rows_per_chunk * dim)
            .zip(
                labels
                    .par_chunks_mut(rows_per_chunk)
                    .zip(dists.par_chunks_mut(rows_per_chunk)),
            )
            .for_each(work);
    } else {
        points
            .as_slice()
            .chunks(rows_per_chunk * dim)
            .zip(
                labels
                    .chunks_mut(rows_per_chunk)
                    .zip(dists.chunks_mut(rows_per_chunk)),
            )
            .for_each(work);
    }
}

/// Lloyd iterations from the given initialization. K-means++ seeding is
/// repeated `n_init` times and the fit with the lowest inertia kept (ties to
/// the earliest restart); the model records the base seed.
pub fn kmeans_fit(points: &PointSet, config: &KMeansConfig, init: Init) -> Result<Fit> {
    config.validate()?;
    points.check_finite()?;
    if points.is_empty() {
        return Err(Error::Clustering("no points to cluster".into()));
    }
    let k = config.k;
    let dim = points.dim();
    let centroids = match init {
        Init::PlusPlus { seed } => {
            let mut best: Option<Fit> = None;
            for r in 0..config.n_init as u64 {
                let start = kmeanspp_init(points, k, seed.wrapping_add(r))?;
                let fit = lloyd(points, config, start, Some(seed));
                if best.as_ref().is_none_or(|b| fit.model.inertia < b.model.inertia) {
                    best = Some(fit);
                }
            }
            return Ok(best.expect("n_init >= 1"));
        }
        Init::Centroids(c) => {
            if c.len() != k {
                return Err(Error::Clustering(format!(
                    "{} initial centroids for k = {k}",
                    c.len()
                )));
            }
            if let Some(bad) = c.iter().find(|c| c.len() != dim) {
                return Err(Error::Dimension {
                    expected: dim,
                    got: bad.len(),
                });
            }
            c
        }
    };
    Ok(lloyd(points, config, centroids, None))
}

fn lloyd(points: &PointSet, config: &KMeansConfig, mut centroids: Vec<Vec<f64>>, seed: Option<u64>) -> Fit {
    let k = config.k;
    let dim = points.dim();
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        assign(points, &centroids, &mut labels, &mut dists);
        history.push(dists.iter().sum::<f64>());
        if iterations == config.max_iter {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.rows().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &c), old)| {
                if c == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / c as f64).collect()
                }
            })
            .collect();

        // empty clusters restart at the worst-served points
        let mut taken = vec![false; n];
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = (0..n)
                .filter(|&i| !taken[i])
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                });
            if let Some(i) = far {
                taken[i] = true;
                next[j] = points.row(i).to_vec();
            }
        }

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = next;
        if shift <= config.tol {
            assign(points, &centroids, &mut labels, &mut dists);
            history.push(dists.iter().sum::<f64>());
            break;
        }
    }

    let inertia = *history.last().expect("at least one assignment");
    Fit {
        model: ClusterModel::new(centroids, inertia, iterations, seed),
        labels,
        inertia_history: history,
    }
}

/// Fit with centroids taken from a reference model; cluster `j` descends
/// from reference centroid `j`.
pub fn base_initialize(
    reference: &ClusterModel,
    points: &PointSet,
    config: &KMeansConfig,
) -> Result<Fit> {
    if points.dim() != reference.dim {
        return Err(Error::Dimension {
            expected: reference.dim,
            got: points.dim(),
        });
    }
    let config = KMeansConfig {
        k: reference.k,
        ..*config
    };
    let mut fit = kmeans_fit(points, &config, Init::Centroids(reference.centroids.clone()))?;
    fit.model.seed = reference.seed;
    Ok(fit)
}

/// Nearest-centroid labels, lowest index on ties.
pub fn predict(model: &ClusterModel, points: &PointSet) -> Result<Vec<usize>> {
    if points.dim() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            got: points.dim(),
        });
    }
    let mut labels = vec![0; points.len()];
    let mut dists = vec![0.0; points.len()];
    assign(points, &model.centroids, &mut labels, &mut dists);
    Ok(labels)
}
