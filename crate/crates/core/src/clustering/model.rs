use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::ArtifactMeta;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Fitted centroids. Field order is the on-disk JSON order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    pub dim: usize,
    pub centroids: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Row cap applied to the training set, if any.
    pub subsample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ArtifactMeta>,
}

impl ClusterModel {
    pub fn new(
        centroids: Vec<Vec<f64>>,
        inertia: f64,
        iterations_run: usize,
        seed: Option<u64>,
    ) -> Self {
        let dim = centroids.first().map_or(0, Vec::len);
        ClusterModel {
            version: MODEL_FORMAT_VERSION,
            k: centroids.len(),
            dim,
            centroids,
            seed,
            inertia,
            iterations_run,
            subsample: None,
            meta: None,
        }
    }

    /// Reorder clusters so that new index `i` is old index `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<ClusterModel> {
        let mut seen = vec![false; self.k];
        if order.len() != self.k || order.iter().any(|&o| o >= self.k || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::Clustering(format!(
                "{order:?} is not a permutation of {} clusters",
                self.k
            )));
        }
        let mut out = self.clone();
        out.centroids = order.iter().map(|&o| self.centroids[o].clone()).collect();
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::Clustering(format!(
                "unsupported model version {}",
                self.version
            )));
        }
        if self.k == 0 || self.centroids.len() != self.k {
            return Err(Error::Clustering("centroid count does not match K".into()));
        }
        if self.centroids.iter().any(|c| c.len() != self.dim) {
            return Err(Error::Clustering("centroid width does not match dim".into()));
        }
        if self.centroids.iter().flatten().any(|v| !v.is_finite()) || !(self.inertia >= 0.0) {
            return Err(Error::Clustering("non-finite model values".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<ClusterModel> {
        let model: ClusterModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<ClusterModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ClusterModel::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_order_is_fixed() {
        let model = ClusterModel::new(vec![vec![0.5, -1.0], vec![2.0, 3.0]], 1.25, 4, Some(7));
        let json = model.to_json().unwrap();
        let keys: Vec<usize> = [
            "\"version\"",
            "\"K\"",
            "\"dim\"",
            "\"centroids\"",
            "\"seed\"",
            "\"inertia\"",
            "\"iterations_run\"",
            "\"subsample\"",
        ]
        .iter()
        .map(|k| json.find(k).unwrap())
        .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ClusterModel::from_json(&json).unwrap(), model);
    }

    #[test]
    fn permutation_reorders_centroids() {
        let model = ClusterModel::new(vec![vec![0.0], vec![1.0], vec![2.0]], 0.0, 1, None);
        let p = model.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.centroids, vec![vec![2.0], vec![0.0], vec![1.0]]);
        assert!(model.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn rejects_malformed_documents() {
        let bad = r#"{"version":1,"K":2,"dim":1,"centroids":[[0.0]],"seed":null,"inertia":0.0,"iterations_run":1,"subsample":null}"#;
        assert!(ClusterModel::from_json(bad).is_err());
    }
}
