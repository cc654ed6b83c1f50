use super::kdtree::KdTree;
use crate::error::{Error, Result};
use nalgebra::Point3;

/// Neighbour count for strain interpolation onto cloud points.
pub const DEFAULT_KNN_K: usize = 5;

/// Scalar samples at scattered positions, indexed for k-nearest queries.
#[derive(Debug)]
pub struct ScalarSamples {
    tree: KdTree,
    values: Vec<f64>,
}

impl ScalarSamples {
    pub fn new(samples: &[(Point3<f64>, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("knn interpolation needs at least one sample"));
        }
        let tree = KdTree::new(samples.iter().map(|(p, _)| [p.x, p.y, p.z]).collect());
        Ok(Self { tree, values: samples.iter().map(|&(_, v)| v).collect() })
    }

    /// Unweighted mean of the `k` nearest sample values (all samples if fewer).
    /// Neighbours are summed closest first; equidistant samples go by index.
    pub fn interpolate(&self, query: &Point3<f64>, k: usize) -> f64 {
        let nn = self.tree.knn(&[query.x, query.y, query.z], k);
        let sum: f64 = nn.iter().map(|n| self.values[n.index]).sum();
        sum / nn.len() as f64
    }
}

pub fn knn_interpolate(query: &[Point3<f64>], samples: &[(Point3<f64>, f64)], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let index = ScalarSamples::new(samples)?;
    Ok(query.iter().map(|q| index.interpolate(q, k)).collect())
}
