use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cloud::OnhPointCloud;
use crate::pointnet::{VisualFieldMap, INPUT_FEATURES};

/// One subject: an aligned, cropped, strain-attributed cloud and its field map.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub cloud: OnhPointCloud,
    pub labels: VisualFieldMap,
}

/// Per-feature mean and standard deviation, fitted on training clouds only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: [f64; INPUT_FEATURES],
    pub std: [f64; INPUT_FEATURES],
}

fn raw_features(cloud: &OnhPointCloud, i: usize) -> [f64; INPUT_FEATURES] {
    let p = cloud.points()[i];
    let strain = cloud.strain().map_or(0.0, |s| s[i]);
    [p.x, p.y, p.z, cloud.thickness()[i], strain]
}

impl FeatureStats {
    pub fn fit<'a>(clouds: impl IntoIterator<Item = &'a OnhPointCloud>) -> Self {
        let mut n = 0usize;
        let mut sum = [0.0; INPUT_FEATURES];
        let mut sum_sq = [0.0; INPUT_FEATURES];
        for cloud in clouds {
            for i in 0..cloud.len() {
                let f = raw_features(cloud, i);
                for k in 0..INPUT_FEATURES {
                    sum[k] += f[k];
                    sum_sq[k] += f[k] * f[k];
                }
                n += 1;
            }
        }
        let n = n.max(1) as f64;
        let mean = sum.map(|s| s / n);
        let mut std = [1.0; INPUT_FEATURES];
        for k in 0..INPUT_FEATURES {
            let var = (sum_sq[k] / n - mean[k] * mean[k]).max(0.0);
            if var > 1e-24 {
                std[k] = var.sqrt();
            }
        }
        FeatureStats { mean, std }
    }

    /// Standardized `n × 5` feature matrix. Without strain the last channel is zero.
    pub fn features(&self, cloud: &OnhPointCloud, use_strain: bool) -> Array2<f64> {
        let mut out = Array2::zeros((cloud.len(), INPUT_FEATURES));
        for i in 0..cloud.len() {
            let f = raw_features(cloud, i);
            for k in 0..INPUT_FEATURES {
                out[(i, k)] = (f[k] - self.mean[k]) / self.std[k];
            }
            if !use_strain {
                out[(i, INPUT_FEATURES - 1)] = 0.0;
            }
        }
        out
    }
}

/// Stable numeric tag for per-subject random streams.
pub fn id_tag(id: &str) -> u64 {
    // FNV-1a
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
