use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::DEFAULT_RESAMPLE_POINTS;
use crate::pointnet::{Architecture, DEFAULT_THRESHOLD};

pub const DEFAULT_FOLDS: usize = 5;
/// Two-sided significance level of the arm comparison.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
pub const TRAIN_FRACTION: f64 = 0.8;
pub const VAL_FRACTION: f64 = 0.1;
pub const TEST_FRACTION: f64 = 0.1;

/// Training and evaluation settings shared by both ablation arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    /// Largest angular sector removed by the random crop, in degrees.
    pub max_crop_deg: f64,
    pub threshold: f64,
    pub use_strain: bool,
    /// Points per cloud fed to the network.
    pub points: usize,
    pub arch: Architecture,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            folds: DEFAULT_FOLDS,
            epochs: 300,
            lr: 1e-3,
            batch: 8,
            max_crop_deg: 45.0,
            threshold: DEFAULT_THRESHOLD,
            use_strain: true,
            points: DEFAULT_RESAMPLE_POINTS,
            arch: Architecture::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid("folds must be >= 2"));
        }
        if self.epochs == 0 || self.batch == 0 || self.points == 0 {
            return Err(Error::invalid("epochs, batch and points must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be > 0"));
        }
        if !(0.0..=360.0).contains(&self.max_crop_deg) {
            return Err(Error::invalid("max_crop_deg must lie in [0, 360]"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("threshold must lie in (0, 1)"));
        }
        self.arch.validate()
    }

    pub fn hash(&self) -> String {
        hash_json(self)
    }

    /// Hash with the strain flag cleared; equal for the two arms of an ablation.
    pub fn comparison_hash(&self) -> String {
        RunConfig { use_strain: false, ..self.clone() }.hash()
    }
}

/// Hex SHA-256 of the compact JSON encoding.
pub fn hash_json<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_hash_ignores_strain_flag() {
        let a = RunConfig::default();
        let b = RunConfig { use_strain: false, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.comparison_hash(), b.comparison_hash());
        let c = RunConfig { lr: 2e-3, ..a.clone() };
        assert_ne!(a.comparison_hash(), c.comparison_hash());
    }

    #[test]
    fn validation() {
        RunConfig::default().validate().unwrap();
        assert!(RunConfig { threshold: 1.0, ..Default::default() }.validate().is_err());
        assert!(RunConfig { folds: 1, ..Default::default() }.validate().is_err());
        assert!(RunConfig { lr: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seed": 1, "epoch": 3}"#);
        assert!(err.is_err());
        let ok: RunConfig = serde_json::from_str(r#"{"seed": 9, "use_strain": false}"#).unwrap();
        assert_eq!(ok.seed, 9);
        assert_eq!(ok.epochs, 300);
    }
}
