use serde::{Deserialize, Serialize};

use super::params::VF_POINTS;
use crate::error::{Error, Result};

/// Probability cut-off turning defect probabilities into labels.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Binary defect labels for the 52 points of a 24-2 field, optionally with
/// the predicted probabilities that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualFieldMap {
    pub labels: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

impl VisualFieldMap {
    pub fn new(labels: Vec<u8>, probs: Option<Vec<f64>>) -> Result<Self> {
        if labels.len() != VF_POINTS {
            return Err(Error::LengthMismatch { expected: VF_POINTS, actual: labels.len() });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::invalid("visual field labels must be 0 or 1"));
        }
        if let Some(p) = &probs {
            if p.len() != VF_POINTS {
                return Err(Error::LengthMismatch { expected: VF_POINTS, actual: p.len() });
            }
            if p.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
                return Err(Error::invalid("probabilities must lie strictly inside (0, 1)"));
            }
        }
        Ok(Self { labels, probs })
    }

    pub fn from_probs(probs: Vec<f64>, threshold: f64) -> Result<Self> {
        let labels = predict(&probs, threshold)?;
        Self::new(labels, Some(probs))
    }

    pub fn defect_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

/// Label 1 wherever the probability reaches the threshold.
pub fn predict(probs: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    Ok(probs.iter().map(|&p| (p >= threshold) as u8).collect())
}
