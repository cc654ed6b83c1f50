use crate::error::{Error, Result};

/// Probabilities are clipped to `[BCE_EPS, 1 - BCE_EPS]` before taking logs.
pub const BCE_EPS: f64 = 1e-7;

/// Mean binary cross-entropy over the visual field points.
pub fn bce_loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), actual: probs.len() });
    }
    if probs.is_empty() {
        return Err(Error::invalid("empty prediction"));
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// d(mean BCE)/d(logit) for sigmoid outputs; zero where the clip is active.
pub(crate) fn bce_logit_grad(probs: &[f64], labels: &[u8]) -> Vec<f64> {
    let n = probs.len() as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| if p <= BCE_EPS || p >= 1.0 - BCE_EPS { 0.0 } else { (p - y as f64) / n })
        .collect()
}
