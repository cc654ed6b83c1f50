//! Forward and reverse passes.
//!
//! Every point goes through the same stack of affine + ReLU layers, the
//! per-channel maximum over points forms the global feature, and an MLP head
//! ends in 52 sigmoids. In the reverse pass the pooled gradient reaches only
//! the argmax point of each channel (lowest index on ties), so only those rows
//! are propagated back through the encoder.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use super::loss::{bce_logit_grad, bce_loss};
use super::params::{ModelParams, INPUT_FEATURES, VF_POINTS};
use crate::error::{Error, Result};

/// Flat gradient vector with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Gradients(vec![0.0; len])
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().for_each(|g| *g *= s);
    }
}

struct Trace {
    /// Post-ReLU activations of each encoder layer (n × width).
    encoder: Vec<Array2<f64>>,
    argmax: Vec<usize>,
    pooled: Array1<f64>,
    /// Post-activation outputs of each hidden head layer.
    head: Vec<Array1<f64>>,
    probs: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

fn check_input(features: &ArrayView2<f64>) -> Result<()> {
    if features.nrows() == 0 {
        return Err(Error::EmptyCloud);
    }
    if features.ncols() != INPUT_FEATURES {
        return Err(Error::LengthMismatch { expected: INPUT_FEATURES, actual: features.ncols() });
    }
    Ok(())
}

fn run(params: &ModelParams, features: ArrayView2<f64>) -> Trace {
    let mut encoder: Vec<Array2<f64>> = Vec::with_capacity(params.encoder_layers().len());
    for layer in params.encoder_layers() {
        let input = encoder.last().map_or(features, |a| a.view());
        let mut z = input.dot(&params.weight(layer));
        z += &params.bias(layer);
        z.mapv_inplace(|v| v.max(0.0));
        encoder.push(z);
    }
    let last = encoder.last().expect("encoder is non-empty");
    let width = last.ncols();
    let mut argmax = vec![0usize; width];
    let mut pooled = last.row(0).to_owned();
    for (r, row) in last.outer_iter().enumerate().skip(1) {
        for c in 0..width {
            if row[c] > pooled[c] {
                pooled[c] = row[c];
                argmax[c] = r;
            }
        }
    }

    let head_layers = params.head_layers();
    let mut head: Vec<Array1<f64>> = Vec::with_capacity(head_layers.len());
    let mut logits = Array1::zeros(0);
    for (i, layer) in head_layers.iter().enumerate() {
        let input = head.last().unwrap_or(&pooled);
        let z = input.dot(&params.weight(layer)) + params.bias(layer);
        if i + 1 == head_layers.len() {
            logits = z;
        } else {
            head.push(z.mapv(|v| v.max(0.0)));
        }
    }
    let probs = logits.iter().map(|&v| sigmoid(v)).collect();
    Trace { encoder, argmax, pooled, head, probs }
}

/// Defect probabilities for the 52 visual field points; features are `n × 5`.
pub fn forward(params: &ModelParams, features: ArrayView2<f64>) -> Result<Vec<f64>> {
    check_input(&features)?;
    Ok(run(params, features).probs)
}

/// Loss and exact gradient of `bce_loss(forward(features), labels)`.
pub fn backward(params: &ModelParams, features: ArrayView2<f64>, labels: &[u8]) -> Result<(f64, Gradients)> {
    check_input(&features)?;
    if labels.len() != VF_POINTS {
        return Err(Error::LengthMismatch { expected: VF_POINTS, actual: labels.len() });
    }
    let trace = run(params, features);
    let loss = bce_loss(&trace.probs, labels)?;
    let mut grads = Gradients::zeros(params.len());

    // head, last layer first
    let head_layers = params.head_layers();
    let mut delta = Array1::from(bce_logit_grad(&trace.probs, labels));
    for (i, layer) in head_layers.iter().enumerate().rev() {
        let input = if i == 0 { &trace.pooled } else { &trace.head[i - 1] };
        {
            let gw = &mut grads.0[layer.weight_offset..layer.weight_offset + layer.weight_len()];
            for (r, &x) in input.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let row = &mut gw[r * layer.fan_out..(r + 1) * layer.fan_out];
                for (g, d) in row.iter_mut().zip(delta.iter()) {
                    *g += x * d;
                }
            }
            let gb = &mut grads.0[layer.bias_offset..layer.bias_offset + layer.fan_out];
            for (g, d) in gb.iter_mut().zip(delta.iter()) {
                *g += d;
            }
        }
        let mut upstream = params.weight(layer).dot(&delta);
        if i > 0 {
            // ReLU mask of the hidden layer feeding this one
            upstream.zip_mut_with(&trace.head[i - 1], |g, &a| {
                if a <= 0.0 {
                    *g = 0.0
                }
            });
        }
        delta = upstream;
    }

    // pooled gradient lands on the argmax row of each channel
    let last = trace.encoder.last().expect("encoder is non-empty");
    let mut rows: Vec<usize> = trace
        .argmax
        .iter()
        .enumerate()
        .filter(|&(c, &r)| delta[c] != 0.0 && last[(r, c)] > 0.0)
        .map(|(_, &r)| r)
        .collect();
    rows.sort_unstable();
    rows.dedup();
    if rows.is_empty() {
        return Ok((loss, grads));
    }
    let slot = |r: usize| rows.binary_search(&r).expect("row collected above");
    let mut d_z = Array2::<f64>::zeros((rows.len(), last.ncols()));
    for (c, &r) in trace.argmax.iter().enumerate() {
        if delta[c] != 0.0 && last[(r, c)] > 0.0 {
            d_z[(slot(r), c)] = delta[c];
        }
    }

    let enc = params.encoder_layers();
    for l in (0..enc.len()).rev() {
        let layer = &enc[l];
        let input = if l == 0 {
            features.select(Axis(0), &rows)
        } else {
            trace.encoder[l - 1].select(Axis(0), &rows)
        };
        let gw = input.t().dot(&d_z);
        for (g, v) in
            grads.0[layer.weight_offset..layer.weight_offset + layer.weight_len()].iter_mut().zip(gw.iter())
        {
            *g += v;
        }
        let gb = d_z.sum_axis(Axis(0));
        for (g, v) in grads.0[layer.bias_offset..layer.bias_offset + layer.fan_out].iter_mut().zip(gb.iter())
        {
            *g += v;
        }
        if l > 0 {
            let mut d_a = d_z.dot(&params.weight(layer).t());
            d_a.zip_mut_with(&input, |g, &a| {
                if a <= 0.0 {
                    *g = 0.0
                }
            });
            d_z = d_a;
        }
    }
    Ok((loss, grads))
}

/// Summed loss and gradient over a batch. Samples may be evaluated in
/// parallel; the reduction runs in sample order.
pub fn batch_gradient(params: &ModelParams, batch: &[(ArrayView2<f64>, &[u8])]) -> Result<(f64, Gradients)> {
    let parts: Vec<Result<(f64, Gradients)>> =
        batch.par_iter().map(|(x, y)| backward(params, x.view(), y)).collect();
    let mut total = 0.0;
    let mut grads = Gradients::zeros(params.len());
    for part in parts {
        let (loss, g) = part?;
        total += loss;
        grads.add_assign(&g);
    }
    Ok((total, grads))
}
