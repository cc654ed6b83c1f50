use ndarray::{ArrayView1, ArrayView2};
use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-point input features: x, y, z, thickness, effective strain.
pub const INPUT_FEATURES: usize = 5;
/// Points of the 24-2 visual field pattern.
pub const VF_POINTS: usize = 52;

/// Layer widths: a shared per-point encoder followed by the global head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub encoder: Vec<usize>,
    pub head: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture { encoder: vec![64, 64, 128, 256], head: vec![128, VF_POINTS] }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.head.is_empty() {
            return Err(Error::invalid("architecture needs at least one encoder and one head layer"));
        }
        if self.encoder.iter().chain(&self.head).any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be > 0"));
        }
        if self.head.last() != Some(&VF_POINTS) {
            return Err(Error::invalid(format!("final layer width must be {VF_POINTS}")));
        }
        Ok(())
    }

    /// (fan_in, fan_out) for every affine layer, encoder first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let widths: Vec<usize> = std::iter::once(INPUT_FEATURES)
            .chain(self.encoder.iter().copied())
            .chain(self.head.iter().copied())
            .collect();
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn pooled_width(&self) -> usize {
        *self.encoder.last().expect("validated architecture")
    }
}

/// Placement of one affine layer inside the flat parameter vector. Weights are
/// row-major `fan_in × fan_out`, followed by `fan_out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerLayout {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerLayout {
    pub fn weight_len(&self) -> usize {
        self.fan_in * self.fan_out
    }
}

pub fn layout(arch: &Architecture) -> (Vec<LayerLayout>, usize) {
    let mut offset = 0;
    let layers = arch
        .layer_shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let l = LayerLayout {
                fan_in,
                fan_out,
                weight_offset: offset,
                bias_offset: offset + fan_in * fan_out,
            };
            offset = l.bias_offset + fan_out;
            l
        })
        .collect();
    (layers, offset)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    layers: Vec<LayerLayout>,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn from_values(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        let (layers, total) = layout(&arch);
        if values.len() != total {
            return Err(Error::LengthMismatch { expected: total, actual: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(Self { arch, layers, values })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[LayerLayout] {
        &self.layers
    }

    pub fn encoder_layers(&self) -> &[LayerLayout] {
        &self.layers[..self.arch.encoder.len()]
    }

    pub fn head_layers(&self) -> &[LayerLayout] {
        &self.layers[self.arch.encoder.len()..]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self, layer: &LayerLayout) -> ArrayView2<'_, f64> {
        let w = &self.values[layer.weight_offset..layer.weight_offset + layer.weight_len()];
        ArrayView2::from_shape((layer.fan_in, layer.fan_out), w).expect("layout matches storage")
    }

    pub fn bias(&self, layer: &LayerLayout) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.values[layer.bias_offset..layer.bias_offset + layer.fan_out])
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<ModelParams> {
    arch.validate()?;
    let (layers, total) = layout(arch);
    let mut values = vec![0.0; total];
    for l in &layers {
        let limit = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        for w in &mut values[l.weight_offset..l.weight_offset + l.weight_len()] {
            *w = dist.sample(rng);
        }
    }
    ModelParams::from_values(arch.clone(), values)
}
