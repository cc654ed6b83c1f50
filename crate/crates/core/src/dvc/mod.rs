//! Displacement tracking between baseline and IOP-elevated volumes, and the
//! strain measures derived from it.

mod block_match;
mod field;
mod smooth;
mod strain;

pub use block_match::{block_match, node_grid, BlockMatchParams};
pub use field::{DisplacementField, NodeGrid, StrainField, SymTensor};
pub use smooth::{fill_low_confidence, gaussian_kernel, reflect, smooth_displacement};
pub use strain::{attach_strain, effective_strain, strain_tensor};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::volume::LabeledVolume;

/// Nodes below this NCC peak are re-interpolated from their neighbours
/// before differentiation.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DvcConfig {
    pub block: usize,
    pub stride: usize,
    pub search: usize,
    /// Gaussian smoothing of the displacement lattice, in nodes.
    pub smooth_sigma: f64,
    pub min_confidence: f64,
}

impl Default for DvcConfig {
    fn default() -> Self {
        let bm = BlockMatchParams::default();
        DvcConfig {
            block: bm.block,
            stride: bm.stride,
            search: bm.search,
            smooth_sigma: 1.0,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
        }
    }
}

impl DvcConfig {
    pub fn block_params(&self) -> BlockMatchParams {
        BlockMatchParams { block: self.block, stride: self.stride, search: self.search }
    }
}

/// Block matching, low-confidence infill, smoothing and strain in one call.
/// Returns the raw matched field alongside the strain derived from the
/// cleaned field.
pub fn track(
    reference: &LabeledVolume,
    deformed: &LabeledVolume,
    cfg: &DvcConfig,
) -> Result<(DisplacementField, StrainField)> {
    let raw = block_match(reference, deformed, &cfg.block_params())?;
    let filled = fill_low_confidence(&raw, cfg.min_confidence);
    let smoothed = smooth_displacement(&filled, cfg.smooth_sigma)?;
    let strain = strain_tensor(&smoothed, reference.spacing())?;
    Ok((raw, strain))
}
