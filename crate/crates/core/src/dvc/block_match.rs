//! Block-matching digital volume correlation.
//!
//! Each node compares a cubic block of the reference volume against every
//! integer shift of the deformed volume within the search radius using
//! zero-normalized cross-correlation. The best shift is seeded with a
//! three-point parabola per axis and then refined by Gauss-Newton on the
//! zero-normalized sum of squared differences, which avoids the pull toward
//! integer shifts that the parabola alone shows.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{DisplacementField, NodeGrid};
use crate::error::{Error, Result};
use crate::volume::LabeledVolume;

/// Peaks this close to 1 are exact integer matches and skip refinement.
const EXACT_MATCH: f64 = 1.0 - 1e-9;
const REFINE_ITERATIONS: usize = 20;
const REFINE_STEP_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMatchParams {
    /// Block edge length in voxels.
    pub block: usize,
    /// Node spacing in voxels.
    pub stride: usize,
    /// Search radius in voxels along each axis.
    pub search: usize,
}

impl Default for BlockMatchParams {
    fn default() -> Self {
        BlockMatchParams { block: 11, stride: 4, search: 2 }
    }
}

/// Node lattice for a volume. Blocks start `search` voxels in from each face
/// and step by `stride` while the block plus its full search window fits, so
/// every node sees the complete set of candidate shifts.
pub fn node_grid(dims: [usize; 3], params: &BlockMatchParams) -> Result<NodeGrid> {
    let footprint = params.block + 2 * params.search;
    if footprint > dims.iter().copied().min().unwrap_or(0) {
        return Err(Error::BlockExceedsVolume);
    }
    let half = (params.block - 1) as f64 / 2.0;
    Ok(NodeGrid {
        dims: dims.map(|n| (n - footprint) / params.stride + 1),
        origin: [params.search as f64 + half; 3],
        stride: [params.stride; 3],
    })
}

pub fn block_match(
    reference: &LabeledVolume,
    deformed: &LabeledVolume,
    params: &BlockMatchParams,
) -> Result<DisplacementField> {
    if !reference.same_grid(deformed) {
        return Err(Error::invalid("reference and deformed volumes differ in dims or spacing"));
    }
    if params.block < 5 {
        return Err(Error::invalid("block must be at least 5 voxels"));
    }
    if params.search < 1 || params.stride < 1 {
        return Err(Error::invalid("search radius and stride must be >= 1"));
    }
    let grid = node_grid(reference.dims(), params)?;
    let matcher = Matcher::new(reference, deformed, params);
    let results: Vec<([f64; 3], f64)> = (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let c = grid.coords(node);
            matcher.match_block(c.map(|i| params.search + i * params.stride))
        })
        .collect();
    let (vectors, confidence) = results.into_iter().unzip();
    DisplacementField::new(grid, vectors, confidence)
}

struct Matcher<'a> {
    reference: &'a LabeledVolume,
    deformed: &'a LabeledVolume,
    block: usize,
    search: isize,
}

impl<'a> Matcher<'a> {
    fn new(reference: &'a LabeledVolume, deformed: &'a LabeledVolume, p: &BlockMatchParams) -> Self {
        Matcher { reference, deformed, block: p.block, search: p.search as isize }
    }

    fn read_block(vol: &LabeledVolume, lo: [usize; 3], b: usize, out: &mut Vec<f64>) {
        out.clear();
        for z in lo[2]..lo[2] + b {
            for y in lo[1]..lo[1] + b {
                let row = vol.index(lo[0], y, z);
                out.extend(vol.intensity()[row..row + b].iter().map(|&v| v as f64));
            }
        }
    }

    fn match_block(&self, lo: [usize; 3]) -> ([f64; 3], f64) {
        let b = self.block;
        let n = (b * b * b) as f64;
        let tiny = 1e-12 * n;

        let mut reference = Vec::with_capacity(b * b * b);
        Self::read_block(self.reference, lo, b, &mut reference);
        let mean = reference.iter().sum::<f64>() / n;
        reference.iter_mut().for_each(|v| *v -= mean);
        let ss_ref: f64 = reference.iter().map(|v| v * v).sum();
        if ss_ref <= tiny {
            return ([0.0; 3], 0.0);
        }

        let s = self.search;
        let w = (2 * s + 1) as usize;
        let dims = self.deformed.dims();
        let mut scores = vec![f64::NAN; w * w * w];
        let mut candidate = Vec::with_capacity(b * b * b);
        let mut best: Option<(usize, f64)> = None;
        for dz in -s..=s {
            for dy in -s..=s {
                for dx in -s..=s {
                    let d = [dx, dy, dz];
                    let mut shifted = [0usize; 3];
                    let inside = (0..3).all(|a| {
                        let l = lo[a] as isize + d[a];
                        shifted[a] = l.max(0) as usize;
                        l >= 0 && l as usize + b <= dims[a]
                    });
                    if !inside {
                        continue;
                    }
                    Self::read_block(self.deformed, shifted, b, &mut candidate);
                    let (mut sum, mut sum_sq, mut cross) = (0.0, 0.0, 0.0);
                    for (r, &v) in reference.iter().zip(&candidate) {
                        sum += v;
                        sum_sq += v * v;
                        cross += r * v;
                    }
                    let ss_def = sum_sq - sum * sum / n;
                    let ncc = if ss_def <= tiny {
                        0.0
                    } else {
                        (cross / (ss_ref * ss_def).sqrt()).clamp(-1.0, 1.0)
                    };
                    let slot = ((dz + s) as usize * w + (dy + s) as usize) * w + (dx + s) as usize;
                    scores[slot] = ncc;
                    if best.is_none_or(|(_, top)| ncc > top) {
                        best = Some((slot, ncc));
                    }
                }
            }
        }
        let Some((slot, peak)) = best else {
            return ([0.0; 3], 0.0);
        };
        let peak_idx = [slot % w, (slot / w) % w, slot / (w * w)];
        let mut u = peak_idx.map(|i| i as f64 - s as f64);
        if peak < EXACT_MATCH {
            let start = u;
            for (a, v) in u.iter_mut().enumerate() {
                *v += subvoxel_offset(&scores, w, peak_idx, a);
            }
            if let Some(r) = self.refine(lo, &reference, ss_ref, u) {
                if (0..3).all(|a| (r[a] - start[a]).abs() <= 1.0) {
                    u = r;
                }
            }
        }
        (u, peak)
    }

    /// Inverse-compositional Gauss-Newton for a pure translation. `reference`
    /// is the zero-mean reference block. Returns `None` if a sample leaves the
    /// volume or the block has no usable gradient.
    fn refine(&self, lo: [usize; 3], reference: &[f64], ss_ref: f64, mut u: [f64; 3]) -> Option<[f64; 3]> {
        let b = self.block;
        let r = self.reference;
        let mut grads = Vec::with_capacity(reference.len());
        let mut hessian = Matrix3::zeros();
        for z in lo[2]..lo[2] + b {
            for y in lo[1]..lo[1] + b {
                for x in lo[0]..lo[0] + b {
                    let d = |dx: isize, dy: isize, dz: isize| {
                        let at = |o: isize, i: usize| (i as isize + o) as usize;
                        r.intensity_at(at(dx, x), at(dy, y), at(dz, z)) as f64
                    };
                    let g = Vector3::new(
                        (d(1, 0, 0) - d(-1, 0, 0)) / 2.0,
                        (d(0, 1, 0) - d(0, -1, 0)) / 2.0,
                        (d(0, 0, 1) - d(0, 0, -1)) / 2.0,
                    );
                    hessian += g * g.transpose();
                    grads.push(g);
                }
            }
        }
        let inverse = hessian.try_inverse()?;
        let norm_ref = ss_ref.sqrt();
        let n = reference.len() as f64;
        let mut warped = Vec::with_capacity(reference.len());
        let dims = self.deformed.dims();
        let data = self.deformed.intensity();
        for _ in 0..REFINE_ITERATIONS {
            // one translation shares its trilinear weights across the block
            let mut base = [0usize; 3];
            let mut frac = [0.0; 3];
            for a in 0..3 {
                let f = u[a].floor();
                let start = lo[a] as f64 + f;
                if !(start >= 0.0 && start as usize + b < dims[a]) {
                    return None;
                }
                base[a] = start as usize;
                frac[a] = u[a] - f;
            }
            let step_y = dims[0];
            let step_z = dims[0] * dims[1];
            let mut taps = [(0usize, 0.0f64); 8];
            for (t, tap) in taps.iter_mut().enumerate() {
                let (dx, dy, dz) = (t & 1, (t >> 1) & 1, t >> 2);
                let w = |a: usize, d: usize| if d == 0 { 1.0 - frac[a] } else { frac[a] };
                *tap = (dx + dy * step_y + dz * step_z, w(0, dx) * w(1, dy) * w(2, dz));
            }
            warped.clear();
            for z in 0..b {
                for y in 0..b {
                    let row = self.deformed.index(base[0], base[1] + y, base[2] + z);
                    for x in 0..b {
                        let at = row + x;
                        warped.push(taps.iter().map(|&(o, w)| w * data[at + o] as f64).sum());
                    }
                }
            }
            let mean = warped.iter().sum::<f64>() / n;
            let ss: f64 = warped.iter().map(|v| (v - mean) * (v - mean)).sum();
            if !(ss > 0.0) {
                return None;
            }
            let scale = norm_ref / ss.sqrt();
            let mut rhs = Vector3::zeros();
            for ((f, g), grad) in reference.iter().zip(&warped).zip(&grads) {
                rhs += grad * (f - scale * (g - mean));
            }
            let step = -(inverse * rhs);
            for a in 0..3 {
                u[a] -= step[a];
            }
            if !step.iter().all(|s| s.is_finite()) {
                return None;
            }
            if step.norm() < REFINE_STEP_TOL {
                break;
            }
        }
        Some(u)
    }
}

/// Vertex of the parabola through the peak and its two neighbours on `axis`,
/// or 0 when a neighbour is missing or the samples are not a maximum.
fn subvoxel_offset(scores: &[f64], w: usize, peak: [usize; 3], axis: usize) -> f64 {
    if peak[axis] == 0 || peak[axis] + 1 == w {
        return 0.0;
    }
    let at = |delta: isize| {
        let mut p = peak;
        p[axis] = (p[axis] as isize + delta) as usize;
        scores[(p[2] * w + p[1]) * w + p[0]]
    };
    let (minus, centre, plus) = (at(-1), at(0), at(1));
    if minus.is_nan() || plus.is_nan() {
        return 0.0;
    }
    let curvature = minus - 2.0 * centre + plus;
    if curvature >= 0.0 {
        return 0.0;
    }
    ((minus - plus) / (2.0 * curvature)).clamp(-0.5, 0.5)
}
