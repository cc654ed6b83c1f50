//! Labeled OCT volumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel spacing (x lateral, y across B-scans, z axial) of the clinical scans, in mm.
pub const CLINICAL_SPACING_MM: [f64; 3] = [0.0115, 0.0351, 0.00387];

/// Segmented tissue groups. The numeric value is the on-disk label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Tissue {
    Background = 0,
    /// Retinal nerve fiber layer and prelamina.
    Rnfl = 1,
    /// Ganglion cell layer and inner plexiform layer.
    GclIpl = 2,
    /// All other retinal layers.
    OtherRetina = 3,
    /// Retinal pigment epithelium.
    Rpe = 4,
    /// OCT-visible lamina cribrosa.
    Lamina = 5,
}

impl Tissue {
    pub const FOREGROUND: [Tissue; 5] =
        [Tissue::Rnfl, Tissue::GclIpl, Tissue::OtherRetina, Tissue::Rpe, Tissue::Lamina];

    pub fn from_label(label: u8) -> Option<Tissue> {
        match label {
            0 => Some(Tissue::Background),
            1 => Some(Tissue::Rnfl),
            2 => Some(Tissue::GclIpl),
            3 => Some(Tissue::OtherRetina),
            4 => Some(Tissue::Rpe),
            5 => Some(Tissue::Lamina),
            _ => None,
        }
    }

    pub fn label(self) -> u8 {
        self as u8
    }
}

/// A 3D voxel grid with a tissue label and an intensity per voxel.
///
/// Storage is x-fastest: `index = x + nx * (y + ny * z)`. The z axis is axial,
/// with anterior tissue at smaller z.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVolume {
    dims: [usize; 3],
    spacing: [f64; 3],
    labels: Vec<u8>,
    intensity: Vec<f32>,
}

impl LabeledVolume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], labels: Vec<u8>, intensity: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid(format!("volume dims must all be >= 2, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("voxel spacing must be positive, got {spacing:?}")));
        }
        let n = dims[0] * dims[1] * dims[2];
        if labels.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: labels.len() });
        }
        if intensity.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: intensity.len() });
        }
        if let Some(bad) = labels.iter().find(|&&l| Tissue::from_label(l).is_none()) {
            return Err(Error::invalid(format!("label {bad} outside the tissue set")));
        }
        if intensity.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite intensity"));
        }
        Ok(Self { dims, spacing, labels, intensity })
    }

    /// An all-background volume with zero intensity.
    pub fn blank(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(dims, spacing, vec![0; n], vec![0.0; n])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize, z: usize) -> u8 {
        self.labels[self.index(x, y, z)]
    }

    #[inline]
    pub fn intensity_at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.intensity[self.index(x, y, z)]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn intensity(&self) -> &[f32] {
        &self.intensity
    }

    /// Mutable access for generators. Labels must stay inside the tissue set.
    pub fn labels_mut(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    pub fn intensity_mut(&mut self) -> &mut [f32] {
        &mut self.intensity
    }

    /// Physical position (mm) of a voxel center.
    #[inline]
    pub fn voxel_to_mm(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [x as f64 * self.spacing[0], y as f64 * self.spacing[1], z as f64 * self.spacing[2]]
    }

    pub fn same_grid(&self, other: &LabeledVolume) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    /// Trilinear intensity sample at a fractional voxel position; `None` outside the grid.
    pub fn sample_trilinear(&self, p: [f64; 3]) -> Option<f64> {
        let mut base = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let max = (self.dims[a] - 1) as f64;
            if !(p[a] >= 0.0 && p[a] <= max) {
                return None;
            }
            let f = p[a].floor();
            // the last plane interpolates toward itself
            let i = (f as usize).min(self.dims[a] - 2);
            base[a] = i;
            frac[a] = p[a] - i as f64;
        }
        let mut acc = 0.0;
        for dz in 0..2 {
            let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
            for dy in 0..2 {
                let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
                for dx in 0..2 {
                    let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
                    let w = wx * wy * wz;
                    if w != 0.0 {
                        acc += w * self.intensity_at(base[0] + dx, base[1] + dy, base[2] + dz) as f64;
                    }
                }
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_volumes() {
        assert!(LabeledVolume::blank([1, 4, 4], [1.0; 3]).is_err());
        assert!(LabeledVolume::blank([4, 4, 4], [1.0, 0.0, 1.0]).is_err());
        assert!(LabeledVolume::new([2, 2, 2], [1.0; 3], vec![6; 8], vec![0.0; 8]).is_err());
        assert!(LabeledVolume::new([2, 2, 2], [1.0; 3], vec![0; 8], vec![f32::NAN; 8]).is_err());
        assert!(LabeledVolume::new([2, 2, 2], [1.0; 3], vec![0; 7], vec![0.0; 8]).is_err());
    }

    #[test]
    fn trilinear_matches_grid_and_midpoints() {
        let mut v = LabeledVolume::blank([3, 3, 3], [1.0; 3]).unwrap();
        for z in 0..3 {
            for y in 0..3 {
                for x in 0..3 {
                    let i = v.index(x, y, z);
                    v.intensity_mut()[i] = (x + 2 * y + 4 * z) as f32;
                }
            }
        }
        assert_eq!(v.sample_trilinear([1.0, 2.0, 0.0]), Some(5.0));
        assert_eq!(v.sample_trilinear([2.0, 2.0, 2.0]), Some(14.0));
        let mid = v.sample_trilinear([0.5, 0.5, 0.5]).unwrap();
        assert!((mid - 3.5).abs() < 1e-12);
        assert_eq!(v.sample_trilinear([-0.1, 0.0, 0.0]), None);
        assert_eq!(v.sample_trilinear([0.0, 2.01, 0.0]), None);
    }
}
