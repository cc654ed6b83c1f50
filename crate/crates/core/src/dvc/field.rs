use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular lattice of block centers in voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGrid {
    pub dims: [usize; 3],
    /// Voxel position of node (0, 0, 0).
    pub origin: [f64; 3],
    /// Node spacing in voxels.
    pub stride: [usize; 3],
}

impl NodeGrid {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let j = (index / self.dims[0]) % self.dims[1];
        let k = index / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn node_voxel(&self, index: usize) -> [f64; 3] {
        let c = self.coords(index);
        [
            self.origin[0] + (c[0] * self.stride[0]) as f64,
            self.origin[1] + (c[1] * self.stride[1]) as f64,
            self.origin[2] + (c[2] * self.stride[2]) as f64,
        ]
    }

    pub fn node_mm(&self, index: usize, spacing: [f64; 3]) -> Point3<f64> {
        let v = self.node_voxel(index);
        Point3::new(v[0] * spacing[0], v[1] * spacing[1], v[2] * spacing[2])
    }

    /// True when the node is at least `margin` nodes away from every grid face.
    pub fn is_interior(&self, index: usize, margin: usize) -> bool {
        let c = self.coords(index);
        (0..3).all(|a| c[a] >= margin && c[a] + margin < self.dims[a])
    }

    fn validate(&self) -> Result<()> {
        if self.stride.contains(&0) {
            return Err(Error::invalid("node grid stride must be > 0"));
        }
        if !self.origin.iter().all(|o| o.is_finite()) {
            return Err(Error::invalid("node grid origin must be finite"));
        }
        Ok(())
    }
}

/// Per-node displacement (voxels) with the NCC peak as confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub grid: NodeGrid,
    pub vectors: Vec<[f64; 3]>,
    pub confidence: Vec<f64>,
}

impl DisplacementField {
    pub fn new(grid: NodeGrid, vectors: Vec<[f64; 3]>, confidence: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        for len in [vectors.len(), confidence.len()] {
            if len != grid.len() {
                return Err(Error::LengthMismatch { expected: grid.len(), actual: len });
            }
        }
        if vectors.iter().flatten().any(|u| !u.is_finite()) {
            return Err(Error::invalid("non-finite displacement"));
        }
        if confidence.iter().any(|c| !(-1.0..=1.0).contains(c)) {
            return Err(Error::invalid("confidence outside [-1, 1]"));
        }
        Ok(Self { grid, vectors, confidence })
    }

    /// A field sampled from `u(node voxel position)` with confidence 1.
    pub fn from_fn(grid: NodeGrid, u: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        let vectors = (0..grid.len()).map(|i| u(grid.node_voxel(i))).collect();
        Self::new(grid, vectors, vec![1.0; grid.len()])
    }
}

/// Symmetric 3×3 tensor stored by its six independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub yz: f64,
    pub xz: f64,
}

impl SymTensor {
    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor { xx: a, yy: b, zz: c, ..Default::default() }
    }

    /// Symmetric part of a general matrix.
    pub fn sym(m: &Matrix3<f64>) -> Self {
        SymTensor {
            xx: m[(0, 0)],
            yy: m[(1, 1)],
            zz: m[(2, 2)],
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            yz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
            xz: 0.5 * (m[(0, 2)] + m[(2, 0)]),
        }
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.xz, //
            self.xy, self.yy, self.yz, //
            self.xz, self.yz, self.zz,
        )
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn components(&self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.yz, self.xz]
    }

    pub fn from_components(c: [f64; 6]) -> Self {
        SymTensor { xx: c[0], yy: c[1], zz: c[2], xy: c[3], yz: c[4], xz: c[5] }
    }

    /// Applies `v ↦ T v`.
    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.to_matrix() * v
    }
}

/// Infinitesimal strain and effective strain per node of a displacement grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainField {
    pub grid: NodeGrid,
    /// Voxel spacing (mm) used to place nodes physically.
    pub spacing: [f64; 3],
    pub tensors: Vec<SymTensor>,
    pub effective: Vec<f64>,
}

impl StrainField {
    pub fn new(
        grid: NodeGrid,
        spacing: [f64; 3],
        tensors: Vec<SymTensor>,
        effective: Vec<f64>,
    ) -> Result<Self> {
        grid.validate()?;
        for len in [tensors.len(), effective.len()] {
            if len != grid.len() {
                return Err(Error::LengthMismatch { expected: grid.len(), actual: len });
            }
        }
        if effective.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::invalid("effective strain must be finite and >= 0"));
        }
        Ok(Self { grid, spacing, tensors, effective })
    }

    pub fn node_mm(&self, index: usize) -> Point3<f64> {
        self.grid.node_mm(index, self.spacing)
    }
}
