use nalgebra::{Isometry3, Matrix3};

use super::field::{DisplacementField, StrainField, SymTensor};
use crate::cloud::OnhPointCloud;
use crate::error::{Error, Result};
use crate::geometry::ScalarSamples;

/// Von Mises equivalent strain, `sqrt(2/3 · dev(ε) : dev(ε))`.
///
/// Grows with both tensile and compressive deviatoric strain and vanishes for
/// purely hydrostatic tensors.
pub fn effective_strain(eps: &SymTensor) -> f64 {
    // dev(ε):dev(ε) written with pairwise differences, so that equal normal
    // components cancel exactly
    let (a, b, c) = (eps.xx - eps.yy, eps.yy - eps.zz, eps.zz - eps.xx);
    let contraction =
        (a * a + b * b + c * c) / 3.0 + 2.0 * (eps.xy * eps.xy + eps.yz * eps.yz + eps.xz * eps.xz);
    (2.0 / 3.0 * contraction).max(0.0).sqrt()
}

/// Infinitesimal strain from a displacement field on its node lattice.
///
/// The displacement gradient uses central differences in the interior and
/// one-sided differences on the faces, in physical units (`spacing` is the
/// voxel size in mm, displacements are in voxels).
pub fn strain_tensor(field: &DisplacementField, spacing: [f64; 3]) -> Result<StrainField> {
    let grid = field.grid;
    if grid.dims.iter().any(|&d| d < 3) {
        return Err(Error::invalid(format!("strain needs >= 3 nodes per axis, got {:?}", grid.dims)));
    }
    if spacing.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::invalid("voxel spacing must be positive"));
    }
    let mm = |v: [f64; 3]| [v[0] * spacing[0], v[1] * spacing[1], v[2] * spacing[2]];
    let mut tensors = Vec::with_capacity(grid.len());
    for index in 0..grid.len() {
        let c = grid.coords(index);
        let mut gradient = Matrix3::zeros();
        for axis in 0..3 {
            let n = grid.dims[axis];
            let h = grid.stride[axis] as f64 * spacing[axis];
            let (lo, hi) = match c[axis] {
                0 => (0, 1),
                i if i + 1 == n => (i - 1, i),
                i => (i - 1, i + 1),
            };
            let at = |pos: usize| {
                let mut p = c;
                p[axis] = pos;
                mm(field.vectors[grid.index(p[0], p[1], p[2])])
            };
            let (a, b) = (at(lo), at(hi));
            let span = (hi - lo) as f64 * h;
            for comp in 0..3 {
                gradient[(comp, axis)] = (b[comp] - a[comp]) / span;
            }
        }
        tensors.push(SymTensor::sym(&gradient));
    }
    let effective = tensors.iter().map(effective_strain).collect();
    StrainField::new(grid, spacing, tensors, effective)
}

/// Effective strain at every cloud point: the mean of the `k` nearest strain
/// nodes. `placement` maps node positions (mm, scanner frame) into the frame
/// of the cloud; pass the BMO alignment for aligned clouds.
pub fn attach_strain(
    cloud: &OnhPointCloud,
    strain: &StrainField,
    placement: &Isometry3<f64>,
    k: usize,
) -> Result<OnhPointCloud> {
    if strain.grid.is_empty() {
        return Err(Error::EmptyStrainField);
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let samples: Vec<_> =
        (0..strain.grid.len()).map(|i| (placement * strain.node_mm(i), strain.effective[i])).collect();
    let index = ScalarSamples::new(&samples)?;
    let values = cloud.points().iter().map(|p| index.interpolate(p, k)).collect();
    cloud.with_strain(values)
}
