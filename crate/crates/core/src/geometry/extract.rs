use nalgebra::Point3;

use super::kdtree::KdTree;
use crate::cloud::{Frame, OnhPointCloud};
use crate::error::{Error, Result};
use crate::volume::{LabeledVolume, Tissue};

const NONE: u32 = u32::MAX;

/// Anterior-boundary point cloud of a segmented volume.
///
/// Every (x, y) column contributes one point per tissue class present in it,
/// located at the class's lowest-z voxel. Thickness is the minimum Euclidean
/// distance from that point to the posterior boundary (highest-z voxel per
/// column) of the same class, searched over all columns. Points are emitted in
/// column order (y outer, x inner), then by class label.
pub fn extract_point_cloud(vol: &LabeledVolume) -> Result<OnhPointCloud> {
    let [nx, ny, nz] = vol.dims();
    let ncols = nx * ny;
    let nclass = Tissue::FOREGROUND.len();
    let mut first = vec![NONE; ncols * nclass];
    let mut last = vec![NONE; ncols * nclass];
    let labels = vol.labels();
    for z in 0..nz {
        let plane = &labels[z * ncols..(z + 1) * ncols];
        for (col, &label) in plane.iter().enumerate() {
            if label == 0 {
                continue;
            }
            let slot = col * nclass + (label as usize - 1);
            if first[slot] == NONE {
                first[slot] = z as u32;
            }
            last[slot] = z as u32;
        }
    }

    let mut posterior: Vec<Vec<[f64; 3]>> = vec![Vec::new(); nclass];
    for col in 0..ncols {
        let (x, y) = (col % nx, col / nx);
        for c in 0..nclass {
            let z = last[col * nclass + c];
            if z != NONE {
                posterior[c].push(vol.voxel_to_mm(x, y, z as usize));
            }
        }
    }
    let trees: Vec<KdTree> = posterior.into_iter().map(KdTree::new).collect();

    let mut points = Vec::new();
    let mut tissue = Vec::new();
    let mut thickness = Vec::new();
    for col in 0..ncols {
        let (x, y) = (col % nx, col / nx);
        for (c, &class) in Tissue::FOREGROUND.iter().enumerate() {
            let z = first[col * nclass + c];
            if z == NONE {
                continue;
            }
            let p = vol.voxel_to_mm(x, y, z as usize);
            let nearest = trees[c].nearest(&p).expect("class has a posterior boundary");
            points.push(Point3::from(p));
            tissue.push(class);
            thickness.push(nearest.dist2.sqrt());
        }
    }
    if points.is_empty() {
        return Err(Error::EmptySegmentation);
    }
    OnhPointCloud::new(points, tissue, thickness, None, Frame::Raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn slab_volume() -> LabeledVolume {
        let mut v = LabeledVolume::blank([20, 20, 20], [0.01, 0.01, 0.004]).unwrap();
        for z in 5..=14 {
            for y in 0..20 {
                for x in 0..20 {
                    let i = v.index(x, y, z);
                    v.labels_mut()[i] = 1;
                }
            }
        }
        v
    }

    #[test]
    fn uniform_slab() {
        let cloud = extract_point_cloud(&slab_volume()).unwrap();
        assert_eq!(cloud.len(), 400);
        for (p, t) in cloud.points().iter().zip(cloud.thickness()) {
            assert!((p.z - 5.0 * 0.004).abs() < 1e-15);
            assert!((t - 9.0 * 0.004).abs() < 1e-12, "thickness {t}");
        }
        assert!(cloud.tissue().iter().all(|&t| t == Tissue::Rnfl));
        assert_eq!(cloud.frame(), Frame::Raw);
    }

    #[test]
    fn empty_segmentation_is_an_error() {
        let v = LabeledVolume::blank([4, 4, 4], [1.0; 3]).unwrap();
        let err = extract_point_cloud(&v).unwrap_err();
        assert_eq!(err.to_string(), "no labeled voxels");
    }

    /// Scans every column for first/last class voxels and measures thickness
    /// against every posterior voxel of the class.
    fn exhaustive(vol: &LabeledVolume) -> Vec<([f64; 3], u8, f64)> {
        let [nx, ny, nz] = vol.dims();
        let mut anterior = Vec::new();
        let mut posterior: Vec<Vec<[f64; 3]>> = vec![Vec::new(); 6];
        for y in 0..ny {
            for x in 0..nx {
                for class in 1..=5u8 {
                    let zs: Vec<usize> = (0..nz).filter(|&z| vol.label(x, y, z) == class).collect();
                    if let (Some(&lo), Some(&hi)) = (zs.first(), zs.last()) {
                        anterior.push((vol.voxel_to_mm(x, y, lo), class));
                        posterior[class as usize].push(vol.voxel_to_mm(x, y, hi));
                    }
                }
            }
        }
        anterior
            .into_iter()
            .map(|(p, class)| {
                let d2 = posterior[class as usize]
                    .iter()
                    .map(|q| {
                        let (dx, dy, dz) = (p[0] - q[0], p[1] - q[1], p[2] - q[2]);
                        dx * dx + dy * dy + dz * dz
                    })
                    .fold(f64::INFINITY, f64::min);
                (p, class, d2.sqrt())
            })
            .collect()
    }

    #[test]
    fn random_volumes_match_exhaustive_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut v = LabeledVolume::blank([16, 16, 16], [0.02, 0.03, 0.005]).unwrap();
            for l in v.labels_mut() {
                *l = if rng.random_bool(0.7) { 0 } else { rng.random_range(1..=5) };
            }
            let cloud = extract_point_cloud(&v).unwrap();
            let oracle = exhaustive(&v);
            assert_eq!(cloud.len(), oracle.len());
            for (i, (p, class, t)) in oracle.iter().enumerate() {
                assert_eq!(cloud.points()[i].coords.as_slice(), p.as_slice());
                assert_eq!(cloud.tissue()[i].label(), *class);
                assert_eq!(cloud.thickness()[i], *t);
            }
        }
    }

    #[test]
    fn at_most_one_point_per_column_and_class() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut v = LabeledVolume::blank([8, 8, 12], [1.0; 3]).unwrap();
        for l in v.labels_mut() {
            *l = rng.random_range(0..=5);
        }
        let cloud = extract_point_cloud(&v).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (p, t) in cloud.points().iter().zip(cloud.tissue()) {
            assert!(seen.insert((p.x as i64, p.y as i64, *t)));
        }
    }
}
