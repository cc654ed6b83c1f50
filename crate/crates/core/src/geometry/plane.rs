use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::cloud::{Frame, OnhPointCloud};
use crate::error::{Error, Result};

/// Least-squares plane through the Bruch's membrane opening ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmoPlane {
    pub center: Point3<f64>,
    /// Unit normal with non-negative z component.
    pub normal: Vector3<f64>,
}

impl BmoPlane {
    pub fn new(center: Point3<f64>, normal: Vector3<f64>) -> Result<Self> {
        if !center.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("non-finite BMO center"));
        }
        if ((normal.norm() - 1.0).abs()) > 1e-12 {
            return Err(Error::invalid("BMO normal is not unit length"));
        }
        Ok(Self { center, normal })
    }

    /// Minimal rotation taking the plane normal onto +z. The antiparallel case
    /// rotates half a turn about x.
    pub fn rotation(&self) -> Rotation3<f64> {
        let z = Vector3::z();
        Rotation3::rotation_between(&self.normal, &z)
            .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI))
    }

    /// Rigid transform from scanner coordinates into the BMO-aligned frame:
    /// `p ↦ R (p - center)`.
    pub fn alignment(&self) -> Isometry3<f64> {
        let rotation = UnitQuaternion::from_rotation_matrix(&self.rotation());
        let translation = Translation3::from(-(rotation * self.center.coords));
        Isometry3::from_parts(translation, rotation)
    }

    pub fn align_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation() * (p - self.center))
    }
}

/// Fits the BMO plane: the centroid, and the normal minimizing the sum of
/// squared point-to-plane distances (smallest-eigenvalue direction of the
/// scatter matrix), oriented toward +z.
pub fn fit_bmo_plane(points: &[Point3<f64>]) -> Result<BmoPlane> {
    if points.len() < 3 {
        return Err(Error::DegenerateBmoRing);
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (smallest, middle, largest) =
        (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if !(largest > 0.0) || middle <= largest * 1e-12 {
        return Err(Error::DegenerateBmoRing);
    }
    debug_assert!(smallest <= middle);
    let mut normal = eig.eigenvectors.column(order[0]).into_owned().normalize();
    if normal.z < 0.0 {
        normal = -normal;
    }
    Ok(BmoPlane { center: Point3::from(centroid), normal })
}

/// Centers a raw cloud on the BMO center and rotates the BMO normal onto +z.
pub fn align_to_bmo(cloud: &OnhPointCloud, plane: &BmoPlane) -> Result<OnhPointCloud> {
    if cloud.frame() != Frame::Raw {
        return Err(Error::invalid("align_to_bmo expects a raw-frame cloud"));
    }
    let rotation = plane.rotation();
    let points = cloud.points().iter().map(|p| Point3::from(rotation * (p - plane.center))).collect();
    cloud.with_points(points, Frame::BmoAligned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Tissue;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn ring(n: usize, radius: f64, z: f64) -> Vec<Point3<f64>> {
        (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                Point3::new(radius * a.cos(), radius * a.sin(), z)
            })
            .collect()
    }

    #[test]
    fn horizontal_ring() {
        let plane = fit_bmo_plane(&ring(8, 0.9, 3.0)).unwrap();
        assert!((plane.normal - Vector3::z()).norm() < 1e-12);
        assert!((plane.center.z - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ring_tilted_about_x() {
        let r = Rotation3::from_axis_angle(&Vector3::x_axis(), PI / 4.0);
        let pts: Vec<_> = ring(8, 0.9, 0.0).iter().map(|p| r * p).collect();
        let plane = fit_bmo_plane(&pts).unwrap();
        let expect = Vector3::new(0.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        assert!((plane.normal - expect).norm() < 1e-9, "{:?}", plane.normal);
    }

    #[test]
    fn collinear_ring_is_degenerate() {
        let pts: Vec<_> = (0..5).map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.5)).collect();
        assert_eq!(fit_bmo_plane(&pts).unwrap_err().to_string(), "degenerate BMO ring");
        assert!(fit_bmo_plane(&pts[..2]).is_err());
        let same = vec![Point3::new(1.0, 1.0, 1.0); 4];
        assert!(fit_bmo_plane(&same).is_err());
    }

    fn cloud_of(points: Vec<Point3<f64>>) -> OnhPointCloud {
        let n = points.len();
        OnhPointCloud::new(points, vec![Tissue::Rnfl; n], vec![0.1; n], None, Frame::Raw).unwrap()
    }

    #[test]
    fn identity_alignment() {
        let pts = vec![Point3::new(0.3, -0.2, 0.1), Point3::new(1.0, 2.0, 3.0)];
        let plane = BmoPlane::new(Point3::origin(), Vector3::z()).unwrap();
        let out = align_to_bmo(&cloud_of(pts.clone()), &plane).unwrap();
        assert_eq!(out.points(), pts.as_slice());
        assert_eq!(out.frame(), Frame::BmoAligned);
        assert!(align_to_bmo(&out, &plane).is_err());
    }

    #[test]
    fn antiparallel_normal_uses_x_half_turn() {
        let plane = BmoPlane { center: Point3::origin(), normal: -Vector3::z() };
        let p = plane.align_point(&Point3::new(1.0, 2.0, 3.0));
        assert!((p - Point3::new(1.0, -2.0, -3.0)).norm() < 1e-12);
    }

    #[test]
    fn aligned_ring_is_centered_and_flat() {
        let r = Rotation3::from_euler_angles(0.2, -0.35, 1.1);
        let t = Vector3::new(1.5, -0.7, 2.2);
        let pts: Vec<_> = ring(24, 0.8, 0.0).iter().map(|p| r * p + t).collect();
        let plane = fit_bmo_plane(&pts).unwrap();
        let aligned = align_to_bmo(&cloud_of(pts), &plane).unwrap();
        let c = aligned.points().iter().fold(Vector3::zeros(), |a, p| a + p.coords) / 24.0;
        assert!(c.norm() < 1e-9);
        let refit = fit_bmo_plane(aligned.points()).unwrap();
        assert!((refit.normal - Vector3::z()).norm() < 1e-9);
    }

    #[test]
    fn isometry_matches_pointwise_alignment() {
        let plane =
            BmoPlane::new(Point3::new(0.4, 0.1, -0.3), Vector3::new(0.1, 0.2, 0.9).normalize()).unwrap();
        let p = Point3::new(0.25, -1.0, 0.7);
        assert!((plane.alignment() * p - plane.align_point(&p)).norm() < 1e-14);
    }
}
