use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dvc::SymTensor;
use crate::error::{Error, Result};
use crate::volume::LabeledVolume;

/// Largest displacement, in voxels, a warp may apply.
pub const MAX_WARP_VOXELS: f64 = 4.0;

/// IOP-like load: lateral compression toward the ONH axis with axial
/// stretch, fading with a Gaussian lateral envelope and modulated by azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnhLoad {
    pub center_mm: [f64; 3],
    /// Peak lateral compressive strain.
    pub amplitude: f64,
    pub radius_mm: f64,
    /// Relative azimuthal modulation, in [0, 1).
    pub sector_gain: f64,
    pub sector_phase: f64,
}

impl OnhLoad {
    fn weight(&self, dx: f64, dy: f64) -> f64 {
        let rho2 = dx * dx + dy * dy;
        let envelope = (-rho2 / (2.0 * self.radius_mm * self.radius_mm)).exp();
        let modulation = 1.0 + self.sector_gain * (dy.atan2(dx) - self.sector_phase).cos();
        self.amplitude * envelope * modulation
    }
}

/// Analytic displacement fields in mm as a function of position in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Displacement {
    Zero,
    Translation {
        mm: [f64; 3],
    },
    /// `u(p) = gradient · (p − origin)`, row-major gradient.
    Affine {
        gradient: [[f64; 3]; 3],
        origin_mm: [f64; 3],
    },
    Onh(OnhLoad),
}

impl Displacement {
    pub fn at_mm(&self, p: &Point3<f64>) -> Vector3<f64> {
        match self {
            Displacement::Zero => Vector3::zeros(),
            Displacement::Translation { mm } => Vector3::from(*mm),
            Displacement::Affine { gradient, origin_mm } => {
                let g = Matrix3::from_fn(|r, c| gradient[r][c]);
                g * (p - Point3::from(*origin_mm))
            }
            Displacement::Onh(load) => {
                let c = load.center_mm;
                let (dx, dy, dz) = (p.x - c[0], p.y - c[1], p.z - c[2]);
                let w = load.weight(dx, dy);
                Vector3::new(-w * dx, -w * dy, 2.0 * w * dz)
            }
        }
    }

    /// Small-strain tensor at `p` by central differences of the analytic field.
    pub fn strain_at_mm(&self, p: &Point3<f64>) -> SymTensor {
        const H: f64 = 1e-4;
        let mut grad = Matrix3::zeros();
        for j in 0..3 {
            let mut step = Vector3::zeros();
            step[j] = H;
            let d = (self.at_mm(&(p + step)) - self.at_mm(&(p - step))) / (2.0 * H);
            grad.set_column(j, &d);
        }
        SymTensor::sym(&grad)
    }
}

/// Pull-back warp: the deformed volume at `x` samples the input at `x − u(x)`.
/// Intensity is trilinear, labels nearest-neighbour, and samples falling
/// outside the grid become background (label 0, intensity 0).
pub fn warp_volume(vol: &LabeledVolume, u: &Displacement) -> Result<LabeledVolume> {
    let [nx, ny, nz] = vol.dims();
    let spacing = vol.spacing();
    let mut out = LabeledVolume::blank(vol.dims(), spacing)?;
    let mut max_norm = 0.0f64;
    let mut samples = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let d = u.at_mm(&Point3::from(vol.voxel_to_mm(x, y, z)));
                let dv = [d.x / spacing[0], d.y / spacing[1], d.z / spacing[2]];
                max_norm = max_norm.max((dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]).sqrt());
                samples.push([x as f64 - dv[0], y as f64 - dv[1], z as f64 - dv[2]]);
            }
        }
    }
    if max_norm > MAX_WARP_VOXELS {
        return Err(Error::DisplacementBound { magnitude: max_norm, bound: MAX_WARP_VOXELS });
    }
    let dims = vol.dims();
    for (i, s) in samples.iter().enumerate() {
        if let Some(v) = vol.sample_trilinear(*s) {
            out.intensity_mut()[i] = v as f32;
        }
        let nearest = [0, 1, 2].map(|a| s[a].round());
        if (0..3).all(|a| nearest[a] >= 0.0 && nearest[a] <= (dims[a] - 1) as f64) {
            let [x, y, z] = nearest.map(|v| v as usize);
            out.labels_mut()[i] = vol.label(x, y, z);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvc::effective_strain;
    use crate::seed;
    use rand::Rng;

    fn random_volume(dims: [usize; 3], s: u64) -> LabeledVolume {
        let mut rng = seed::rng(s);
        let mut v = LabeledVolume::blank(dims, [0.05, 0.04, 0.02]).unwrap();
        for x in v.intensity_mut() {
            *x = rng.random();
        }
        for l in v.labels_mut() {
            *l = rng.random_range(0..6);
        }
        v
    }

    #[test]
    fn zero_warp_is_identity() {
        let v = random_volume([12, 10, 8], 1);
        assert_eq!(warp_volume(&v, &Displacement::Zero).unwrap(), v);
    }

    #[test]
    fn integer_translation_shifts_indices() {
        let v = random_volume([14, 12, 10], 2);
        let sp = v.spacing();
        let shift = [2usize, 1, 3];
        let u = Displacement::Translation { mm: [0, 1, 2].map(|a| shift[a] as f64 * sp[a]) };
        let w = warp_volume(&v, &u).unwrap();
        let [nx, ny, nz] = v.dims();
        for z in shift[2]..nz {
            for y in shift[1]..ny {
                for x in shift[0]..nx {
                    let (sx, sy, sz) = (x - shift[0], y - shift[1], z - shift[2]);
                    assert_eq!(w.intensity_at(x, y, z), v.intensity_at(sx, sy, sz));
                    assert_eq!(w.label(x, y, z), v.label(sx, sy, sz));
                }
            }
        }
        // uncovered corner is background
        assert_eq!(w.label(0, 0, 0), 0);
        assert_eq!(w.intensity_at(0, 0, 0), 0.0);
    }

    #[test]
    fn bound_enforced() {
        let v = random_volume([10, 10, 10], 3);
        let u = Displacement::Translation { mm: [0.0, 0.0, 4.5 * v.spacing()[2]] };
        assert!(matches!(warp_volume(&v, &u), Err(Error::DisplacementBound { .. })));
        let ok = Displacement::Translation { mm: [0.0, 0.0, 3.9 * v.spacing()[2]] };
        assert!(warp_volume(&v, &ok).is_ok());
    }

    #[test]
    fn affine_strain_is_its_gradient() {
        let g = [[0.01, 0.002, 0.0], [0.0, -0.005, 0.0], [0.003, 0.0, 0.02]];
        let u = Displacement::Affine { gradient: g, origin_mm: [1.0, 1.0, 0.5] };
        let e = u.strain_at_mm(&Point3::new(0.3, 2.0, 0.1));
        assert!((e.xx - 0.01).abs() < 1e-10);
        assert!((e.yy + 0.005).abs() < 1e-10);
        assert!((e.zz - 0.02).abs() < 1e-10);
        assert!((e.xy - 0.001).abs() < 1e-10);
        assert!((e.xz - 0.0015).abs() < 1e-10);
    }

    #[test]
    fn onh_load_on_axis() {
        let load = OnhLoad {
            center_mm: [1.0, 1.0, 0.3],
            amplitude: 0.02,
            radius_mm: 0.8,
            sector_gain: 0.0,
            sector_phase: 0.0,
        };
        let u = Displacement::Onh(load);
        let e = u.strain_at_mm(&Point3::new(1.0, 1.0, 0.3));
        assert!((e.xx + 0.02).abs() < 1e-8);
        assert!((e.yy + 0.02).abs() < 1e-8);
        assert!((e.zz - 0.04).abs() < 1e-8);
        assert!((effective_strain(&e) - 0.04).abs() < 1e-8);
        // far from the axis the load vanishes
        assert!(u.at_mm(&Point3::new(9.0, 9.0, 0.3)).norm() < 1e-12);
    }
}
