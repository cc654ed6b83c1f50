use nalgebra::Point3;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sectors::{onh_sector, SECTORS};
use super::spec::CohortSpec;
use super::warp::{warp_volume, Displacement, OnhLoad};
use crate::dvc::{gaussian_kernel, reflect};
use crate::error::Result;
use crate::seed::{self, stream};
use crate::volume::{LabeledVolume, Tissue};

pub const BMO_RING_POINTS: usize = 24;
/// Correlation length of the intensity texture, in voxels.
pub const TEXTURE_SIGMA_VOXELS: f64 = 1.5;
pub const TEXTURE_SD: f64 = 0.2;

const ILM_DEPTH_MM: f64 = 0.12;
const PRELAMINA_MM: f64 = 0.12;
const LAMINA_MM: f64 = 0.12;
const GCL_MM: f64 = 0.05;
const OTHER_RETINA_MM: f64 = 0.08;
const RPE_MM: f64 = 0.04;
const RNFL_BASE_MM: f64 = 0.05;
const RNFL_HUMP_MM: f64 = 0.07;
/// Fraction of RNFL lost in the worst sector of the most severe subject.
const MAX_RNFL_LOSS: f64 = 0.6;

fn base_intensity(t: Tissue) -> f64 {
    match t {
        Tissue::Background => 0.3,
        Tissue::Rnfl => 0.6,
        Tissue::GclIpl => 0.5,
        Tissue::OtherRetina => 0.4,
        Tissue::Rpe => 0.7,
        Tissue::Lamina => 0.55,
    }
}

/// Shape parameters of one phantom ONH, lengths in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnhGeometry {
    /// Lateral position of the disc center.
    pub center_mm: [f64; 2],
    pub bmo_radius_mm: f64,
    pub cup_radius_mm: f64,
    pub cup_depth_mm: f64,
    /// Axial shift per mm of lateral offset (x, y).
    pub tilt: [f64; 2],
    /// Fractional RNFL loss in each ONH sector.
    pub rnfl_loss: [f64; SECTORS],
}

impl OnhGeometry {
    fn sample<R: Rng + ?Sized>(spec: &CohortSpec, severity_frac: f64, rng: &mut R) -> Self {
        let ext = spec.extent_mm();
        let bmo = rng.random_range(0.75..0.95);
        let mut rnfl_loss = [0.0; SECTORS];
        for l in &mut rnfl_loss {
            *l = MAX_RNFL_LOSS * severity_frac * rng.random_range(0.3..1.0);
        }
        OnhGeometry {
            center_mm: [0, 1].map(|a| ext[a] / 2.0 + rng.random_range(-0.08..0.08)),
            bmo_radius_mm: bmo,
            cup_radius_mm: rng.random_range(0.35..0.6),
            cup_depth_mm: rng.random_range(0.12..0.25),
            tilt: [rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.03)],
            rnfl_loss,
        }
    }

    fn offset(&self, x: f64, y: f64) -> (f64, f64) {
        (x - self.center_mm[0], y - self.center_mm[1])
    }

    fn tilt_at(&self, dx: f64, dy: f64) -> f64 {
        self.tilt[0] * dx + self.tilt[1] * dy
    }

    /// Cup depression of the inner surface: full depth inside the cup,
    /// cosine taper to zero at the BMO.
    fn cup(&self, rho: f64) -> f64 {
        let (rc, rb) = (self.cup_radius_mm, self.bmo_radius_mm);
        if rho <= rc {
            self.cup_depth_mm
        } else if rho >= rb {
            0.0
        } else {
            let t = (rho - rc) / (rb - rc);
            self.cup_depth_mm * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
        }
    }

    fn rnfl_thickness(&self, dx: f64, dy: f64) -> f64 {
        let rho = dx.hypot(dy);
        let hump = ((rho - self.bmo_radius_mm) / 0.5).powi(2);
        let healthy = RNFL_BASE_MM + RNFL_HUMP_MM * (-hump).exp();
        healthy * (1.0 - self.rnfl_loss[onh_sector(dx, dy)])
    }

    /// Tissue at a lateral position and depth (mm).
    pub fn tissue_at(&self, x: f64, y: f64, z: f64) -> Tissue {
        let (dx, dy) = self.offset(x, y);
        let rho = dx.hypot(dy);
        let ilm = ILM_DEPTH_MM + self.cup(rho) + self.tilt_at(dx, dy);
        if z < ilm {
            return Tissue::Background;
        }
        let d = z - ilm;
        if rho < self.bmo_radius_mm {
            if d < PRELAMINA_MM {
                return Tissue::Rnfl;
            }
            if rho < self.cup_radius_mm && d < PRELAMINA_MM + LAMINA_MM {
                return Tissue::Lamina;
            }
            return Tissue::Background;
        }
        let mut edge = self.rnfl_thickness(dx, dy);
        for (t, thick) in [
            (Tissue::Rnfl, 0.0),
            (Tissue::GclIpl, GCL_MM),
            (Tissue::OtherRetina, OTHER_RETINA_MM),
            (Tissue::Rpe, RPE_MM),
        ] {
            edge += thick;
            if d < edge {
                return t;
            }
        }
        Tissue::Background
    }

    /// Depth of the RPE's anterior surface at a lateral position.
    pub fn rpe_depth(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = self.offset(x, y);
        ILM_DEPTH_MM
            + self.cup(dx.hypot(dy))
            + self.tilt_at(dx, dy)
            + self.rnfl_thickness(dx, dy)
            + GCL_MM
            + OTHER_RETINA_MM
    }

    /// Points on the RPE rim at the BMO radius.
    pub fn bmo_ring(&self) -> Vec<Point3<f64>> {
        (0..BMO_RING_POINTS)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / BMO_RING_POINTS as f64;
                let x = self.center_mm[0] + self.bmo_radius_mm * a.cos();
                let y = self.center_mm[1] + self.bmo_radius_mm * a.sin();
                Point3::new(x, y, self.rpe_depth(x, y))
            })
            .collect()
    }
}

/// Baseline and loaded volumes of one synthetic subject with its truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub md_db: f64,
    pub geometry: OnhGeometry,
    pub load: Displacement,
    pub baseline: LabeledVolume,
    pub deformed: LabeledVolume,
    pub bmo_ring: Vec<Point3<f64>>,
}

impl Phantom {
    /// Severity scalar: the MD surrogate's magnitude in dB.
    pub fn severity(&self) -> f64 {
        -self.md_db
    }
}

pub fn sample_md<R: Rng + ?Sized>(spec: &CohortSpec, rng: &mut R) -> f64 {
    let normal = Normal::new(spec.md_mean_db, spec.md_sd_db).expect("validated sd");
    let (lo, hi) = spec.md_range_db;
    loop {
        let md = normal.sample(rng);
        if (lo..=hi).contains(&md) {
            return md;
        }
    }
}

/// Gaussian-smoothed white noise rescaled to `TEXTURE_SD`.
fn texture<R: Rng + ?Sized>(dims: [usize; 3], rng: &mut R) -> Vec<f64> {
    let n = dims[0] * dims[1] * dims[2];
    let mut field: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let kernel = gaussian_kernel(TEXTURE_SIGMA_VOXELS);
    let radius = (kernel.len() / 2) as isize;
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut tmp = vec![0.0; n];
    for axis in 0..3 {
        for (i, out) in tmp.iter_mut().enumerate() {
            let coord = (i / strides[axis]) % dims[axis];
            let base = i - coord * strides[axis];
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let j = reflect(coord as isize + k as isize - radius, dims[axis]);
                acc += w * field[base + j * strides[axis]];
            }
            *out = acc;
        }
        std::mem::swap(&mut field, &mut tmp);
    }
    let mean = field.iter().sum::<f64>() / n as f64;
    let sd = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    for v in &mut field {
        *v = (*v - mean) / sd * TEXTURE_SD;
    }
    field
}

/// Layered ONH phantom with a cup, textured intensity, and an IOP-like
/// deformed copy. Deterministic in `subject_seed`.
pub fn generate_phantom(spec: &CohortSpec, subject_seed: u64) -> Result<Phantom> {
    spec.validate()?;
    let mut rng = seed::rng(subject_seed);
    let md_db = sample_md(spec, &mut rng);
    let (lo, hi) = spec.md_range_db;
    let severity_frac = (hi - md_db) / (hi - lo);
    let geometry = OnhGeometry::sample(spec, severity_frac, &mut rng);
    let (amp_lo, amp_hi) = spec.strain_amplitude;
    let amplitude = if amp_hi > amp_lo { rng.random_range(amp_lo..amp_hi) } else { amp_lo };
    let load = Displacement::Onh(OnhLoad {
        center_mm: [geometry.center_mm[0], geometry.center_mm[1], 0.35],
        amplitude,
        radius_mm: 0.8,
        sector_gain: rng.random_range(0.0..0.5),
        sector_phase: rng.random_range(0.0..std::f64::consts::TAU),
    });

    let dims = spec.dims;
    let mut baseline = LabeledVolume::blank(dims, spec.spacing_mm)?;
    let noise = texture(dims, &mut rng);
    let mut i = 0;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let [px, py, pz] = baseline.voxel_to_mm(x, y, z);
                let t = geometry.tissue_at(px, py, pz);
                baseline.labels_mut()[i] = t.label();
                baseline.intensity_mut()[i] = (base_intensity(t) + noise[i]) as f32;
                i += 1;
            }
        }
    }
    let deformed = warp_volume(&baseline, &load)?;
    let bmo_ring = geometry.bmo_ring();
    Ok(Phantom { md_db, geometry, load, baseline, deformed, bmo_ring })
}

/// Seed of subject `index` in a cohort.
pub fn subject_seed(spec: &CohortSpec, index: usize) -> u64 {
    seed::derive(spec.seed, &[stream::SUBJECT, index as u64])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> CohortSpec {
        CohortSpec { dims: [48, 48, 40], ..CohortSpec::default() }
    }

    #[test]
    fn lamina_only_under_cup() {
        let spec = small_spec();
        let ph = generate_phantom(&spec, 11).unwrap();
        let g = &ph.geometry;
        let [nx, ny, nz] = spec.dims;
        let mut lamina = 0;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if ph.baseline.label(x, y, z) == Tissue::Lamina.label() {
                        let [px, py, _] = ph.baseline.voxel_to_mm(x, y, z);
                        let rho = (px - g.center_mm[0]).hypot(py - g.center_mm[1]);
                        assert!(rho < g.cup_radius_mm);
                        lamina += 1;
                    }
                }
            }
        }
        assert!(lamina > 0);
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let spec = small_spec();
        let a = generate_phantom(&spec, 5).unwrap();
        assert_eq!(a, generate_phantom(&spec, 5).unwrap());
        let b = generate_phantom(&spec, 6).unwrap();
        assert_ne!(a.geometry.cup_radius_mm, b.geometry.cup_radius_mm);
        for g in [&a.geometry, &b.geometry] {
            assert!((0.35..0.6).contains(&g.cup_radius_mm));
        }
    }

    #[test]
    fn all_classes_present_and_ring_on_rpe() {
        let ph = generate_phantom(&small_spec(), 3).unwrap();
        for t in Tissue::FOREGROUND {
            assert!(ph.baseline.labels().contains(&t.label()), "{t:?} missing");
        }
        assert_eq!(ph.bmo_ring.len(), BMO_RING_POINTS);
        for p in &ph.bmo_ring {
            // just outside the opening the ring sits on the RPE surface
            let g = &ph.geometry;
            let (dx, dy) = (p.x - g.center_mm[0], p.y - g.center_mm[1]);
            let s = 1.0 + 1e-6 / dx.hypot(dy);
            let t = g.tissue_at(g.center_mm[0] + dx * s, g.center_mm[1] + dy * s, p.z + 1e-6);
            assert_eq!(t, Tissue::Rpe);
        }
    }

    #[test]
    fn md_within_clinical_range() {
        let spec = CohortSpec::default();
        let mut rng = seed::rng(0);
        let draws: Vec<f64> = (0..2000).map(|_| sample_md(&spec, &mut rng)).collect();
        assert!(draws.iter().all(|&m| (-25.2..=-1.8).contains(&m)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        // truncation pulls the mean a little below −7.25
        assert!(mean < -6.0 && mean > -9.5, "{mean}");
    }
}
