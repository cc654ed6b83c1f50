use nalgebra::Point3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{Frame, OnhPointCloud};
use crate::error::{Error, Result};
use crate::geometry::resample;

/// Crops must leave at least this many points or the sector is shrunk.
pub const MIN_POINTS_AFTER_CROP: usize = 100;
pub const MAX_CROP_RETRIES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Removed sector width is uniform in `[0, max_crop_deg]`; 0 disables the crop.
    pub max_crop_deg: f64,
    pub points: usize,
}

fn azimuth_deg(p: &Point3<f64>) -> f64 {
    p.y.atan2(p.x).to_degrees().rem_euclid(360.0)
}

fn in_sector(angle: f64, start: f64, width: f64) -> bool {
    (angle - start).rem_euclid(360.0) < width
}

/// Random sector crop, random rotation about the axial axis, then resampling
/// to exactly `cfg.points` points. Point attributes are never altered.
pub fn augment<R: Rng + ?Sized>(
    cloud: &OnhPointCloud,
    rng: &mut R,
    cfg: &AugmentConfig,
) -> Result<OnhPointCloud> {
    if cloud.frame() != Frame::BmoAligned {
        return Err(Error::invalid("augmentation expects a BMO-aligned cloud"));
    }
    let mut width = rng.random::<f64>() * cfg.max_crop_deg;
    let start = rng.random::<f64>() * 360.0;
    let mut cropped = None;
    for _ in 0..=MAX_CROP_RETRIES {
        let keep: Vec<usize> =
            (0..cloud.len()).filter(|&i| !in_sector(azimuth_deg(&cloud.points()[i]), start, width)).collect();
        if keep.len() >= MIN_POINTS_AFTER_CROP {
            cropped = Some(cloud.select(&keep)?);
            break;
        }
        width /= 2.0;
    }
    let cropped = cropped.unwrap_or_else(|| cloud.clone());

    let angle = rng.random::<f64>() * std::f64::consts::TAU;
    let (sin, cos) = angle.sin_cos();
    let rotated = cropped
        .points()
        .iter()
        .map(|p| Point3::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y, p.z))
        .collect();
    let rotated = cropped.with_points(rotated, Frame::BmoAligned)?;
    resample(&rotated, cfg.points, rng)
}
