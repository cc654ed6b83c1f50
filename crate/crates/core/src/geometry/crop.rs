use crate::cloud::{Frame, OnhPointCloud};
use crate::error::{Error, Result};

/// Crop radius around the BMO center, in mm.
pub const DEFAULT_CROP_RADIUS_MM: f64 = 1.75;

/// Keeps the points whose distance from the axial (z) axis is at most `radius_mm`.
pub fn cylindrical_crop(cloud: &OnhPointCloud, radius_mm: f64) -> Result<OnhPointCloud> {
    if cloud.frame() != Frame::BmoAligned {
        return Err(Error::invalid("cylindrical_crop expects a BMO-aligned cloud"));
    }
    if !(radius_mm > 0.0) {
        return Err(Error::invalid(format!("crop radius must be > 0, got {radius_mm}")));
    }
    let keep: Vec<usize> = cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.x.hypot(p.y) <= radius_mm)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyCrop);
    }
    cloud.select(&keep)
}
