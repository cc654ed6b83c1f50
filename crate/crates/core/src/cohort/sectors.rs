//! Synthetic assignment of 24-2 test locations to six ONH sectors.
//!
//! Each 60° sector of the disc (azimuth measured counter-clockwise from +x in
//! the BMO-aligned frame) serves the field locations whose polar angle, after
//! an up/down flip, falls in the same 60° bin. This is a regular stand-in for
//! the anatomical structure-function map, adequate for planting labels.

use serde::{Deserialize, Serialize};

use crate::pointnet::VF_POINTS;

pub const SECTORS: usize = 6;
pub const SECTOR_WIDTH_DEG: f64 = 360.0 / SECTORS as f64;

/// Field location in degrees (right eye, blind spot removed) and its sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VfPoint {
    pub x_deg: i8,
    pub y_deg: i8,
    pub sector: u8,
}

const fn p(x_deg: i8, y_deg: i8, sector: u8) -> VfPoint {
    VfPoint { x_deg, y_deg, sector }
}

#[rustfmt::skip]
pub const VF_24_2: [VfPoint; VF_POINTS] = [
    p(-9, 21, 4), p(-3, 21, 4), p(3, 21, 4), p(9, 21, 4),
    p(-15, 15, 3), p(-9, 15, 3), p(-3, 15, 4), p(3, 15, 4),
    p(9, 15, 5), p(15, 15, 5), p(-21, 9, 3), p(-15, 9, 3),
    p(-9, 9, 3), p(-3, 9, 4), p(3, 9, 4), p(9, 9, 5),
    p(15, 9, 5), p(21, 9, 5), p(-27, 3, 3), p(-21, 3, 3),
    p(-15, 3, 3), p(-9, 3, 3), p(-3, 3, 3), p(3, 3, 5),
    p(9, 3, 5), p(21, 3, 5), p(-27, -3, 2), p(-21, -3, 2),
    p(-15, -3, 2), p(-9, -3, 2), p(-3, -3, 2), p(3, -3, 0),
    p(9, -3, 0), p(21, -3, 0), p(-21, -9, 2), p(-15, -9, 2),
    p(-9, -9, 2), p(-3, -9, 1), p(3, -9, 1), p(9, -9, 0),
    p(15, -9, 0), p(21, -9, 0), p(-15, -15, 2), p(-9, -15, 2),
    p(-3, -15, 1), p(3, -15, 1), p(9, -15, 0), p(15, -15, 0),
    p(-9, -21, 1), p(-3, -21, 1), p(3, -21, 1), p(9, -21, 1),
];

/// Sector of an aligned-frame point from its azimuth.
pub fn onh_sector(x: f64, y: f64) -> usize {
    let deg = y.atan2(x).to_degrees().rem_euclid(360.0);
    ((deg / SECTOR_WIDTH_DEG) as usize).min(SECTORS - 1)
}

/// Sector index for each of the 52 field locations.
pub fn default_sector_map() -> Vec<u8> {
    VF_24_2.iter().map(|p| p.sector).collect()
}
