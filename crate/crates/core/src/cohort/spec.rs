use serde::{Deserialize, Serialize};

use super::sectors::{default_sector_map, SECTORS};
use crate::error::{Error, Result};
use crate::pointnet::VF_POINTS;

/// Clinical bounds of the mean deviation surrogate, in dB.
pub const MD_RANGE_DB: (f64, f64) = (-25.2, -1.8);
pub const MD_MEAN_DB: f64 = -7.25;
pub const MD_SD_DB: f64 = 5.05;
pub const DEFAULT_SUBJECTS: usize = 120;

/// Coefficients of the planted defect score
/// `σ(strain·ε̄ − thickness·t̄ + severity·(−MD) + offset + N(0, noise_sd))`,
/// with ε̄ dimensionless and t̄ in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelModel {
    pub strain: f64,
    pub thickness: f64,
    pub severity: f64,
    pub offset: f64,
    pub noise_sd: f64,
}

impl Default for LabelModel {
    fn default() -> Self {
        LabelModel { strain: 500.0, thickness: 30.0, severity: 0.1, offset: -3.5, noise_sd: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub seed: u64,
    pub md_mean_db: f64,
    pub md_sd_db: f64,
    pub md_range_db: (f64, f64),
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    /// Peak lateral compressive strain, drawn uniformly per subject.
    pub strain_amplitude: (f64, f64),
    pub label_model: LabelModel,
    /// ONH sector (0..6) of each field location.
    pub sector_map: Vec<u8>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_subjects: DEFAULT_SUBJECTS,
            seed: 2024,
            md_mean_db: MD_MEAN_DB,
            md_sd_db: MD_SD_DB,
            md_range_db: MD_RANGE_DB,
            dims: [64, 64, 48],
            spacing_mm: [0.06, 0.06, 0.02],
            strain_amplitude: (0.005, 0.025),
            label_model: LabelModel::default(),
            sector_map: default_sector_map(),
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 10 {
            return Err(Error::invalid("a cohort needs at least 10 subjects"));
        }
        let (lo, hi) = self.md_range_db;
        if !(lo < hi && lo >= MD_RANGE_DB.0 && hi <= MD_RANGE_DB.1) {
            return Err(Error::invalid(format!(
                "MD range must lie within [{}, {}] dB",
                MD_RANGE_DB.0, MD_RANGE_DB.1
            )));
        }
        if !(self.md_sd_db > 0.0) {
            return Err(Error::invalid("md_sd_db must be > 0"));
        }
        if self.dims.iter().any(|&d| d < 24) {
            return Err(Error::invalid("phantom volumes need at least 24 voxels per axis"));
        }
        if self.spacing_mm.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("spacing must be positive"));
        }
        let (a, b) = self.strain_amplitude;
        if !(0.0 <= a && a <= b && b < 0.2) {
            return Err(Error::invalid("strain amplitude range must satisfy 0 <= lo <= hi < 0.2"));
        }
        if self.sector_map.len() != VF_POINTS {
            return Err(Error::LengthMismatch { expected: VF_POINTS, actual: self.sector_map.len() });
        }
        if self.sector_map.iter().any(|&s| s as usize >= SECTORS) {
            return Err(Error::invalid("sector indices must be below 6"));
        }
        let m = &self.label_model;
        if !(m.strain >= 0.0 && m.thickness >= 0.0 && m.severity >= 0.0 && m.noise_sd >= 0.0) {
            return Err(Error::invalid("label coefficients must be non-negative"));
        }
        Ok(())
    }

    /// Lateral extent of the phantom in mm.
    pub fn extent_mm(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| (self.dims[a] - 1) as f64 * self.spacing_mm[a])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        CohortSpec::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let bad = |f: fn(&mut CohortSpec)| {
            let mut s = CohortSpec::default();
            f(&mut s);
            s.validate().is_err()
        };
        assert!(bad(|s| s.n_subjects = 9));
        assert!(bad(|s| s.md_range_db = (-30.0, -1.8)));
        assert!(bad(|s| s.sector_map.pop().map(|_| ()).unwrap()));
        assert!(bad(|s| s.sector_map[0] = 6));
        assert!(bad(|s| s.strain_amplitude = (0.02, 0.01)));
    }
}
