//! Attributed ONH point clouds.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Tissue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// Scanner coordinates in mm.
    Raw,
    /// Centered on the BMO center with the BMO normal along +z.
    BmoAligned,
}

/// Points in mm, each with a tissue class, a thickness (mm) and optionally an
/// effective strain. Strain is either present for every point or for none.
#[derive(Debug, Clone, PartialEq)]
pub struct OnhPointCloud {
    points: Vec<Point3<f64>>,
    tissue: Vec<Tissue>,
    thickness: Vec<f64>,
    strain: Option<Vec<f64>>,
    frame: Frame,
}

impl OnhPointCloud {
    pub fn new(
        points: Vec<Point3<f64>>,
        tissue: Vec<Tissue>,
        thickness: Vec<f64>,
        strain: Option<Vec<f64>>,
        frame: Frame,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptyCloud);
        }
        for len in [tissue.len(), thickness.len()].into_iter().chain(strain.as_ref().map(Vec::len)) {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, actual: len });
            }
        }
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("non-finite point coordinate"));
        }
        if thickness.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::invalid("thickness must be finite and >= 0"));
        }
        if let Some(s) = &strain {
            if s.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
                return Err(Error::invalid("strain must be finite and >= 0"));
            }
        }
        Ok(Self { points, tissue, thickness, strain, frame })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn tissue(&self) -> &[Tissue] {
        &self.tissue
    }

    pub fn thickness(&self) -> &[f64] {
        &self.thickness
    }

    pub fn strain(&self) -> Option<&[f64]> {
        self.strain.as_deref()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Same attributes, new coordinates and frame tag.
    pub fn with_points(&self, points: Vec<Point3<f64>>, frame: Frame) -> Result<Self> {
        Self::new(points, self.tissue.clone(), self.thickness.clone(), self.strain.clone(), frame)
    }

    pub fn with_strain(&self, strain: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), self.tissue.clone(), self.thickness.clone(), Some(strain), self.frame)
    }

    /// Sub-cloud made of the given point indices (repeats allowed), in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.points[i]).collect(),
            indices.iter().map(|&i| self.tissue[i]).collect(),
            indices.iter().map(|&i| self.thickness[i]).collect(),
            self.strain.as_ref().map(|s| indices.iter().map(|&i| s[i]).collect()),
            self.frame,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(strain: Option<Vec<f64>>) -> Result<OnhPointCloud> {
        OnhPointCloud::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)],
            vec![Tissue::Rnfl, Tissue::Lamina],
            vec![0.1, 0.2],
            strain,
            Frame::Raw,
        )
    }

    #[test]
    fn enforces_invariants() {
        assert!(cloud(None).is_ok());
        assert!(cloud(Some(vec![0.01, 0.02])).is_ok());
        assert!(cloud(Some(vec![0.01])).is_err());
        assert!(cloud(Some(vec![-0.01, 0.0])).is_err());
        assert!(matches!(
            OnhPointCloud::new(vec![], vec![], vec![], None, Frame::Raw),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn select_carries_attributes() {
        let c = cloud(Some(vec![0.01, 0.02])).unwrap();
        let s = c.select(&[1, 1, 0]).unwrap();
        assert_eq!(s.tissue(), &[Tissue::Lamina, Tissue::Lamina, Tissue::Rnfl]);
        assert_eq!(s.strain().unwrap(), &[0.02, 0.02, 0.01]);
    }
}
