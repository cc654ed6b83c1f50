use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::sectors::{onh_sector, SECTORS};
use super::spec::LabelModel;
use crate::cloud::{Frame, OnhPointCloud};
use crate::error::{Error, Result};
use crate::pointnet::{VisualFieldMap, VF_POINTS};
use crate::volume::Tissue;

const PROB_FLOOR: f64 = 1e-12;

/// Per-sector mean strain over all points and mean RNFL thickness over RNFL
/// points. `None` where a sector has no qualifying points.
pub fn sector_means(cloud: &OnhPointCloud) -> Result<[Option<(f64, f64)>; SECTORS]> {
    let strain = cloud.strain().ok_or_else(|| Error::invalid("cloud has no strain attribute"))?;
    let mut acc = [(0.0, 0usize, 0.0, 0usize); SECTORS];
    for (i, p) in cloud.points().iter().enumerate() {
        let a = &mut acc[onh_sector(p.x, p.y)];
        a.0 += strain[i];
        a.1 += 1;
        if cloud.tissue()[i] == Tissue::Rnfl {
            a.2 += cloud.thickness()[i];
            a.3 += 1;
        }
    }
    Ok(acc.map(|(e, ne, t, nt)| (ne > 0 && nt > 0).then(|| (e / ne as f64, t / nt as f64))))
}

/// Planted defect score of one field location before noise.
pub fn defect_logit(model: &LabelModel, strain: f64, rnfl_mm: f64, severity: f64) -> f64 {
    model.strain * strain - model.thickness * rnfl_mm + model.severity * severity + model.offset
}

/// Draw a defect map whose per-location probability rises with the mean
/// strain and falls with the mean RNFL thickness of the location's ONH sector.
pub fn plant_vf_labels<R: Rng + ?Sized>(
    cloud: &OnhPointCloud,
    sector_map: &[u8],
    severity: f64,
    model: &LabelModel,
    rng: &mut R,
) -> Result<VisualFieldMap> {
    if cloud.frame() != Frame::BmoAligned {
        return Err(Error::invalid("labels are planted on a BMO-aligned cloud"));
    }
    if sector_map.len() != VF_POINTS {
        return Err(Error::LengthMismatch { expected: VF_POINTS, actual: sector_map.len() });
    }
    let means = sector_means(cloud)?;
    let noise = Normal::new(0.0, model.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut labels = Vec::with_capacity(VF_POINTS);
    let mut probs = Vec::with_capacity(VF_POINTS);
    for &s in sector_map {
        let sector = means.get(s as usize).ok_or_else(|| Error::invalid("sector index out of range"))?;
        // draw regardless so each location consumes the same randomness
        let eps: f64 = noise.sample(rng);
        let u: f64 = rng.random();
        match sector {
            Some((strain, rnfl)) => {
                let logit = defect_logit(model, *strain, *rnfl, severity) + eps;
                let p = (1.0 / (1.0 + (-logit).exp())).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
                labels.push((u < p) as u8);
                probs.push(p);
            }
            None => {
                labels.push(0);
                probs.push(PROB_FLOOR);
            }
        }
    }
    VisualFieldMap::new(labels, Some(probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::sectors::default_sector_map;
    use crate::seed;
    use nalgebra::Point3;

    /// Ring of RNFL points, `per` per sector, with sector-wise strain.
    fn ring(strain_of: impl Fn(usize) -> f64, thickness: f64, skip: Option<usize>) -> OnhPointCloud {
        let mut points = Vec::new();
        let mut strain = Vec::new();
        for s in 0..SECTORS {
            if Some(s) == skip {
                continue;
            }
            for k in 0..10 {
                let a = (s as f64 * 60.0 + 3.0 + k as f64 * 5.0).to_radians();
                points.push(Point3::new(a.cos(), a.sin(), 0.0));
                strain.push(strain_of(s));
            }
        }
        let n = points.len();
        OnhPointCloud::new(points, vec![Tissue::Rnfl; n], vec![thickness; n], Some(strain), Frame::BmoAligned)
            .unwrap()
    }

    #[test]
    fn strain_knockout_is_sector_uniform() {
        let model = LabelModel { strain: 0.0, noise_sd: 0.0, ..LabelModel::default() };
        let cloud = ring(|s| 0.01 * s as f64, 0.1, None);
        let map = plant_vf_labels(&cloud, &default_sector_map(), 8.0, &model, &mut seed::rng(0)).unwrap();
        let p = map.probs.unwrap();
        assert!(p.iter().all(|&q| q == p[0]));
    }

    #[test]
    fn more_strain_raises_score() {
        let model = LabelModel { noise_sd: 0.0, ..LabelModel::default() };
        let base = ring(|_| 0.01, 0.1, None);
        let doubled = ring(|s| if s == 2 { 0.02 } else { 0.01 }, 0.1, None);
        let map = default_sector_map();
        let a = plant_vf_labels(&base, &map, 5.0, &model, &mut seed::rng(1)).unwrap().probs.unwrap();
        let b = plant_vf_labels(&doubled, &map, 5.0, &model, &mut seed::rng(1)).unwrap().probs.unwrap();
        for j in 0..VF_POINTS {
            if map[j] == 2 {
                assert!(b[j] > a[j]);
            } else {
                assert_eq!(b[j], a[j]);
            }
        }
    }

    #[test]
    fn empty_sector_is_non_defect() {
        let model = LabelModel { offset: 50.0, ..LabelModel::default() };
        let cloud = ring(|_| 0.02, 0.05, Some(4));
        let map = default_sector_map();
        let vf = plant_vf_labels(&cloud, &map, 10.0, &model, &mut seed::rng(2)).unwrap();
        for (label, sector) in vf.labels.iter().zip(&map) {
            assert_eq!(*label, (*sector != 4) as u8);
        }
    }

    #[test]
    fn reproducible() {
        let cloud = ring(|s| 0.005 * s as f64, 0.08, None);
        let m = LabelModel::default();
        let map = default_sector_map();
        let a = plant_vf_labels(&cloud, &map, 7.0, &m, &mut seed::rng(9)).unwrap();
        let b = plant_vf_labels(&cloud, &map, 7.0, &m, &mut seed::rng(9)).unwrap();
        assert_eq!(a, b);
    }
}
