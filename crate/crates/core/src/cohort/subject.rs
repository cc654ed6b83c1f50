use rayon::prelude::*;

use super::labels::plant_vf_labels;
use super::phantom::{generate_phantom, subject_seed, Phantom};
use super::spec::CohortSpec;
use crate::cloud::OnhPointCloud;
use crate::dvc::{attach_strain, track, DvcConfig, StrainField};
use crate::error::Result;
use crate::experiment::Sample;
use crate::geometry::{
    align_to_bmo, cylindrical_crop, extract_point_cloud, fit_bmo_plane, BmoPlane, DEFAULT_CROP_RADIUS_MM,
};
use crate::pointnet::VisualFieldMap;
use crate::seed::{self, stream};
use crate::volume::LabeledVolume;
use nalgebra::Point3;

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub seed: u64,
    pub phantom: Phantom,
    pub labels: VisualFieldMap,
}

impl SubjectRecord {
    pub fn severity(&self) -> f64 {
        self.phantom.severity()
    }
}

pub fn subject_id(index: usize) -> String {
    format!("s{index:04}")
}

/// Extract, align to the fitted BMO plane and crop.
pub fn aligned_cloud(
    volume: &LabeledVolume,
    bmo_ring: &[Point3<f64>],
    crop_radius_mm: f64,
) -> Result<(OnhPointCloud, BmoPlane)> {
    let raw = extract_point_cloud(volume)?;
    let plane = fit_bmo_plane(bmo_ring)?;
    let aligned = align_to_bmo(&raw, &plane)?;
    Ok((cylindrical_crop(&aligned, crop_radius_mm)?, plane))
}

/// Aligned, cropped baseline cloud carrying the analytic effective strain.
pub fn truth_cloud(phantom: &Phantom, crop_radius_mm: f64) -> Result<OnhPointCloud> {
    let raw = extract_point_cloud(&phantom.baseline)?;
    let strain =
        raw.points().iter().map(|p| crate::dvc::effective_strain(&phantom.load.strain_at_mm(p))).collect();
    let raw = raw.with_strain(strain)?;
    let plane = fit_bmo_plane(&phantom.bmo_ring)?;
    cylindrical_crop(&align_to_bmo(&raw, &plane)?, crop_radius_mm)
}

pub fn generate_subject(spec: &CohortSpec, index: usize) -> Result<SubjectRecord> {
    let seed = subject_seed(spec, index);
    let phantom = generate_phantom(spec, seed)?;
    let truth = truth_cloud(&phantom, DEFAULT_CROP_RADIUS_MM)?;
    let labels = plant_vf_labels(
        &truth,
        &spec.sector_map,
        phantom.severity(),
        &spec.label_model,
        &mut seed::rng_for(seed, &[stream::LABELS]),
    )?;
    Ok(SubjectRecord { id: subject_id(index), seed, phantom, labels })
}

/// All subjects of a cohort, generated in parallel and returned in index order.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<SubjectRecord>> {
    spec.validate()?;
    (0..spec.n_subjects).into_par_iter().map(|i| generate_subject(spec, i)).collect()
}

/// Measured pipeline for one subject: DVC strain on the aligned, cropped
/// baseline cloud.
pub fn measure_subject(
    record: &SubjectRecord,
    dvc: &DvcConfig,
    crop_radius_mm: f64,
    k: usize,
) -> Result<(Sample, StrainField)> {
    let ph = &record.phantom;
    let (cloud, plane) = aligned_cloud(&ph.baseline, &ph.bmo_ring, crop_radius_mm)?;
    let (_, strain) = track(&ph.baseline, &ph.deformed, dvc)?;
    let cloud = attach_strain(&cloud, &strain, &plane.alignment(), k)?;
    Ok((Sample { id: record.id.clone(), cloud, labels: record.labels.clone() }, strain))
}
