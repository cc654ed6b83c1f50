//! Synthetic subjects with a planted strain-to-defect relationship.

mod labels;
mod phantom;
mod sectors;
mod spec;
mod subject;
mod warp;

pub use labels::{defect_logit, plant_vf_labels, sector_means};
pub use phantom::{
    generate_phantom, sample_md, subject_seed, OnhGeometry, Phantom, BMO_RING_POINTS, TEXTURE_SD,
    TEXTURE_SIGMA_VOXELS,
};
pub use sectors::{default_sector_map, onh_sector, VfPoint, SECTORS, SECTOR_WIDTH_DEG, VF_24_2};
pub use spec::{CohortSpec, LabelModel, DEFAULT_SUBJECTS, MD_MEAN_DB, MD_RANGE_DB, MD_SD_DB};
pub use subject::{
    aligned_cloud, generate_cohort, generate_subject, measure_subject, subject_id, truth_cloud, SubjectRecord,
};
pub use warp::{warp_volume, Displacement, OnhLoad, MAX_WARP_VOXELS};
