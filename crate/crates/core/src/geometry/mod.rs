//! Segmented volume to aligned, cropped, attributed point cloud.

mod crop;
mod extract;
pub mod kdtree;
mod knn;
mod plane;
mod resample;

pub use crop::{cylindrical_crop, DEFAULT_CROP_RADIUS_MM};
pub use extract::extract_point_cloud;
pub use knn::{knn_interpolate, ScalarSamples, DEFAULT_KNN_K};
pub use plane::{align_to_bmo, fit_bmo_plane, BmoPlane};
pub use resample::{resample, resample_indices, DEFAULT_RESAMPLE_POINTS};
