//! Optic nerve head biomechanics-function pipeline.
//!
//! Segmented OCT volumes are turned into BMO-aligned point clouds carrying
//! tissue thickness, digital volume correlation between a baseline and an
//! IOP-elevated scan yields an effective strain attribute per point, and a
//! PointNet-style network maps each attributed cloud to the 52 points of a
//! 24-2 visual field defect map. The [`experiment`] module runs the
//! with/without-strain comparison over rotated cross-validation folds, and
//! [`cohort`] synthesizes subjects with a known strain-to-defect link so the
//! whole chain can be checked without clinical data.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod cohort;
pub mod dvc;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod pointnet;
pub mod seed;
pub mod volume;

pub use cloud::{Frame, OnhPointCloud};
pub use error::{Error, Result};
pub use volume::{LabeledVolume, Tissue};
