use std::path::{Path, PathBuf};

use onh_core::cohort::CohortSpec;
use onh_core::dvc::DvcConfig;
use onh_core::experiment::RunConfig;
use onh_core::geometry::{DEFAULT_CROP_RADIUS_MM, DEFAULT_KNN_K};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub crop_radius_mm: f64,
    pub knn_k: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { crop_radius_mm: DEFAULT_CROP_RADIUS_MM, knn_k: DEFAULT_KNN_K }
    }
}

/// Stages executed by `run`, in pipeline order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageToggles {
    pub gen_cohort: bool,
    pub extract: bool,
    pub dvc: bool,
    pub attach: bool,
    pub train: bool,
    pub ablate: bool,
    pub report: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            gen_cohort: true,
            extract: true,
            dvc: true,
            attach: true,
            train: false,
            ablate: true,
            report: true,
        }
    }
}

/// Whole-pipeline configuration. The top-level `seed` is propagated into the
/// cohort and training sections, replacing theirs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Defaults to `<out_dir>/cohort`.
    pub cohort_dir: Option<PathBuf>,
    pub cohort: CohortSpec,
    pub geometry: GeometryConfig,
    pub dvc: DvcConfig,
    pub training: RunConfig,
    pub stages: StageToggles,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 2024,
            out_dir: PathBuf::from("onh-run"),
            cohort_dir: None,
            cohort: CohortSpec::default(),
            geometry: GeometryConfig::default(),
            dvc: DvcConfig::default(),
            training: RunConfig::default(),
            stages: StageToggles::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub no_strain: bool,
}

impl PipelineConfig {
    /// Parse JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            CliError::Config(format!("at `{field}`: {}", e.inner()))
        })
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_json(&text)?
            }
            None => Self::default(),
        };
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &overrides.out {
            cfg.out_dir = out.clone();
        }
        if overrides.no_strain {
            cfg.training.use_strain = false;
        }
        cfg.cohort.seed = cfg.seed;
        cfg.training.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let field = |name: &str, e: onh_core::Error| CliError::Config(format!("at `{name}`: {e}"));
        self.cohort.validate().map_err(|e| field("cohort", e))?;
        self.training.validate().map_err(|e| field("training", e))?;
        if !(self.geometry.crop_radius_mm > 0.0 && self.geometry.crop_radius_mm.is_finite()) {
            return Err(CliError::Config("at `geometry.crop_radius_mm`: must be > 0".into()));
        }
        if self.geometry.knn_k == 0 {
            return Err(CliError::Config("at `geometry.knn_k`: must be >= 1".into()));
        }
        let d = &self.dvc;
        if d.block < 5 || d.search < 1 || d.stride < 1 {
            return Err(CliError::Config("at `dvc`: need block >= 5, search >= 1, stride >= 1".into()));
        }
        if d.block + 2 * d.search > self.cohort.dims.iter().copied().min().unwrap_or(0) {
            return Err(CliError::Config(
                "at `dvc.block`: block plus search window exceeds the volume".into(),
            ));
        }
        if !(d.smooth_sigma >= 0.0) || !(-1.0..=1.0).contains(&d.min_confidence) {
            return Err(CliError::Config("at `dvc`: smooth_sigma >= 0 and min_confidence in [-1, 1]".into()));
        }
        if self.training.folds * 2 > self.cohort.n_subjects {
            return Err(CliError::Config("at `training.folds`: cohort too small for the fold count".into()));
        }
        Ok(())
    }

    pub fn cohort_dir(&self) -> PathBuf {
        self.cohort_dir.clone().unwrap_or_else(|| self.out_dir.join("cohort"))
    }
}
