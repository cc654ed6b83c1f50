use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nalgebra::Point3;
use onh_core::cohort::{
    aligned_cloud, generate_subject, subject_id, CohortSpec, Displacement, OnhGeometry, VfPoint, VF_24_2,
};
use onh_core::dvc::{attach_strain, track};
use onh_core::experiment::{
    hash_json, make_splits, run_ablation, summary_table, train_model, AblationReport, FoldReport, Sample,
};
use onh_core::geometry::BmoPlane;
use onh_core::io::{self, sha256_hex, CheckpointMeta};
use onh_core::pointnet::VisualFieldMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{upstream, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    GenCohort,
    Extract,
    Dvc,
    Attach,
    Train,
    Ablate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::GenCohort,
        Stage::Extract,
        Stage::Dvc,
        Stage::Attach,
        Stage::Train,
        Stage::Ablate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenCohort => "gen-cohort",
            Stage::Extract => "extract",
            Stage::Dvc => "dvc",
            Stage::Attach => "attach",
            Stage::Train => "train",
            Stage::Ablate => "ablate",
            Stage::Report => "report",
        }
    }
}

/// Per-subject truth written by `gen-cohort`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectFile {
    pub id: String,
    pub seed: u64,
    pub md_db: f64,
    pub severity: f64,
    pub geometry: OnhGeometry,
    pub load: Displacement,
    pub bmo_ring_mm: Vec<[f64; 3]>,
    pub labels: VisualFieldMap,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortManifest {
    pub config_hash: String,
    pub spec: CohortSpec,
    pub subjects: Vec<String>,
    pub sector_table: Vec<VfPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneFile {
    pub plane: BmoPlane,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationArtifact {
    pub config_hash: String,
    pub input_hash: String,
    pub report: AblationReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainArtifact {
    pub config_hash: String,
    pub input_hash: String,
    pub folds: Vec<FoldReport>,
}

/// Completion record of a stage: the config hash and the hash of every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stamp {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub outputs: BTreeMap<String, String>,
    pub elapsed_s: f64,
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    /// Re-run stages even when their stamp is current.
    pub force: bool,
}

fn stale(path: &Path, stage: Stage) -> CliError {
    CliError::StaleArtifact { path: path.to_path_buf(), stage: stage.name().into() }
}

fn check_hash(path: &Path, found: &str, expected: &str, producer: Stage) -> CliResult<()> {
    if found != expected {
        return Err(stale(path, producer));
    }
    Ok(())
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, force: bool) -> Self {
        Pipeline { cfg, force }
    }

    fn out(&self) -> &Path {
        &self.cfg.out_dir
    }

    fn cohort_manifest_path(&self) -> PathBuf {
        self.cfg.cohort_dir().join("cohort.json")
    }

    fn subject_path(&self, id: &str, file: &str) -> PathBuf {
        self.cfg.cohort_dir().join(id).join(file)
    }

    fn stage_path(&self, dir: &str, file: String) -> PathBuf {
        self.out().join(dir).join(file)
    }

    fn stamp_path(&self, stage: Stage) -> PathBuf {
        self.out().join("stamps").join(format!("{}.json", stage.name()))
    }

    pub fn ablation_report_path(&self) -> PathBuf {
        self.out().join("ablation").join("report.json")
    }

    pub fn report_path(&self) -> PathBuf {
        self.out().join("report.txt")
    }

    fn arm(&self) -> &'static str {
        if self.cfg.training.use_strain {
            "strain"
        } else {
            "no-strain"
        }
    }

    // configuration hashes, each chained to its inputs

    pub fn stage_hash(&self, stage: Stage) -> String {
        let c = &self.cfg;
        match stage {
            Stage::GenCohort => hash_json(&("gen-cohort", &c.cohort)),
            Stage::Extract => {
                hash_json(&("extract", self.stage_hash(Stage::GenCohort), c.geometry.crop_radius_mm))
            }
            Stage::Dvc => hash_json(&("dvc", self.stage_hash(Stage::GenCohort), &c.dvc)),
            Stage::Attach => hash_json(&(
                "attach",
                self.stage_hash(Stage::Extract),
                self.stage_hash(Stage::Dvc),
                c.geometry.knn_k,
            )),
            Stage::Train => hash_json(&("train", self.stage_hash(Stage::Attach), c.training.hash())),
            Stage::Ablate => hash_json(&("ablate", self.stage_hash(Stage::Attach), c.training.hash())),
            Stage::Report => hash_json(&("report", self.stage_hash(Stage::Ablate))),
        }
    }

    fn read_stamp(&self, stage: Stage) -> Option<Stamp> {
        io::read_json(&self.stamp_path(stage)).ok()
    }

    fn up_to_date(&self, stage: Stage, hash: &str) -> bool {
        let Some(stamp) = self.read_stamp(stage) else { return false };
        stamp.config_hash == hash
            && stamp
                .outputs
                .iter()
                .all(|(path, digest)| std::fs::read(path).map(|b| sha256_hex(&b) == *digest).unwrap_or(false))
    }

    /// Run one stage unless its outputs are current. Returns whether it ran.
    pub fn run_stage(&self, stage: Stage) -> CliResult<bool> {
        let hash = self.stage_hash(stage);
        if !self.force && stage != Stage::Report && self.up_to_date(stage, &hash) {
            info!("{}: up to date (config {})", stage.name(), &hash[..12]);
            return Ok(false);
        }
        info!("{}: config {} seed {}", stage.name(), &hash[..12], self.cfg.seed);
        let start = Instant::now();
        let outputs = match stage {
            Stage::GenCohort => self.gen_cohort(&hash)?,
            Stage::Extract => self.extract(&hash)?,
            Stage::Dvc => self.dvc(&hash)?,
            Stage::Attach => self.attach(&hash)?,
            Stage::Train => self.train(&hash)?,
            Stage::Ablate => self.ablate(&hash)?,
            Stage::Report => self.report(&hash)?,
        };
        let mut digests = BTreeMap::new();
        for path in outputs {
            let bytes = io::read_bytes(&path)?;
            digests.insert(path.to_string_lossy().into_owned(), sha256_hex(&bytes));
        }
        let stamp = Stamp {
            stage: stage.name().into(),
            config_hash: hash,
            seed: self.cfg.seed,
            outputs: digests,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        io::write_json(&self.stamp_path(stage), &stamp)?;
        Ok(true)
    }

    /// Every enabled stage in pipeline order.
    pub fn run_all(&self) -> CliResult<()> {
        let t = &self.cfg.stages;
        let enabled = [t.gen_cohort, t.extract, t.dvc, t.attach, t.train, t.ablate, t.report];
        for (stage, on) in Stage::ALL.into_iter().zip(enabled) {
            if on {
                self.run_stage(stage)?;
            }
        }
        Ok(())
    }

    // stage bodies

    fn gen_cohort(&self, hash: &str) -> CliResult<Vec<PathBuf>> {
        let spec = &self.cfg.cohort;
        let per_subject: Vec<CliResult<Vec<PathBuf>>> = (0..spec.n_subjects)
            .into_par_iter()
            .map(|i| {
                let rec = generate_subject(spec, i)?;
                let ph = &rec.phantom;
                let base = self.subject_path(&rec.id, "baseline.json");
                let def = self.subject_path(&rec.id, "deformed.json");
                let subj = self.subject_path(&rec.id, "subject.json");
                io::write_volume(&base, &ph.baseline, hash)?;
                io::write_volume(&def, &ph.deformed, hash)?;
                let file = SubjectFile {
                    id: rec.id.clone(),
                    seed: rec.seed,
                    md_db: ph.md_db,
                    severity: ph.severity(),
                    geometry: ph.geometry.clone(),
                    load: ph.load,
                    bmo_ring_mm: ph.bmo_ring.iter().map(|p| [p.x, p.y, p.z]).collect(),
                    labels: rec.labels.clone(),
                    config_hash: hash.into(),
                };
                io::write_json(&subj, &file)?;
                Ok(vec![base.with_extension("bin"), def.with_extension("bin"), base, def, subj])
            })
            .collect();
        let mut outputs = Vec::new();
        for r in per_subject {
            outputs.extend(r?);
        }
        let manifest = CohortManifest {
            config_hash: hash.into(),
            spec: spec.clone(),
            subjects: (0..spec.n_subjects).map(subject_id).collect(),
            sector_table: VF_24_2.to_vec(),
        };
        let path = self.cohort_manifest_path();
        io::write_json(&path, &manifest)?;
        outputs.push(path);
        Ok(outputs)
    }

    fn cohort(&self) -> CliResult<CohortManifest> {
        let path = self.cohort_manifest_path();
        let m: CohortManifest = io::read_json(&path).map_err(|e| upstream(e, "gen-cohort"))?;
        check_hash(&path, &m.config_hash, &self.stage_hash(Stage::GenCohort), Stage::GenCohort)?;
        Ok(m)
    }

    fn subject(&self, id: &str) -> CliResult<SubjectFile> {
        let path = self.subject_path(id, "subject.json");
        let s: SubjectFile = io::read_json(&path).map_err(|e| upstream(e, "gen-cohort"))?;
        check_hash(&path, &s.config_hash, &self.stage_hash(Stage::GenCohort), Stage::GenCohort)?;
        Ok(s)
    }

    fn volume(&self, id: &str, which: &str) -> CliResult<onh_core::LabeledVolume> {
        let path = self.subject_path(id, which);
        let (vol, m) = io::read_volume(&path).map_err(|e| upstream(e, "gen-cohort"))?;
        check_hash(&path, &m.config_hash, &self.stage_hash(Stage::GenCohort), Stage::GenCohort)?;
        Ok(vol)
    }

    // Taken from the configuration so that a missing cohort is reported
    // by the first volume a stage needs.
    fn subject_ids(&self) -> Vec<String> {
        (0..self.cfg.cohort.n_subjects).map(subject_id).collect()
    }

    fn per_subject<F>(&self, f: F) -> CliResult<Vec<PathBuf>>
    where
        F: Fn(&str) -> CliResult<Vec<PathBuf>> + Sync,
    {
        let parts: Vec<CliResult<Vec<PathBuf>>> = self.subject_ids().par_iter().map(|id| f(id)).collect();
        let mut outputs = Vec::new();
        for p in parts {
            outputs.extend(p?);
        }
        Ok(outputs)
    }

    fn extract(&self, hash: &str) -> CliResult<Vec<PathBuf>> {
        self.per_subject(|id| {
            let vol = self.volume(id, "baseline.json")?;
            let subject = self.subject(id)?;
            let ring: Vec<Point3<f64>> = subject.bmo_ring_mm.iter().map(|p| Point3::from(*p)).collect();
            let (cloud, plane) = aligned_cloud(&vol, &ring, self.cfg.geometry.crop_radius_mm)?;
            let cloud_path = self.stage_path("clouds", format!("{id}.cloud"));
            let plane_path = self.stage_path("clouds", format!("{id}.plane.json"));
            io::write_cloud(&cloud_path, &cloud, hash)?;
            io::write_json(&plane_path, &PlaneFile { plane, config_hash: hash.into() })?;
            Ok(vec![cloud_path, plane_path])
        })
    }

    fn dvc(&self, hash: &str) -> CliResult<Vec<PathBuf>> {
        self.per_subject(|id| {
            let base = self.volume(id, "baseline.json")?;
            let def = self.volume(id, "deformed.json")?;
            let (raw, strain) = track(&base, &def, &self.cfg.dvc)?;
            let disp_path = self.stage_path("dvc", format!("{id}.displacement.json"));
            let strain_path = self.stage_path("dvc", format!("{id}.strain.json"));
            io::write_displacement(&disp_path, &raw, base.spacing(), hash)?;
            io::write_strain(&strain_path, &strain, hash)?;
            Ok(vec![
                disp_path.with_extension("bin"),
                strain_path.with_extension("bin"),
                disp_path,
                strain_path,
            ])
        })
    }

    fn attach(&self, hash: &str) -> CliResult<Vec<PathBuf>> {
        let extract_hash = self.stage_hash(Stage::Extract);
        let dvc_hash = self.stage_hash(Stage::Dvc);
        self.per_subject(|id| {
            let cloud_path = self.stage_path("clouds", format!("{id}.cloud"));
            let (cloud, header) = io::read_cloud(&cloud_path).map_err(|e| upstream(e, "extract"))?;
            check_hash(&cloud_path, &header.config_hash, &extract_hash, Stage::Extract)?;
            let plane_path = self.stage_path("clouds", format!("{id}.plane.json"));
            let plane: PlaneFile = io::read_json(&plane_path).map_err(|e| upstream(e, "extract"))?;
            check_hash(&plane_path, &plane.config_hash, &extract_hash, Stage::Extract)?;
            let strain_path = self.stage_path("dvc", format!("{id}.strain.json"));
            let (strain, m) = io::read_strain(&strain_path).map_err(|e| upstream(e, "dvc"))?;
            check_hash(&strain_path, &m.config_hash, &dvc_hash, Stage::Dvc)?;
            let attributed =
                attach_strain(&cloud, &strain, &plane.plane.alignment(), self.cfg.geometry.knn_k)?;
            let out = self.stage_path("attributed", format!("{id}.cloud"));
            io::write_cloud(&out, &attributed, hash)?;
            Ok(vec![out])
        })
    }

    /// Attributed clouds paired with their planted field maps.
    pub fn dataset(&self) -> CliResult<Vec<Sample>> {
        let attach_hash = self.stage_hash(Stage::Attach);
        self.cohort()?;
        self.subject_ids()
            .par_iter()
            .map(|id| {
                let path = self.stage_path("attributed", format!("{id}.cloud"));
                let (cloud, header) = io::read_cloud(&path).map_err(|e| upstream(e, "attach"))?;
                check_hash(&path, &header.config_hash, &attach_hash, Stage::Attach)?;
                let labels = self.subject(id)?.labels;
                Ok(Sample { id: id.clone(), cloud, labels })
            })
            .collect()
    }

    fn train(&self, hash: &str) -> CliResult<Vec<PathBuf>> {
        let data = self.dataset()?;
        let run = &self.cfg.training;
        let subjects: Vec<(String, usize)> =
            data.iter().map(|s| (s.id.clone(), s.labels.defect_count())).collect();
        let plan = make_splits(&subjects, run.folds, run.seed)?;
        let trained: Vec<CliResult<_>> =
            (0..run.folds).into_par_iter().map(|f| Ok(train_model(&data, &plan.folds[f], f, run)?)).collect();
        let dir = self.out().join("train").join(self.arm());
        let mut outputs = Vec::new();
        let mut reports = Vec::new();
        for (f, result) in trained.into_iter().enumerate() {
            let (params, report) = result?;
            let path = dir.join(format!("fold{f}.json"));
            let meta = CheckpointMeta {
                arch: run.arch.clone(),
                parameters: params.len(),
                feature_stats: report.feature_stats,
                use_strain: run.use_strain,
                seed: run.seed,
                fold: f,
                best_epoch: report.best_epoch,
            };
            io::write_checkpoint(&path, &params, meta, hash)?;
            outputs.push(path.with_extension("bin"));
            outputs.push(path);
            reports.push(report);
        }
        let path = dir.join("reports.json");
        let artifact = TrainArtifact {
            config_hash: hash.into(),
            input_hash: self.stage_hash(Stage::Attach),
            folds: reports,
        };
        io::write_json(&path, &artifact)?;
        outputs.push(path);
        Ok(outputs)
    }

    fn ablate(&self, hash: &str) -> CliResult<Vec<PathBuf>> {
        let data = self.dataset()?;
        let report = run_ablation(&data, &self.cfg.training)?;
        let summary = summary_table(&report);
        let artifact =
            AblationArtifact { config_hash: hash.into(), input_hash: self.stage_hash(Stage::Attach), report };
        let json = self.ablation_report_path();
        let txt = json.with_file_name("summary.txt");
        io::write_json(&json, &artifact)?;
        io::atomic_write(&txt, summary.as_bytes())?;
        Ok(vec![json, txt])
    }

    fn report(&self, _hash: &str) -> CliResult<Vec<PathBuf>> {
        let path = self.ablation_report_path();
        let artifact: AblationArtifact = io::read_json(&path).map_err(|e| upstream(e, "ablate"))?;
        check_hash(&path, &artifact.config_hash, &self.stage_hash(Stage::Ablate), Stage::Ablate)?;
        check_hash(&path, &artifact.input_hash, &self.stage_hash(Stage::Attach), Stage::Attach)?;
        let mut text = summary_table(&artifact.report);
        let _ = writeln!(text);
        for stage in Stage::ALL {
            if stage == Stage::Report {
                continue;
            }
            if let Some(stamp) = self.read_stamp(stage) {
                let _ = writeln!(text, "[timing] {:<10} {:>9.2} s", stamp.stage, stamp.elapsed_s);
            }
        }
        let out = self.report_path();
        io::atomic_write(&out, text.as_bytes())?;
        Ok(vec![out])
    }
}
