use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{hash_json, RunConfig, SIGNIFICANCE_LEVEL};
use super::data::Sample;
use super::split::{make_splits, SplitPlan};
use super::stats::{mean_sd, paired_t_test, TTest};
use super::train::{train_model, FoldReport};
use crate::error::{Error, Result};

/// Clinical-cohort F1 values the synthetic comparison is set against. They
/// cannot be reproduced without the original data and are reported as context.
pub const REFERENCE_F1_WITH_STRAIN: (f64, f64) = (0.76, 0.02);
pub const REFERENCE_F1_WITHOUT_STRAIN: (f64, f64) = (0.71, 0.02);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub use_strain: bool,
    pub config_hash: String,
    pub f1: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub subject_mean_f1: Vec<f64>,
    pub mean_f1: f64,
    pub sd_f1: f64,
    pub mean_subject_f1: f64,
}

impl ArmSummary {
    fn new(cfg: &RunConfig, reports: &[&FoldReport]) -> Self {
        let f1: Vec<f64> = reports.iter().map(|r| r.test.f1).collect();
        let subject_mean_f1: Vec<f64> = reports.iter().map(|r| r.test.subject_mean_f1).collect();
        let (mean_f1, sd_f1) = mean_sd(&f1);
        ArmSummary {
            use_strain: cfg.use_strain,
            config_hash: cfg.hash(),
            precision: reports.iter().map(|r| r.test.precision).collect(),
            recall: reports.iter().map(|r| r.test.recall).collect(),
            mean_subject_f1: mean_sd(&subject_mean_f1).0,
            subject_mean_f1,
            f1,
            mean_f1,
            sd_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub subjects: usize,
    pub comparison_hash: String,
    pub split_hash: String,
    pub strain: ArmSummary,
    pub no_strain: ArmSummary,
    pub t_test: TTest,
    pub alpha: f64,
    /// Strain arm has the higher mean F1 and the paired test is significant.
    pub pass: bool,
    pub reference_with_strain: (f64, f64),
    pub reference_without_strain: (f64, f64),
    pub folds: Vec<FoldReport>,
}

/// Train and score the strain arm and the zeroed-strain arm on the same
/// splits and seeds, then compare per-fold micro-F1 with a paired t-test.
///
/// The treatment arm uses `cfg.use_strain`, so passing a config with the flag
/// cleared runs two identical arms (a null comparison).
pub fn run_ablation(dataset: &[Sample], cfg: &RunConfig) -> Result<AblationReport> {
    cfg.validate()?;
    if cfg.use_strain && dataset.iter().any(|s| s.cloud.strain().is_none()) {
        return Err(Error::invalid("ablation requires strain-attributed clouds"));
    }
    let subjects: Vec<(String, usize)> =
        dataset.iter().map(|s| (s.id.clone(), s.labels.defect_count())).collect();
    let plan = make_splits(&subjects, cfg.folds, cfg.seed)?;
    let treatment = cfg.clone();
    let control = RunConfig { use_strain: false, ..cfg.clone() };
    debug_assert_eq!(treatment.comparison_hash(), control.comparison_hash());

    let jobs: Vec<(usize, &RunConfig)> =
        (0..cfg.folds).flat_map(|f| [(f, &treatment), (f, &control)]).collect();
    let results: Vec<Result<FoldReport>> =
        jobs.par_iter().map(|&(f, c)| train_model(dataset, &plan.folds[f], f, c).map(|(_, r)| r)).collect();
    let folds: Vec<FoldReport> = results.into_iter().collect::<Result<_>>()?;
    let arm = |use_strain: bool| -> Vec<&FoldReport> {
        // jobs alternate treatment, control
        folds.iter().skip(if use_strain { 0 } else { 1 }).step_by(2).collect()
    };
    let strain = ArmSummary::new(&treatment, &arm(true));
    let no_strain = ArmSummary::new(&control, &arm(false));
    let t_test = paired_t_test(&strain.f1, &no_strain.f1)?;
    let pass = strain.mean_f1 > no_strain.mean_f1 && t_test.p < SIGNIFICANCE_LEVEL;
    Ok(AblationReport {
        seed: cfg.seed,
        subjects: dataset.len(),
        comparison_hash: treatment.comparison_hash(),
        split_hash: split_hash(&plan),
        strain,
        no_strain,
        t_test,
        alpha: SIGNIFICANCE_LEVEL,
        pass,
        reference_with_strain: REFERENCE_F1_WITH_STRAIN,
        reference_without_strain: REFERENCE_F1_WITHOUT_STRAIN,
        folds,
    })
}

pub fn split_hash(plan: &SplitPlan) -> String {
    hash_json(plan)
}

/// Plain-text comparison table.
pub fn summary_table(r: &AblationReport) -> String {
    let mut s = String::new();
    let (rw, rws) = r.reference_with_strain;
    let (ro, ros) = r.reference_without_strain;
    let _ =
        writeln!(s, "strain ablation: {} subjects, {} folds, seed {}", r.subjects, r.strain.f1.len(), r.seed);
    let _ = writeln!(
        s,
        "clinical reference (not reproducible here): F1 {rw:.2} ± {rws:.2} with strain, {ro:.2} ± {ros:.2} without"
    );
    let _ = writeln!(s, "config {} | splits {}", &r.comparison_hash[..16], &r.split_hash[..16]);
    let _ = writeln!(s);
    let _ = writeln!(s, "fold  F1 strain  F1 no-strain  subj-F1 strain  subj-F1 no-strain");
    for f in 0..r.strain.f1.len() {
        let _ = writeln!(
            s,
            "{f:>4}  {:>9.4}  {:>12.4}  {:>14.4}  {:>17.4}",
            r.strain.f1[f], r.no_strain.f1[f], r.strain.subject_mean_f1[f], r.no_strain.subject_mean_f1[f]
        );
    }
    let _ = writeln!(
        s,
        "mean  {:.4} ± {:.4} (strain)  vs  {:.4} ± {:.4} (no strain)",
        r.strain.mean_f1, r.strain.sd_f1, r.no_strain.mean_f1, r.no_strain.sd_f1
    );
    let _ = writeln!(
        s,
        "paired t = {:.4}, df = {}, p = {:.6} (alpha {})",
        r.t_test.t, r.t_test.df, r.t_test.p, r.alpha
    );
    let _ = writeln!(
        s,
        "criterion (strain arm higher, p < {}): {}",
        r.alpha,
        if r.pass { "PASS" } else { "FAIL" }
    );
    s
}
