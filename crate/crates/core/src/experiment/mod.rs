//! Cross-validated training, evaluation and the strain ablation.

mod ablation;
mod augment;
mod config;
mod data;
mod metrics;
mod split;
mod stats;
mod train;

pub use ablation::{
    run_ablation, split_hash, summary_table, AblationReport, ArmSummary, REFERENCE_F1_WITHOUT_STRAIN,
    REFERENCE_F1_WITH_STRAIN,
};
pub use augment::{augment, AugmentConfig, MAX_CROP_RETRIES, MIN_POINTS_AFTER_CROP};
pub use config::{
    hash_json, RunConfig, DEFAULT_FOLDS, SIGNIFICANCE_LEVEL, TEST_FRACTION, TRAIN_FRACTION, VAL_FRACTION,
};
pub use data::{id_tag, FeatureStats, Sample};
pub use metrics::{confusion, Metrics};
pub use split::{make_splits, Fold, SplitPlan};
pub use stats::{ln_gamma, mean_sd, paired_t_test, regularized_incomplete_beta, student_t_two_sided, TTest};
pub use train::{eval_item, evaluate, mean_bce, train_model, EpochLog, EvalItem, FoldReport};
