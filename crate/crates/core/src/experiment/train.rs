use std::collections::HashMap;

use log::{debug, info};
use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::augment::{augment, AugmentConfig};
use super::config::RunConfig;
use super::data::{id_tag, FeatureStats, Sample};
use super::metrics::{confusion, Metrics};
use super::split::Fold;
use crate::error::{Error, Result};
use crate::geometry::resample;
use crate::pointnet::{
    adam_step, batch_gradient, bce_loss, forward, init_params, predict, AdamState, ModelParams,
};
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean loss over the epoch's augmented training batches.
    pub train_bce: f64,
    pub val_bce: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub seed: u64,
    pub config_hash: String,
    pub use_strain: bool,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub initial_train_bce: f64,
    pub initial_val_bce: f64,
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_bce: f64,
    pub test: Metrics,
    pub feature_stats: FeatureStats,
}

impl FoldReport {
    pub fn best(&self) -> &EpochLog {
        &self.epochs[self.best_epoch - 1]
    }
}

/// A cloud prepared for scoring: standardized features and true labels.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
}

/// Fixed, unaugmented resampling used for validation and test scoring.
pub fn eval_item(sample: &Sample, stats: &FeatureStats, cfg: &RunConfig) -> Result<EvalItem> {
    let mut rng = seed::rng_for(cfg.seed, &[stream::EVAL_SAMPLE, id_tag(&sample.id)]);
    let cloud = resample(&sample.cloud, cfg.points, &mut rng)?;
    Ok(EvalItem { features: stats.features(&cloud, cfg.use_strain), labels: sample.labels.labels.clone() })
}

pub fn mean_bce(params: &ModelParams, items: &[EvalItem]) -> Result<f64> {
    if items.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for item in items {
        total += bce_loss(&forward(params, item.features.view())?, &item.labels)?;
    }
    Ok(total / items.len() as f64)
}

/// Threshold the predicted probabilities and pool the confusion counts.
pub fn evaluate(params: &ModelParams, test: &[EvalItem], threshold: f64) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut pred = Vec::with_capacity(test.len());
    for item in test {
        pred.push(predict(&forward(params, item.features.view())?, threshold)?);
    }
    let truth: Vec<Vec<u8>> = test.iter().map(|i| i.labels.clone()).collect();
    confusion(&pred, &truth)
}

fn lookup<'a>(by_id: &HashMap<&str, &'a Sample>, ids: &[String]) -> Result<Vec<&'a Sample>> {
    ids.iter()
        .map(|id| {
            by_id.get(id.as_str()).copied().ok_or_else(|| Error::invalid(format!("unknown subject {id}")))
        })
        .collect()
}

/// Train one fold with Adam and augmentation, keeping the snapshot with the
/// lowest validation BCE, then score it on the fold's test slice.
pub fn train_model(
    dataset: &[Sample],
    fold: &Fold,
    fold_index: usize,
    cfg: &RunConfig,
) -> Result<(ModelParams, FoldReport)> {
    cfg.validate()?;
    let by_id: HashMap<&str, &Sample> = dataset.iter().map(|s| (s.id.as_str(), s)).collect();
    let train = lookup(&by_id, &fold.train)?;
    let val = lookup(&by_id, &fold.val)?;
    let test = lookup(&by_id, &fold.test)?;
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if cfg.use_strain && train.iter().any(|s| s.cloud.strain().is_none()) {
        return Err(Error::invalid("strain arm requires strain-attributed clouds"));
    }

    let stats = FeatureStats::fit(train.iter().map(|s| &s.cloud));
    let prep = |set: &[&Sample]| -> Result<Vec<EvalItem>> {
        set.iter().map(|s| eval_item(s, &stats, cfg)).collect()
    };
    let train_eval = prep(&train)?;
    let val_eval = prep(&val)?;
    let test_eval = prep(&test)?;

    let fold_tag = fold_index as u64;
    let mut params = init_params(&cfg.arch, &mut seed::rng_for(cfg.seed, &[stream::INIT, fold_tag]))?;
    let mut adam = AdamState::new(params.len());
    let initial_train_bce = mean_bce(&params, &train_eval)?;
    let initial_val_bce = mean_bce(&params, &val_eval)?;
    let aug_cfg = AugmentConfig { max_crop_deg: cfg.max_crop_deg, points: cfg.points };

    let mut best = (params.clone(), 0usize, f64::INFINITY);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        let epoch_tag = epoch as u64;
        order.sort_unstable();
        order.shuffle(&mut seed::rng_for(cfg.seed, &[stream::SHUFFLE, fold_tag, epoch_tag]));
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch).enumerate() {
            let mut feats = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let s = train[i];
                let mut rng = seed::rng_for(cfg.seed, &[stream::AUGMENT, fold_tag, epoch_tag, id_tag(&s.id)]);
                let cloud = augment(&s.cloud, &mut rng, &aug_cfg)?;
                feats.push(stats.features(&cloud, cfg.use_strain));
            }
            let batch: Vec<_> = feats
                .iter()
                .zip(chunk)
                .map(|(f, &i)| (f.view(), train[i].labels.labels.as_slice()))
                .collect();
            let (loss, mut grads) = batch_gradient(&params, &batch)?;
            if !loss.is_finite() || grads.0.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: b, loss });
            }
            grads.scale(1.0 / chunk.len() as f64);
            adam_step(&mut params, &grads, &mut adam, cfg.lr)?;
            epoch_loss += loss;
        }
        let train_bce = epoch_loss / train.len() as f64;
        let val_bce = mean_bce(&params, &val_eval)?;
        if !val_bce.is_finite() && !val_eval.is_empty() {
            return Err(Error::Divergence { epoch, batch: usize::MAX, loss: val_bce });
        }
        debug!(
            "fold {fold_index} strain={} epoch {epoch}: train {train_bce:.5} val {val_bce:.5}",
            cfg.use_strain
        );
        log.push(EpochLog { epoch, train_bce, val_bce });
        // without a validation set the last epoch wins
        if val_bce < best.2 || val_eval.is_empty() {
            best = (params.clone(), epoch, val_bce);
        }
    }
    let (params, best_epoch, best_val_bce) = best;
    let test_metrics = evaluate(&params, &test_eval, cfg.threshold)?;
    info!(
        "fold {fold_index} strain={}: best epoch {best_epoch}, val {best_val_bce:.4}, test F1 {:.4}",
        cfg.use_strain, test_metrics.f1
    );
    let report = FoldReport {
        fold: fold_index,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        use_strain: cfg.use_strain,
        n_train: train.len(),
        n_val: val.len(),
        n_test: test.len(),
        initial_train_bce,
        initial_val_bce,
        epochs: log,
        best_epoch,
        best_val_bce,
        test: test_metrics,
        feature_stats: stats,
    };
    Ok((params, report))
}
