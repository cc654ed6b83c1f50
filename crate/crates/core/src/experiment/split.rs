use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, stream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Rotated train/val/test splits with disjoint test slices.
///
/// Subjects are shuffled once, ordered by defect-count tercile (stable, so the
/// shuffle decides order within a tercile) and dealt round-robin into
/// `2 * folds` slices. Fold `f` tests slice `f`, validates on slice
/// `folds + f` and trains on the rest. With five folds that is 80/10/10.
pub fn make_splits(subjects: &[(String, usize)], folds: usize, seed: u64) -> Result<SplitPlan> {
    let slices_n = 2 * folds;
    if folds < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    if subjects.len() < slices_n {
        return Err(Error::invalid(format!(
            "need at least {slices_n} subjects for {folds} folds, got {}",
            subjects.len()
        )));
    }
    let mut order: Vec<usize> = (0..subjects.len()).collect();
    order.shuffle(&mut seed::rng_for(seed, &[stream::SPLIT]));

    // tercile from rank of defect count, ties broken by shuffled position
    let mut by_count = order.clone();
    by_count.sort_by_key(|&i| subjects[i].1);
    let n = subjects.len();
    let mut tercile = vec![0usize; n];
    for (rank, &i) in by_count.iter().enumerate() {
        tercile[i] = rank * 3 / n;
    }
    order.sort_by_key(|&i| tercile[i]);

    let mut slices = vec![Vec::new(); slices_n];
    for (pos, &i) in order.iter().enumerate() {
        slices[pos % slices_n].push(subjects[i].0.clone());
    }
    let folds = (0..folds)
        .map(|f| {
            let val_slice = folds + f;
            let train = slices
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != f && s != val_slice)
                .flat_map(|(_, ids)| ids.iter().cloned())
                .collect();
            Fold { train, val: slices[val_slice].clone(), test: slices[f].clone() }
        })
        .collect();
    Ok(SplitPlan { seed, folds })
}
