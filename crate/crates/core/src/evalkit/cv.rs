use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Assigns each index to one of `k` folds so that every class is spread as
/// evenly as possible.
///
/// Members of each class (in label order) are shuffled and dealt round-robin;
/// the dealing position carries over between classes so that fold sizes stay
/// balanced as well.
pub fn stratified_kfold<L: Ord>(labels: &[L], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "fold count must be at least 1".into(),
        ));
    }
    if k > labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{k} folds requested for {} instances",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut pos = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = pos % k;
            pos += 1;
        }
    }
    Ok(folds)
}

/// Leave-one-out: instance `i` is alone in fold `i`.
pub fn loocv(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Indices belonging to each fold, in ascending order.
pub fn fold_members(assignment: &[usize]) -> Vec<Vec<usize>> {
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (i, &f) in assignment.iter().enumerate() {
        out[f].push(i);
    }
    out
}
