//! Seeded, stratified k-nearest-neighbor cross-validation: the downstream
//! accuracy proxy for embeddings.

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Assigns each instance to a fold. Instances are grouped by class, each
/// class is shuffled, and classes are dealt onto a shared round-robin
/// counter, so folds are stratified and their sizes differ by at most one.
/// Classes smaller than the fold count are allowed but warned about.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if folds < 2 || folds > n {
        return Err(Error::InvalidConfig(format!("fold count {folds} out of range [2, {n}]")));
    }
    let num_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut fold_rng = rng::stream(seed, "folds");
    let mut assignment = vec![0usize; n];
    let mut next_fold = 0usize;
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            log::warn!("class {class} has {} instances, fewer than {folds} folds; some folds will lack it", members.len());
        }
        members.shuffle(&mut fold_rng);
        for index in members {
            assignment[index] = next_fold;
            next_fold = (next_fold + 1) % folds;
        }
    }
    Ok(assignment)
}

fn squared_distance(e: &Array2<f64>, a: usize, b: usize) -> f64 {
    let mut d2 = 0.0;
    for (x, y) in e.row(a).iter().zip(e.row(b).iter()) {
        let diff = x - y;
        d2 += diff * diff;
    }
    d2
}

/// Majority vote over the k nearest; vote ties go to the class whose nearest
/// representative is closest, then to the lowest class id.
fn classify(nearest: &[(f64, usize)], labels: &[usize], num_classes: usize) -> usize {
    let mut votes = vec![0usize; num_classes];
    for &(_, idx) in nearest {
        votes[labels[idx]] += 1;
    }
    let top = *votes.iter().max().expect("at least one class");
    let mut best: Option<(f64, usize)> = None;
    for class in 0..num_classes {
        if votes[class] != top {
            continue;
        }
        let min_d = nearest
            .iter()
            .filter(|&&(_, idx)| labels[idx] == class)
            .map(|&(d, _)| d)
            .fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(bd, _)| min_d < bd) {
            best = Some((min_d, class));
        }
    }
    best.expect("top vote count is attained").1
}

/// Predicts the label of `query` from its k nearest points in `pool`.
/// Distance ties break toward the lower instance index, mirroring the
/// neighbor-ordering rule used everywhere else.
fn predict(e: &Array2<f64>, query: usize, pool: &[usize], labels: &[usize], k: usize, num_classes: usize) -> usize {
    let mut dists: Vec<(f64, usize)> = pool.iter().map(|&j| (squared_distance(e, query, j), j)).collect();
    dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dists.truncate(k.min(dists.len()));
    classify(&dists, labels, num_classes)
}

/// Stratified cross-validated kNN accuracy over an embedding. Returns
/// (mean train accuracy, mean test accuracy) across folds. Train accuracy
/// scores each training point against the whole training split, so the point
/// itself participates as its own nearest neighbor.
pub fn knn_cv(
    embedding: &Array2<f64>,
    labels: &[usize],
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = embedding.nrows();
    if labels.len() != n {
        return Err(Error::InvalidConfig(format!(
            "{} labels for {n} embedded instances",
            labels.len()
        )));
    }
    let assignment = stratified_folds(labels, folds, seed)?;
    let num_classes = labels.iter().max().map_or(0, |&c| c + 1);

    let mut train_accs = Vec::with_capacity(folds);
    let mut test_accs = Vec::with_capacity(folds);
    for fold in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
        if test.is_empty() || train.is_empty() {
            continue;
        }
        let test_correct = test
            .iter()
            .filter(|&&i| predict(embedding, i, &train, labels, k, num_classes) == labels[i])
            .count();
        let train_correct = train
            .iter()
            .filter(|&&i| predict(embedding, i, &train, labels, k, num_classes) == labels[i])
            .count();
        test_accs.push(test_correct as f64 / test.len() as f64);
        train_accs.push(train_correct as f64 / train.len() as f64);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok((mean(&train_accs), mean(&test_accs)))
}
