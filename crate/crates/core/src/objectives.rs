//! The two minimized objectives: normalized tree count and the rank-based
//! neighborhood-preservation cost.

use ndarray::Array2;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp::Individual;
use crate::neighbors::NeighborModel;

/// Both objectives, minimized, on a shared [0,1] scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveVector {
    pub f_trees: f64,
    pub f_cost: f64,
    pub raw_t: usize,
}

impl ObjectiveVector {
    pub fn values(&self) -> [f64; 2] {
        [self.f_trees, self.f_cost]
    }

    /// Componentwise <= with at least one strict inequality.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        let le = self.f_trees <= other.f_trees && self.f_cost <= other.f_cost;
        let lt = self.f_trees < other.f_trees || self.f_cost < other.f_cost;
        le && lt
    }
}

/// Normalized tree count: t=1 maps to 0, t=t_max maps to 1.
pub fn tree_count_objective(t: usize, t_max: usize) -> f64 {
    debug_assert!(t_max >= 2 && (1..=t_max).contains(&t));
    (t - 1) as f64 / (t_max - 1) as f64
}

fn spearman_from_d2(s: usize, sum_d2: i64) -> f64 {
    let s_f = s as f64;
    1.0 - (6.0 * sum_d2 as f64) / (s_f * (s_f * s_f - 1.0))
}

/// Spearman's rank correlation over pairs of (high rank, low rank), each a
/// permutation of 1..=s, using the no-ties formula.
pub fn spearman(rank_pairs: &[(usize, usize)]) -> Result<f64> {
    let s = rank_pairs.len();
    if s < 2 {
        return Err(Error::TooFewRanks { got: s });
    }
    debug_assert!(is_permutation(rank_pairs.iter().map(|p| p.0), s));
    debug_assert!(is_permutation(rank_pairs.iter().map(|p| p.1), s));
    let sum_d2: i64 = rank_pairs
        .iter()
        .map(|&(high, low)| {
            let d = high as i64 - low as i64;
            d * d
        })
        .sum();
    Ok(spearman_from_d2(s, sum_d2))
}

#[cfg(debug_assertions)]
fn is_permutation(ranks: impl Iterator<Item = usize>, s: usize) -> bool {
    let mut seen = vec![false; s + 1];
    let mut count = 0usize;
    for r in ranks {
        if r < 1 || r > s || seen[r] {
            return false;
        }
        seen[r] = true;
        count += 1;
    }
    count == s
}

/// Cost contribution of one anchor: rank the sampled neighbor set by
/// low-dimensional distance (ties toward the lower instance index, exactly as
/// in the high-dimensional sort) and score the rank displacement. Anchors
/// with fewer than two sampled neighbors carry no ordering information and
/// contribute the neutral value 0.5.
pub fn instance_cost(anchor: usize, embedding: &Array2<f64>, nm: &NeighborModel) -> f64 {
    let sampled = nm.sampled_neighbors(anchor);
    let s = sampled.len();
    if s < 2 {
        return 0.5;
    }
    let anchor_row = embedding.row(anchor);
    let mut by_low: Vec<(f64, u32, usize)> = sampled
        .iter()
        .enumerate()
        .map(|(pos, &j)| {
            let mut d2 = 0.0;
            for (a, b) in anchor_row.iter().zip(embedding.row(j as usize).iter()) {
                let diff = a - b;
                d2 += diff * diff;
            }
            (d2, j, pos)
        })
        .collect();
    by_low.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // sampled[] is already in high-dimensional rank order, so the high rank
    // of the entry at position pos is pos+1; its low rank is its sort index+1.
    let mut sum_d2 = 0i64;
    for (low_rank_minus_1, &(_, _, pos)) in by_low.iter().enumerate() {
        let d = pos as i64 - low_rank_minus_1 as i64;
        sum_d2 += d * d;
    }
    (1.0 - spearman_from_d2(s, sum_d2)) / 2.0
}

/// Mean per-anchor cost, summed in anchor order. The accumulation order is
/// fixed so equal inputs reproduce bit-equal results.
pub fn cost_of_embedding(embedding: &Array2<f64>, nm: &NeighborModel) -> f64 {
    let n = nm.num_instances();
    let total: f64 = (0..n).map(|anchor| instance_cost(anchor, embedding, nm)).sum();
    total / n as f64
}

/// Applies the individual and scores the resulting embedding.
pub fn cost_of_individual(ind: &Individual, d: &Dataset, nm: &NeighborModel) -> Result<f64> {
    let embedding = ind.apply(d)?;
    Ok(cost_of_embedding(&embedding, nm))
}

/// Full evaluation: cost plus the normalized tree count.
pub fn evaluate(ind: &Individual, d: &Dataset, nm: &NeighborModel, t_max: usize) -> Result<ObjectiveVector> {
    let f_cost = cost_of_individual(ind, d, nm)?;
    Ok(ObjectiveVector {
        f_trees: tree_count_objective(ind.num_trees(), t_max),
        f_cost,
        raw_t: ind.num_trees(),
    })
}
