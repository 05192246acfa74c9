//! High-dimensional neighbor orderings and the logarithmic rank schedule.
//!
//! The cost function never looks at full orderings, only at the instance
//! indices sitting at the sampled rank positions, so that is all the model
//! retains after the one-off all-pairs computation.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const CACHE_MAGIC: &[u8; 4] = b"MGPN";
const CACHE_VERSION: u32 = 1;

/// Distance metric tag. Only Euclidean is implemented; the tag exists so the
/// cache key stays honest if that ever changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
}

impl Metric {
    fn code(self) -> u8 {
        match self {
            Metric::Euclidean => 0,
        }
    }
}

/// Rank positions selected by the logarithmic sub-sampling rule, 1-based and
/// strictly increasing. Block b covers ranks (k(2^b - 1), k(2^{b+1} - 1)] and
/// contributes the last rank of each stride-2^b slice, i.e. positions
/// k(2^b - 1) + j*2^b for j = 1..k; positions past n-1 are dropped.
pub fn sample_schedule(n: usize, k: usize) -> Vec<usize> {
    assert!(n >= 2, "need at least 2 instances");
    assert!(k >= 1, "base sample size must be positive");
    let last = n - 1;
    let mut schedule = Vec::new();
    let mut block = 0u32;
    loop {
        let stride = 1usize << block;
        let start = k * (stride - 1);
        if start >= last {
            break;
        }
        for j in 1..=k {
            let pos = start + j * stride;
            if pos > last {
                break;
            }
            schedule.push(pos);
        }
        block += 1;
    }
    schedule
}

/// Sampled neighbor indices per anchor, in ascending high-dimensional
/// distance at the schedule's rank positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborModel {
    sampled: Vec<Vec<u32>>,
    schedule: Vec<usize>,
    k: usize,
    metric: Metric,
}

impl NeighborModel {
    /// Computes all pairwise Euclidean distances in the scaled feature space
    /// and keeps, per anchor, the neighbor indices at the schedule positions.
    /// Distance ties break toward the lower instance index.
    pub fn build(d: &Dataset, k: usize) -> Result<NeighborModel> {
        if !d.is_scaled() {
            return Err(Error::NotScaled);
        }
        let n = d.num_instances();
        let schedule = sample_schedule(n, k);
        let features = d.features();

        let sampled: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|anchor| {
                let anchor_row = features.row(anchor);
                let mut order: Vec<(f64, u32)> = (0..n)
                    .filter(|&j| j != anchor)
                    .map(|j| {
                        let mut d2 = 0.0;
                        for (a, b) in anchor_row.iter().zip(features.row(j).iter()) {
                            let diff = a - b;
                            d2 += diff * diff;
                        }
                        (d2, j as u32)
                    })
                    .collect();
                order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                schedule.iter().map(|&rank| order[rank - 1].1).collect()
            })
            .collect();

        Ok(NeighborModel { sampled, schedule, k, metric: Metric::Euclidean })
    }

    /// Neighbor indices of `anchor` at the schedule positions, nearest first.
    pub fn sampled_neighbors(&self, anchor: usize) -> &[u32] {
        &self.sampled[anchor]
    }

    pub fn schedule(&self) -> &[usize] {
        &self.schedule
    }

    pub fn num_instances(&self) -> usize {
        self.sampled.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Writes the model as a little-endian binary file keyed by the dataset
    /// fingerprint so a later run can skip the O(n^2) rebuild.
    pub fn save(&self, path: &Path, dataset_hash: &[u8; 32]) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(dataset_hash);
        buf.extend_from_slice(&(self.k as u64).to_le_bytes());
        buf.push(self.metric.code());
        buf.extend_from_slice(&(self.sampled.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.schedule.len() as u64).to_le_bytes());
        for &pos in &self.schedule {
            buf.extend_from_slice(&(pos as u64).to_le_bytes());
        }
        for row in &self.sampled {
            for &idx in row {
                buf.extend_from_slice(&idx.to_le_bytes());
            }
        }
        let mut file = fs::File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        file.write_all(&buf).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Ok(())
    }

    /// Reads a cache written by [`save`]. Any key mismatch (dataset hash, k,
    /// metric) or structural damage is an error; callers treat it as a miss.
    pub fn load(path: &Path, dataset_hash: &[u8; 32], k: usize) -> Result<NeighborModel> {
        let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let fail = |message: &str| Error::NeighborCache { path: path.to_path_buf(), message: message.to_string() };

        let mut at = 0usize;
        let mut take = |len: usize| -> Result<&[u8]> {
            let slice = bytes.get(at..at + len).ok_or_else(|| fail("truncated"))?;
            at += len;
            Ok(slice)
        };

        if take(4)? != CACHE_MAGIC {
            return Err(fail("bad magic"));
        }
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(fail("version mismatch"));
        }
        if take(32)? != dataset_hash {
            return Err(fail("dataset hash mismatch"));
        }
        let cached_k = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        if cached_k != k {
            return Err(fail("sample size mismatch"));
        }
        let metric_code = take(1)?[0];
        if metric_code != Metric::Euclidean.code() {
            return Err(fail("metric mismatch"));
        }
        let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let s = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let mut schedule = Vec::with_capacity(s);
        for _ in 0..s {
            schedule.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
        }
        let mut sampled = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(s);
            for _ in 0..s {
                row.push(u32::from_le_bytes(take(4)?.try_into().unwrap()));
            }
            sampled.push(row);
        }
        if at != bytes.len() {
            return Err(fail("trailing bytes"));
        }
        Ok(NeighborModel { sampled, schedule, k, metric: Metric::Euclidean })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};

    fn toy(features: Array2<f64>) -> Dataset {
        let m = features.ncols();
        let names = (0..m).map(|j| format!("x{j}")).collect();
        Dataset::from_parts(features, names, None, vec![], true).unwrap()
    }

    #[test]
    fn degenerate_schedule_is_the_full_ordering() {
        assert_eq!(sample_schedule(8, 10), vec![1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(sample_schedule(2, 1), vec![1]);
    }

    #[test]
    fn schedule_for_n100_k2_enumerates_blocks() {
        assert_eq!(sample_schedule(100, 2), vec![1, 2, 4, 6, 10, 14, 22, 30, 46, 62, 94]);
    }

    #[test]
    fn schedule_for_n2000_k10_truncates_the_last_block() {
        // Blocks 0..6 are complete (70 ranks); block 7 starts at rank 1270
        // with stride 128, so only 1398..1910 fit below 2000.
        let s = sample_schedule(2000, 10);
        assert_eq!(s.len(), 75);
        assert_eq!(s[0], 1);
        assert_eq!(s[9], 10);
        assert_eq!(s[10], 12);
        assert_eq!(&s[70..], &[1398, 1526, 1654, 1782, 1910]);
        let bound = 10.0 * f64::ceil(f64::log2(1999.0 / 10.0 + 1.0));
        assert!(s.len() as f64 <= bound);
    }

    #[test]
    fn schedule_positions_strictly_increase_and_stay_in_range() {
        for n in 2..200 {
            for k in 1..8 {
                let s = sample_schedule(n, k);
                assert!(!s.is_empty());
                assert!(s.windows(2).all(|w| w[0] < w[1]), "n={n} k={k}");
                assert!(*s.last().unwrap() <= n - 1);
                assert_eq!(s[0], 1);
            }
        }
    }

    #[test]
    fn doubling_n_adds_at_most_one_block() {
        for k in 1..6 {
            for n in 2..300 {
                let small = sample_schedule(n, k).len();
                let big = sample_schedule(2 * n, k).len();
                assert!(big <= small + k, "n={n} k={k}: {small} -> {big}");
            }
        }
    }

    #[test]
    fn collinear_points_order_by_distance() {
        let d = toy(array![[0.0], [0.1], [1.0]]);
        let nm = NeighborModel::build(&d, 10).unwrap();
        assert_eq!(nm.schedule(), &[1, 2]);
        assert_eq!(nm.sampled_neighbors(0), &[1, 2]);
        assert_eq!(nm.sampled_neighbors(1), &[0, 2]);
        assert_eq!(nm.sampled_neighbors(2), &[1, 0]);
    }

    #[test]
    fn duplicate_instances_tie_break_by_lower_index() {
        let d = toy(array![[0.5], [0.5], [0.5], [0.9]]);
        let nm = NeighborModel::build(&d, 10).unwrap();
        assert_eq!(nm.sampled_neighbors(2), &[0, 1, 3]);
        assert_eq!(nm.sampled_neighbors(3), &[0, 1, 2]);
    }

    #[test]
    fn orderings_match_brute_force_all_pairs_sort() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let rows = 5;
        let data = Array2::from_shape_fn((rows, 2), |_| rng.gen::<f64>());
        let d = toy(data.clone());
        let nm = NeighborModel::build(&d, 10).unwrap();
        for anchor in 0..rows {
            let mut pairs: Vec<(f64, u32)> = (0..rows)
                .filter(|&j| j != anchor)
                .map(|j| {
                    let dx = data[[anchor, 0]] - data[[j, 0]];
                    let dy = data[[anchor, 1]] - data[[j, 1]];
                    ((dx * dx + dy * dy).sqrt(), j as u32)
                })
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expected: Vec<u32> = pairs.into_iter().map(|(_, j)| j).collect();
            assert_eq!(nm.sampled_neighbors(anchor), expected.as_slice());
        }
    }

    #[test]
    fn unscaled_dataset_is_rejected() {
        let d = Dataset::from_parts(array![[0.0], [2.0]], vec!["a".into()], None, vec![], false).unwrap();
        assert!(matches!(NeighborModel::build(&d, 3), Err(Error::NotScaled)));
    }

    #[test]
    fn cache_round_trip_preserves_the_model() {
        let d = toy(array![[0.1, 0.2], [0.9, 0.4], [0.3, 0.3], [0.7, 0.8], [0.2, 0.9]]);
        let nm = NeighborModel::build(&d, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neighbors.cache");
        nm.save(&path, &d.content_hash()).unwrap();
        let loaded = NeighborModel::load(&path, &d.content_hash(), 2).unwrap();
        assert_eq!(nm, loaded);
    }

    #[test]
    fn cache_rejects_wrong_key() {
        let d = toy(array![[0.1], [0.9], [0.3]]);
        let nm = NeighborModel::build(&d, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neighbors.cache");
        nm.save(&path, &d.content_hash()).unwrap();

        let err = NeighborModel::load(&path, &[0u8; 32], 2).unwrap_err();
        assert!(matches!(err, Error::NeighborCache { .. }));
        let err = NeighborModel::load(&path, &d.content_hash(), 3).unwrap_err();
        assert!(matches!(err, Error::NeighborCache { .. }));
    }

    #[test]
    fn cache_rejects_corruption() {
        let d = toy(array![[0.1], [0.9], [0.3]]);
        let nm = NeighborModel::build(&d, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neighbors.cache");
        nm.save(&path, &d.content_hash()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 1);
        fs::write(&path, &bytes).unwrap();
        assert!(NeighborModel::load(&path, &d.content_hash(), 2).is_err());
    }
}
