//! Post-hoc evaluation of evolved fronts: accuracy proxy, linear baseline,
//! and hypervolume scoring.

mod hypervolume;
mod knn;
mod pca;

pub use hypervolume::hypervolume;
pub use knn::{knn_cv, stratified_folds};
pub use pca::{pca_transform, Pca};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::gp::Individual;

/// Neighbors consulted by the accuracy proxy.
pub const KNN_K: usize = 3;
/// Cross-validation folds.
pub const CV_FOLDS: usize = 10;
/// Component-count normalizer for hypervolume: fronts are scored in a unit
/// square where 1.0 means 20 components. Larger fronts are clamped out and
/// the count reported.
pub const COMPONENT_NORMALIZER: f64 = 20.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontRow {
    pub t: usize,
    pub cost: f64,
    pub knn_train: f64,
    pub knn_test: f64,
    pub pca_knn_test: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontReport {
    pub dataset_id: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<FrontRow>,
    /// Points with more than 20 components, excluded from both hypervolumes.
    pub clamped_points: usize,
    pub hypervolume_gp: f64,
    pub hypervolume_pca: f64,
}

fn front_hypervolume(points: &[(usize, f64)]) -> Result<f64> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(t, _)| (t as f64) <= COMPONENT_NORMALIZER)
        .map(|&(t, acc)| (t as f64 / COMPONENT_NORMALIZER, acc))
        .collect();
    hypervolume(&kept)
}

/// Evaluates one run's front: per entry, the kNN accuracy of the evolved
/// embedding and of a PCA projection with the same component count. PCA is
/// fit once; per-t projections are prefixes of that single decomposition.
/// The fold split is derived from `seed`, so reports are reproducible.
pub fn build_front_report(
    d: &Dataset,
    front: &[(Individual, f64)],
    dataset_id: &str,
    seed: u64,
) -> Result<FrontReport> {
    let labels = d.labels()?;
    let pca = Pca::fit(d)?;
    let mut rows = Vec::with_capacity(front.len());
    for (individual, cost) in front {
        let t = individual.num_trees();
        let embedding = individual.apply(d)?;
        let (knn_train, knn_test) = knn_cv(&embedding, labels, KNN_K, CV_FOLDS, seed)?;
        // t_max can exceed m on very narrow datasets; PCA cannot
        let c = t.min(d.num_features());
        let pca_embedding = pca.project(d, c)?;
        let (_, pca_knn_test) = knn_cv(&pca_embedding, labels, KNN_K, CV_FOLDS, seed)?;
        rows.push(FrontRow { t, cost: *cost, knn_train, knn_test, pca_knn_test });
    }

    let gp_points: Vec<(usize, f64)> = rows.iter().map(|r| (r.t, r.knn_test)).collect();
    let pca_points: Vec<(usize, f64)> = rows.iter().map(|r| (r.t, r.pca_knn_test)).collect();
    let clamped_points = rows.iter().filter(|r| (r.t as f64) > COMPONENT_NORMALIZER).count();
    Ok(FrontReport {
        dataset_id: dataset_id.to_string(),
        seeds: vec![seed],
        rows,
        clamped_points,
        hypervolume_gp: front_hypervolume(&gp_points)?,
        hypervolume_pca: front_hypervolume(&pca_points)?,
    })
}

/// Averages several per-seed reports into one: rows are grouped by tree
/// count and averaged over the seeds that archived that count; hypervolumes
/// are averaged over all reports.
pub fn mean_front_report(reports: &[FrontReport]) -> Option<FrontReport> {
    let first = reports.first()?;
    let mut by_t: std::collections::BTreeMap<usize, Vec<&FrontRow>> = Default::default();
    for report in reports {
        for row in &report.rows {
            by_t.entry(row.t).or_default().push(row);
        }
    }
    let rows = by_t
        .into_iter()
        .map(|(t, group)| {
            let n = group.len() as f64;
            FrontRow {
                t,
                cost: group.iter().map(|r| r.cost).sum::<f64>() / n,
                knn_train: group.iter().map(|r| r.knn_train).sum::<f64>() / n,
                knn_test: group.iter().map(|r| r.knn_test).sum::<f64>() / n,
                pca_knn_test: group.iter().map(|r| r.pca_knn_test).sum::<f64>() / n,
            }
        })
        .collect();
    let n = reports.len() as f64;
    Some(FrontReport {
        dataset_id: first.dataset_id.clone(),
        seeds: reports.iter().flat_map(|r| r.seeds.iter().copied()).collect(),
        rows,
        clamped_points: reports.iter().map(|r| r.clamped_points).sum(),
        hypervolume_gp: reports.iter().map(|r| r.hypervolume_gp).sum::<f64>() / n,
        hypervolume_pca: reports.iter().map(|r| r.hypervolume_pca).sum::<f64>() / n,
    })
}

/// Renders the report as CSV with one row per archived tree count.
pub fn front_report_csv(report: &FrontReport) -> String {
    let mut out = String::from("t,cost,knn_train,knn_test,pca_knn_test\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.t, row.cost, row.knn_train, row.knn_test, row.pca_knn_test
        ));
    }
    out
}
