//! Principal component analysis, the linear baseline embeddings are
//! compared against.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Fitted decomposition: all m components ordered by descending eigenvalue,
/// with a deterministic sign convention (each component's largest-magnitude
/// loading is positive). Projections at any component count are slices of
/// this one decomposition, so smaller projections are prefixes of larger
/// ones.
#[derive(Debug, Clone)]
pub struct Pca {
    mean: Vec<f64>,
    /// m x m; column j is the j-th principal axis.
    components: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl Pca {
    pub fn fit(d: &Dataset) -> Result<Pca> {
        let n = d.num_instances();
        let m = d.num_features();
        let features = d.features();

        let mean: Vec<f64> = (0..m).map(|j| features.column(j).sum() / n as f64).collect();
        let mut covariance = DMatrix::zeros(m, m);
        for row in features.rows() {
            for a in 0..m {
                let da = row[a] - mean[a];
                for b in a..m {
                    covariance[(a, b)] += da * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..m {
            for b in a..m {
                let value: f64 = covariance[(a, b)] / (n - 1) as f64;
                covariance[(a, b)] = value;
                covariance[(b, a)] = value;
            }
        }

        let eigen = SymmetricEigen::new(covariance);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| f64::total_cmp(&eigen.eigenvalues[b], &eigen.eigenvalues[a]).then(a.cmp(&b)));

        let mut components = DMatrix::zeros(m, m);
        let mut eigenvalues = Vec::with_capacity(m);
        for (slot, &src) in order.iter().enumerate() {
            eigenvalues.push(eigen.eigenvalues[src]);
            let column = eigen.eigenvectors.column(src);
            // first entry of largest magnitude decides the sign
            let anchor = (0..m).max_by(|&a, &b| column[a].abs().total_cmp(&column[b].abs()).then(b.cmp(&a)));
            let flip = anchor.map_or(false, |a| column[a] < 0.0);
            for row in 0..m {
                components[(row, slot)] = if flip { -column[row] } else { column[row] };
            }
        }

        Ok(Pca { mean, components, eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Projects onto the first `c` principal axes.
    pub fn project(&self, d: &Dataset, c: usize) -> Result<Array2<f64>> {
        let m = self.mean.len();
        if c < 1 || c > m {
            return Err(Error::ComponentsOutOfRange { components: c, num_features: m });
        }
        if d.num_features() != m {
            return Err(Error::InvalidConfig(format!(
                "dataset has {} features, decomposition was fit on {m}",
                d.num_features()
            )));
        }
        let n = d.num_instances();
        let features = d.features();
        let mut out = Array2::zeros((n, c));
        for i in 0..n {
            for j in 0..c {
                let mut dot = 0.0;
                for a in 0..m {
                    dot += (features[[i, a]] - self.mean[a]) * self.components[(a, j)];
                }
                out[[i, j]] = dot;
            }
        }
        Ok(out)
    }
}

/// One-shot fit-and-project.
pub fn pca_transform(d: &Dataset, c: usize) -> Result<Array2<f64>> {
    Pca::fit(d)?.project(d, c)
}
