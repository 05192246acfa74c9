//! Tabular dataset loading and feature scaling.
//!
//! Labels ride along for post-hoc evaluation but are kept behind an accessor;
//! nothing on the optimization path takes them as input.

use std::fs::File;
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which column of the input file holds class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSpec {
    /// Every column is a feature.
    None,
    /// The rightmost column holds labels.
    LastColumn,
    /// The column with this header name holds labels.
    Named(String),
}

#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    feature_names: Vec<String>,
    labels: Option<Vec<usize>>,
    class_names: Vec<String>,
    scaled: bool,
}

impl Dataset {
    /// Loads a CSV file with a header row. Feature cells must parse as reals;
    /// empty cells and ragged rows are hard errors that name their position
    /// (rows counted from 1, header excluded).
    pub fn load(path: &Path, label_spec: &LabelSpec) -> Result<Dataset> {
        let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);

        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv { path: path.to_path_buf(), message: e.to_string() })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();

        let label_index = match label_spec {
            LabelSpec::None => None,
            LabelSpec::LastColumn => {
                if header.is_empty() {
                    return Err(Error::TooFewFeatures { got: 0 });
                }
                Some(header.len() - 1)
            }
            LabelSpec::Named(name) => Some(
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::MissingLabelColumn { name: name.clone() })?,
            ),
        };

        let feature_names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_index)
            .map(|(_, h)| h.clone())
            .collect();
        if feature_names.is_empty() {
            return Err(Error::TooFewFeatures { got: 0 });
        }

        let mut rows: Vec<f64> = Vec::new();
        let mut raw_labels: Vec<String> = Vec::new();
        let mut n = 0usize;
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 1;
            let record = record.map_err(|e| Error::Csv { path: path.to_path_buf(), message: e.to_string() })?;
            if record.len() != header.len() {
                return Err(Error::RaggedRow { row, expected: header.len(), got: record.len() });
            }
            for (col, cell) in record.iter().enumerate() {
                let cell = cell.trim();
                if Some(col) == label_index {
                    if cell.is_empty() {
                        return Err(Error::MissingValue { row, column: header[col].clone() });
                    }
                    raw_labels.push(cell.to_string());
                    continue;
                }
                if cell.is_empty() {
                    return Err(Error::MissingValue { row, column: header[col].clone() });
                }
                let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                    row,
                    column: header[col].clone(),
                    value: cell.to_string(),
                })?;
                rows.push(value);
            }
            n += 1;
        }

        if n < 2 {
            return Err(Error::TooFewInstances { got: n });
        }
        let m = feature_names.len();
        let features = Array2::from_shape_vec((n, m), rows).expect("row-major fill matches (n, m)");

        let (labels, class_names) = if label_index.is_some() {
            let mut class_names: Vec<String> = Vec::new();
            let mut ids = Vec::with_capacity(n);
            for raw in &raw_labels {
                let id = match class_names.iter().position(|c| c == raw) {
                    Some(id) => id,
                    None => {
                        class_names.push(raw.clone());
                        class_names.len() - 1
                    }
                };
                ids.push(id);
            }
            (Some(ids), class_names)
        } else {
            (None, Vec::new())
        };

        Ok(Dataset { features, feature_names, labels, class_names, scaled: false })
    }

    /// Builds a dataset directly from a matrix, mainly for tests and synthetic
    /// data. `scaled` asserts (without checking) that columns are in [0,1].
    pub fn from_parts(
        features: Array2<f64>,
        feature_names: Vec<String>,
        labels: Option<Vec<usize>>,
        class_names: Vec<String>,
        scaled: bool,
    ) -> Result<Dataset> {
        let (n, m) = features.dim();
        if n < 2 {
            return Err(Error::TooFewInstances { got: n });
        }
        if m < 1 || feature_names.len() != m {
            return Err(Error::TooFewFeatures { got: m });
        }
        Ok(Dataset { features, feature_names, labels, class_names, scaled })
    }

    /// Per-column min-max scaling to [0,1]. Constant columns become all-zero
    /// so dead features stay inert rather than erroring out.
    pub fn scale(&self) -> Result<Dataset> {
        if self.scaled {
            return Err(Error::AlreadyScaled);
        }
        let mut features = self.features.clone();
        for mut col in features.columns_mut() {
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = max - min;
            if span == 0.0 {
                col.fill(0.0);
            } else {
                col.mapv_inplace(|x| (x - min) / span);
            }
        }
        Ok(Dataset {
            features,
            feature_names: self.feature_names.clone(),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
            scaled: true,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn num_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    /// Class ids in [0, num_classes). Only evaluation code should call this;
    /// the search itself never sees labels.
    pub fn labels(&self) -> Result<&[usize]> {
        self.labels.as_deref().ok_or(Error::LabelsMissing)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Content fingerprint of the feature matrix (shape plus every cell's bit
    /// pattern), used to key the neighbor cache.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.num_instances() as u64).to_le_bytes());
        hasher.update((self.num_features() as u64).to_le_bytes());
        for value in self.features.iter() {
            hasher.update(value.to_bits().to_le_bytes());
        }
        hasher.finalize().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().expect("temp file");
        file.write_all(content.as_bytes()).expect("write");
        file
    }

    #[test]
    fn loads_last_column_labels() {
        let file = write_csv("a,b,class\n1.0,2.0,x\n3.0,4.0,y\n5.0,6.0,x\n");
        let d = Dataset::load(file.path(), &LabelSpec::LastColumn).unwrap();
        assert_eq!(d.num_instances(), 3);
        assert_eq!(d.num_features(), 2);
        assert_eq!(d.feature_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.labels().unwrap(), &[0, 1, 0]);
        assert_eq!(d.class_names(), &["x".to_string(), "y".to_string()]);
        assert!(!d.is_scaled());
    }

    #[test]
    fn loads_named_label_column_in_the_middle() {
        let file = write_csv("a,class,b\n1.0,x,2.0\n3.0,y,4.0\n");
        let d = Dataset::load(file.path(), &LabelSpec::Named("class".into())).unwrap();
        assert_eq!(d.num_features(), 2);
        assert_eq!(d.feature_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.features()[[1, 1]], 4.0);
        assert_eq!(d.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn label_none_keeps_every_column() {
        let file = write_csv("a,b\n1,2\n3,4\n");
        let d = Dataset::load(file.path(), &LabelSpec::None).unwrap();
        assert_eq!(d.num_features(), 2);
        assert!(!d.has_labels());
        assert!(d.labels().is_err());
    }

    #[test]
    fn missing_named_label_column_is_an_error() {
        let file = write_csv("a,b\n1,2\n3,4\n");
        let err = Dataset::load(file.path(), &LabelSpec::Named("target".into())).unwrap_err();
        assert!(matches!(err, Error::MissingLabelColumn { name } if name == "target"));
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let file = write_csv("a,b,class\n1.0,2.0,x\n3.0,abc,y\n");
        let err = Dataset::load(file.path(), &LabelSpec::LastColumn).unwrap_err();
        match err {
            Error::NonNumericCell { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn ragged_row_is_an_error() {
        let file = write_csv("a,b,class\n1.0,2.0,x\n3.0,y\n");
        let err = Dataset::load(file.path(), &LabelSpec::LastColumn).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { row: 2, expected: 3, got: 2 }));
    }

    #[test]
    fn empty_cell_is_an_error() {
        let file = write_csv("a,b,class\n1.0,,x\n3.0,4.0,y\n");
        let err = Dataset::load(file.path(), &LabelSpec::LastColumn).unwrap_err();
        assert!(matches!(err, Error::MissingValue { row: 1, column } if column == "b"));
    }

    #[test]
    fn unreadable_file_is_an_io_error() {
        let err = Dataset::load(Path::new("/nonexistent/nowhere.csv"), &LabelSpec::None).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn wine_shape_and_classes() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wine.csv");
        let d = Dataset::load(&path, &LabelSpec::LastColumn).unwrap();
        assert_eq!(d.num_features(), 13);
        assert_eq!(d.num_instances(), 178);
        assert_eq!(d.num_classes(), 3);
    }

    #[test]
    fn scaling_maps_columns_to_unit_range() {
        let d = Dataset::from_parts(
            array![[2.0, 5.0, -1.0], [4.0, 5.0, 0.0], [6.0, 5.0, 3.0]],
            vec!["a".into(), "b".into(), "c".into()],
            None,
            vec![],
            false,
        )
        .unwrap();
        let s = d.scale().unwrap();
        assert!(s.is_scaled());
        let f = s.features();
        assert_abs_diff_eq!(f[[0, 0]], 0.0);
        assert_abs_diff_eq!(f[[1, 0]], 0.5);
        assert_abs_diff_eq!(f[[2, 0]], 1.0);
        // constant column collapses to zeros
        assert_eq!(f.column(1).to_vec(), vec![0.0, 0.0, 0.0]);
        // hand-computed min-max for [-1, 0, 3]
        assert_abs_diff_eq!(f[[0, 2]], 0.0);
        assert_abs_diff_eq!(f[[1, 2]], 0.25);
        assert_abs_diff_eq!(f[[2, 2]], 1.0);
    }

    #[test]
    fn double_scaling_is_rejected() {
        let d = Dataset::from_parts(
            array![[0.0], [1.0]],
            vec!["a".into()],
            None,
            vec![],
            false,
        )
        .unwrap();
        let s = d.scale().unwrap();
        assert!(matches!(s.scale(), Err(Error::AlreadyScaled)));
    }

    #[test]
    fn scaling_an_already_unit_column_is_identity() {
        let d = Dataset::from_parts(
            array![[0.0], [0.25], [1.0]],
            vec!["a".into()],
            None,
            vec![],
            false,
        )
        .unwrap();
        let s = d.scale().unwrap();
        assert_eq!(s.features().column(0).to_vec(), vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn scaling_preserves_rank_order_and_shape() {
        let d = Dataset::from_parts(
            array![[3.0, 9.0], [1.0, 4.0], [2.0, 12.0], [5.0, 4.5]],
            vec!["a".into(), "b".into()],
            Some(vec![0, 1, 0, 1]),
            vec!["x".into(), "y".into()],
            false,
        )
        .unwrap();
        let s = d.scale().unwrap();
        assert_eq!(s.num_instances(), d.num_instances());
        assert_eq!(s.num_features(), d.num_features());
        assert_eq!(s.labels().unwrap(), d.labels().unwrap());
        for col in 0..d.num_features() {
            let before: Vec<f64> = d.features().column(col).to_vec();
            let after: Vec<f64> = s.features().column(col).to_vec();
            for i in 0..before.len() {
                for j in 0..before.len() {
                    assert_eq!(before[i] < before[j], after[i] < after[j]);
                }
            }
        }
    }

    #[test]
    fn content_hash_tracks_values() {
        let a = Dataset::from_parts(array![[0.0], [1.0]], vec!["a".into()], None, vec![], true).unwrap();
        let b = Dataset::from_parts(array![[0.0], [1.0]], vec!["a".into()], None, vec![], true).unwrap();
        let c = Dataset::from_parts(array![[0.0], [0.5]], vec!["a".into()], None, vec![], true).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn single_instance_is_rejected() {
        let file = write_csv("a,b\n1,2\n");
        let err = Dataset::load(file.path(), &LabelSpec::None).unwrap_err();
        assert!(matches!(err, Error::TooFewInstances { got: 1 }));
    }
}
