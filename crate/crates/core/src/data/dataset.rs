use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Which distribution a row was drawn from: `P1` is forgotten, `P2` preserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Group {
    P1,
    P2,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::P1 => "p1",
            Group::P2 => "p2",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" => Ok(Group::P1),
            "p2" => Ok(Group::P2),
            other => Err(Error::UnknownGroup {
                tag: other.to_string(),
                row: String::new(),
            }),
        }
    }
}

/// Feature rows with class labels, p1/p2 tags and stable row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    labels: Vec<usize>,
    groups: Vec<Group>,
    row_ids: Vec<String>,
    feature_names: Vec<String>,
    n_classes: usize,
}

impl LabeledDataset {
    /// `n_classes` defaults to `max(label) + 1` when `None`.
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<usize>,
        groups: Vec<Group>,
        row_ids: Vec<String>,
        n_classes: Option<usize>,
    ) -> Result<Self> {
        let n = features.rows();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        for len in [labels.len(), groups.len(), row_ids.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        let max_label = labels.iter().copied().max().unwrap_or(0);
        let n_classes = n_classes.unwrap_or(max_label + 1);
        if max_label >= n_classes {
            return Err(Error::invalid(format!(
                "label {max_label} outside the declared {n_classes} classes"
            )));
        }
        for (i, row) in features.iter_rows().enumerate() {
            if !row.is_finite() {
                let col = row
                    .to_dense(features.cols())
                    .iter()
                    .position(|v| !v.is_finite())
                    .unwrap_or(0);
                return Err(Error::NonFiniteFeature { row: i, col });
            }
        }
        let feature_names = (0..features.cols()).map(|j| format!("f{j}")).collect();
        Ok(Self {
            features,
            labels,
            groups,
            row_ids,
            feature_names,
            n_classes,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.features.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.features.cols(),
                found: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Row positions tagged with `group`, ascending.
    pub fn rows_in(&self, group: Group) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter_map(|(i, g)| (*g == group).then_some(i))
            .collect()
    }

    /// New dataset made of the given rows, in the given order. Class count and
    /// feature names carry over.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.len(),
            });
        }
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            groups: rows.iter().map(|&r| self.groups[r]).collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            feature_names: self.feature_names.clone(),
            n_classes: self.n_classes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn tiny() -> LabeledDataset {
        let x = DenseMatrix::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]).unwrap();
        LabeledDataset::new(
            FeatureMatrix::Dense(x),
            vec![0, 1, 0],
            vec![Group::P1, Group::P2, Group::P1],
            vec!["a".into(), "b".into(), "c".into()],
            None,
        )
        .unwrap()
    }

    #[test]
    fn accessors_and_subset() {
        let d = tiny();
        assert_eq!(d.n_classes(), 2);
        assert_eq!(d.rows_in(Group::P1), vec![0, 2]);
        let s = d.subset(&[2, 1]).unwrap();
        assert_eq!(s.row_ids(), &["c".to_string(), "b".to_string()]);
        assert_eq!(s.features().row(0).to_dense(2), vec![4.0, 5.0]);
        assert!(d.subset(&[3]).is_err());
        assert!(d.subset(&[]).is_err());
    }

    #[test]
    fn validation() {
        let x = || FeatureMatrix::Dense(DenseMatrix::from_rows(&[[f64::NAN]]).unwrap());
        let r = LabeledDataset::new(x(), vec![0], vec![Group::P1], vec!["a".into()], None);
        assert!(matches!(r, Err(Error::NonFiniteFeature { row: 0, col: 0 })));
        let ok = FeatureMatrix::Dense(DenseMatrix::from_rows(&[[1.0]]).unwrap());
        assert!(LabeledDataset::new(ok.clone(), vec![3], vec![Group::P1], vec!["a".into()], Some(2)).is_err());
        assert!(LabeledDataset::new(ok, vec![0, 1], vec![Group::P1], vec!["a".into()], None).is_err());
        assert_eq!("P2".parse::<Group>().unwrap(), Group::P2);
        assert!("p3".parse::<Group>().is_err());
    }
}
