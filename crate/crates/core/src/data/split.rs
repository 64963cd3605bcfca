use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::data::dataset::{Group, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Row indices of a stratified split, each side ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    /// Strata too small to split; their rows went to train.
    pub warnings: Vec<String>,
}

/// Shuffles each `(group, label)` stratum and sends `round(fraction * size)`
/// of it to train.
pub fn stratified_indices(groups: &[Group], labels: &[usize], train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if groups.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: groups.len(),
            found: labels.len(),
        });
    }
    let mut strata: BTreeMap<(Group, usize), Vec<usize>> = BTreeMap::new();
    for (i, (&g, &l)) in groups.iter().zip(labels).enumerate() {
        strata.entry((g, l)).or_default().push(i);
    }
    let mut rng = rng_from_seed(seed);
    let (mut train, mut validation, mut warnings) = (Vec::new(), Vec::new(), Vec::new());
    for ((g, l), mut rows) in strata {
        if rows.len() < 2 {
            warnings.push(format!("stratum ({g}, label {l}) has {} row(s); kept in train", rows.len()));
            train.extend(rows);
            continue;
        }
        rows.shuffle(&mut rng);
        let k = (train_fraction * rows.len() as f64).round() as usize;
        train.extend_from_slice(&rows[..k]);
        validation.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(SplitIndices {
        train,
        validation,
        warnings,
    })
}

/// Stratified train/validation split of a dataset.
pub fn split_stratified(
    dataset: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, Vec<String>)> {
    let s = stratified_indices(dataset.groups(), dataset.labels(), train_fraction, seed)?;
    Ok((dataset.subset(&s.train)?, dataset.subset(&s.validation)?, s.warnings))
}

/// Rows kept when p2 is cut down to `ceil(ratio * |p1|)` uniformly at random.
pub fn downsample_p2_indices(groups: &[Group], ratio: f64, seed: u64) -> Result<Vec<usize>> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::invalid(format!("ratio must be positive, got {ratio}")));
    }
    let n_p1 = groups.iter().filter(|&&g| g == Group::P1).count();
    let mut p2: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == Group::P2).collect();
    let target = (ratio * n_p1 as f64).ceil() as usize;
    let mut keep: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == Group::P1).collect();
    if p2.len() <= target {
        keep.extend(p2);
    } else {
        let mut rng = rng_from_seed(seed);
        let (chosen, _) = p2.partial_shuffle(&mut rng, target);
        keep.extend_from_slice(chosen);
    }
    keep.sort_unstable();
    Ok(keep)
}

pub fn downsample_p2(dataset: &LabeledDataset, ratio: f64, seed: u64) -> Result<LabeledDataset> {
    dataset.subset(&downsample_p2_indices(dataset.groups(), ratio, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{DenseMatrix, FeatureMatrix};

    fn dataset(n_p1: usize, n_p2: usize) -> LabeledDataset {
        let n = n_p1 + n_p2;
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        LabeledDataset::new(
            FeatureMatrix::Dense(DenseMatrix::from_rows(&rows).unwrap()),
            (0..n).map(|i| i % 2).collect(),
            (0..n).map(|i| if i < n_p1 { Group::P1 } else { Group::P2 }).collect(),
            (0..n).map(|i| i.to_string()).collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_stratum_split() {
        let groups = vec![Group::P1; 10];
        let labels = vec![0; 10];
        let s = stratified_indices(&groups, &labels, 0.7, 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (7, 3));
        assert_eq!(s, stratified_indices(&groups, &labels, 0.7, 3).unwrap());
        let mut all = [s.train.clone(), s.validation.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn strata_within_one_and_small_strata_flagged() {
        let d = dataset(37, 91);
        let (train, val, warn) = split_stratified(&d, 0.7, 11).unwrap();
        assert!(warn.is_empty());
        assert_eq!(train.len() + val.len(), d.len());
        for g in [Group::P1, Group::P2] {
            for l in 0..2 {
                let total = (0..d.len()).filter(|&i| d.groups()[i] == g && d.labels()[i] == l).count();
                let got = (0..train.len()).filter(|&i| train.groups()[i] == g && train.labels()[i] == l).count();
                assert!((got as f64 - 0.7 * total as f64).abs() <= 1.0);
            }
        }
        let s = stratified_indices(&[Group::P1, Group::P2, Group::P2], &[0, 1, 1], 0.5, 1).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert!(s.train.contains(&0));
        assert!(stratified_indices(&[Group::P1], &[0], 1.0, 1).is_err());
    }

    #[test]
    fn downsampling() {
        let d = dataset(10, 100);
        let out = downsample_p2(&d, 5.0, 9).unwrap();
        assert_eq!(out.rows_in(Group::P1).len(), 10);
        assert_eq!(out.rows_in(Group::P2).len(), 50);
        assert_eq!(out, downsample_p2(&d, 5.0, 9).unwrap());
        assert_ne!(out, downsample_p2(&d, 5.0, 10).unwrap());
        let small = dataset(10, 30);
        assert_eq!(downsample_p2(&small, 5.0, 9).unwrap(), small);
        assert_eq!(downsample_p2_indices(&[Group::P1, Group::P2, Group::P2], 0.5, 1).unwrap().len(), 2);
        assert!(downsample_p2(&d, 0.0, 1).is_err());
    }
}
