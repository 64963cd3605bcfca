//! Row-major dense and CSR sparse feature matrices behind one row interface.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Compressed sparse rows with column indices sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(cols: usize, indptr: Vec<usize>, indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indptr.first() != Some(&0) || indptr.last() != Some(&indices.len()) || indices.len() != values.len() {
            return Err(Error::invalid("malformed CSR arrays"));
        }
        for w in indptr.windows(2) {
            if w[0] > w[1] {
                return Err(Error::invalid("CSR row pointers must be non-decreasing"));
            }
            let idx = &indices[w[0]..w[1]];
            if idx.windows(2).any(|p| p[0] >= p[1]) || idx.iter().any(|&c| c as usize >= cols) {
                return Err(Error::invalid("CSR column indices must be sorted, unique and in range"));
            }
        }
        Ok(Self {
            rows: indptr.len() - 1,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds from per-row `(column, value)` lists; entries are sorted and
    /// duplicate columns summed.
    pub fn from_triplet_rows(cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (c, v) in r {
                if indices.len() > *indptr.last().unwrap() && indices.last() == Some(&c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self::new(cols, indptr, indices, values)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

/// Borrowed view of one matrix row.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse { indices: &'a [u32], values: &'a [f64] },
}

impl<'a> Row<'a> {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        match self {
            Row::Dense(r) => r.iter().zip(dense).map(|(a, b)| a * b).sum(),
            Row::Sparse { indices, values } => indices
                .iter()
                .zip(*values)
                .map(|(&c, v)| v * dense[c as usize])
                .sum(),
        }
    }

    pub fn sq_norm(&self) -> f64 {
        match self {
            Row::Dense(r) => r.iter().map(|v| v * v).sum(),
            Row::Sparse { values, .. } => values.iter().map(|v| v * v).sum(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.sq_norm().sqrt()
    }

    /// `out += scale * row`.
    pub fn add_scaled_to(&self, scale: f64, out: &mut [f64]) {
        match self {
            Row::Dense(r) => {
                for (o, v) in out.iter_mut().zip(*r) {
                    *o += scale * v;
                }
            }
            Row::Sparse { indices, values } => {
                for (&c, v) in indices.iter().zip(*values) {
                    out[c as usize] += scale * v;
                }
            }
        }
    }

    pub fn dot_row(&self, other: &Row<'_>) -> f64 {
        match (self, other) {
            (Row::Dense(a), b) | (b @ Row::Sparse { .. }, Row::Dense(a)) => b.dot(a),
            (
                Row::Sparse {
                    indices: ia,
                    values: va,
                },
                Row::Sparse {
                    indices: ib,
                    values: vb,
                },
            ) => {
                let (mut i, mut j, mut acc) = (0, 0, 0.0);
                while i < ia.len() && j < ib.len() {
                    match ia[i].cmp(&ib[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[i] * vb[j];
                            i += 1;
                            j += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    /// Squared Euclidean distance to a dense vector.
    pub fn sq_dist_dense(&self, dense: &[f64]) -> f64 {
        match self {
            Row::Dense(r) => r.iter().zip(dense).map(|(a, b)| (a - b) * (a - b)).sum(),
            Row::Sparse { indices, values } => {
                let mut acc: f64 = dense.iter().map(|v| v * v).sum();
                for (&c, v) in indices.iter().zip(*values) {
                    let b = dense[c as usize];
                    acc += (v - b) * (v - b) - b * b;
                }
                acc.max(0.0)
            }
        }
    }

    pub fn to_dense(&self, cols: usize) -> Vec<f64> {
        match self {
            Row::Dense(r) => r.to_vec(),
            Row::Sparse { indices, values } => {
                let mut out = vec![0.0; cols];
                for (&c, &v) in indices.iter().zip(*values) {
                    out[c as usize] = v;
                }
                out
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Row::Dense(r) => r.iter().all(|v| v.is_finite()),
            Row::Sparse { values, .. } => values.iter().all(|v| v.is_finite()),
        }
    }
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.rows,
            FeatureMatrix::Sparse(m) => m.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.cols,
            FeatureMatrix::Sparse(m) => m.cols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, FeatureMatrix::Sparse(_))
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        match self {
            FeatureMatrix::Dense(m) => Row::Dense(m.row(i)),
            FeatureMatrix::Sparse(m) => {
                let (a, b) = (m.indptr[i], m.indptr[i + 1]);
                Row::Sparse {
                    indices: &m.indices[a..b],
                    values: &m.values[a..b],
                }
            }
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = Row<'_>> + '_ {
        (0..self.rows()).map(move |i| self.row(i))
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Dense(m) => {
                let mut data = Vec::with_capacity(rows.len() * m.cols);
                for &r in rows {
                    data.extend_from_slice(m.row(r));
                }
                FeatureMatrix::Dense(DenseMatrix {
                    rows: rows.len(),
                    cols: m.cols,
                    data,
                })
            }
            FeatureMatrix::Sparse(m) => {
                let mut indptr = Vec::with_capacity(rows.len() + 1);
                let mut indices = Vec::new();
                let mut values = Vec::new();
                indptr.push(0);
                for &r in rows {
                    let (a, b) = (m.indptr[r], m.indptr[r + 1]);
                    indices.extend_from_slice(&m.indices[a..b]);
                    values.extend_from_slice(&m.values[a..b]);
                    indptr.push(indices.len());
                }
                FeatureMatrix::Sparse(CsrMatrix {
                    rows: rows.len(),
                    cols: m.cols,
                    indptr,
                    indices,
                    values,
                })
            }
        }
    }

    /// Column means over the given rows.
    pub fn mean_of(&self, rows: &[usize]) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols()];
        for &r in rows {
            self.row(r).add_scaled_to(1.0, &mut mean);
        }
        let n = rows.len().max(1) as f64;
        mean.iter_mut().for_each(|v| *v /= n);
        mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> (FeatureMatrix, FeatureMatrix) {
        let dense = DenseMatrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 0.0], vec![0.0, 3.0, -1.0]]).unwrap();
        let sparse = CsrMatrix::from_triplet_rows(
            3,
            vec![vec![(2, 2.0), (0, 1.0)], vec![], vec![(1, 3.0), (2, -1.0)]],
        )
        .unwrap();
        (FeatureMatrix::Dense(dense), FeatureMatrix::Sparse(sparse))
    }

    #[test]
    fn dense_and_sparse_agree() {
        let (d, s) = pair();
        let v = [0.5, -1.0, 2.0];
        for i in 0..3 {
            assert_eq!(d.row(i).dot(&v), s.row(i).dot(&v));
            assert_eq!(d.row(i).sq_norm(), s.row(i).sq_norm());
            assert_eq!(d.row(i).to_dense(3), s.row(i).to_dense(3));
            assert!((d.row(i).sq_dist_dense(&v) - s.row(i).sq_dist_dense(&v)).abs() < 1e-12);
            for j in 0..3 {
                assert_eq!(d.row(i).dot_row(&d.row(j)), s.row(i).dot_row(&s.row(j)));
                assert_eq!(d.row(i).dot_row(&s.row(j)), s.row(i).dot_row(&d.row(j)));
            }
        }
        assert_eq!(d.mean_of(&[0, 2]), s.mean_of(&[0, 2]));
        let ds = d.select_rows(&[2, 0]);
        let ss = s.select_rows(&[2, 0]);
        assert_eq!(ds.row(0).to_dense(3), ss.row(0).to_dense(3));
        assert_eq!(ss.rows(), 2);
    }

    #[test]
    fn construction_checks() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(CsrMatrix::new(2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(2, vec![0, 1], vec![2], vec![1.0]).is_err());
        let m = CsrMatrix::from_triplet_rows(4, vec![vec![(1, 1.0), (1, 2.0)]]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(FeatureMatrix::Sparse(m).row(0).to_dense(4), vec![0.0, 3.0, 0.0, 0.0]);
    }
}
