//! Compressed sparse row storage for non-negative weight and probability
//! matrices.
//!
//! Column indices are kept sorted inside each row and explicit zeros are never
//! stored, so two matrices with the same logical content compare equal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Repeated coordinates
    /// are summed; entries that end up exactly zero are dropped.
    ///
    /// Panics if a coordinate is out of bounds.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for &(r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            per_row[r].push((c, v));
        }
        Self::from_rows(cols, per_row)
    }

    /// Builds a matrix from per-row `(col, value)` lists. Lists need not be
    /// sorted and may repeat columns.
    pub fn from_rows(cols: usize, rows_data: Vec<Vec<(usize, f64)>>) -> Self {
        let rows = rows_data.len();
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows_data {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                assert!(c < cols, "column {c} outside width {cols}");
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let cols = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|r| {
                assert_eq!(r.len(), cols, "ragged dense matrix");
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(cols, rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_iter(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, val) = self.row(r);
        idx.iter().copied().zip(val.iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        match idx.binary_search(&c) {
            Ok(pos) => val[pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).1.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row_sum(r)).collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// All stored entries as `(row, col, value)`, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|r| self.row_iter(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row_iter(r) {
                row[c] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row_iter(r) {
                per_row[c].push((r, v));
            }
        }
        Self::from_rows(self.rows, per_row)
    }

    /// Divides every row by its sum. Rows summing to zero are left empty.
    pub fn row_normalized(&self) -> Self {
        let mut values = self.values.clone();
        for r in 0..self.rows {
            let span = self.indptr[r]..self.indptr[r + 1];
            let sum: f64 = self.values[span.clone()].iter().sum();
            if sum > 0.0 {
                for v in &mut values[span] {
                    *v /= sum;
                }
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let rows = (0..self.rows)
            .map(|r| self.row_iter(r).map(|(c, v)| (c, v * factor)).collect())
            .collect();
        Self::from_rows(self.cols, rows)
    }

    /// Entry-wise sum. Panics on shape mismatch.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add");
        let rows = (0..self.rows)
            .map(|r| self.row_iter(r).chain(other.row_iter(r)).collect())
            .collect();
        Self::from_rows(self.cols, rows)
    }

    /// Keeps only the rows in `keep_rows` and columns in `keep_cols` (both
    /// given as old indices, in the order of the new index space).
    pub fn submatrix(&self, keep_rows: &[usize], keep_cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let rows = keep_rows
            .iter()
            .map(|&r| {
                self.row_iter(r)
                    .filter_map(|(c, v)| (col_map[c] != usize::MAX).then(|| (col_map[c], v)))
                    .collect()
            })
            .collect();
        Self::from_rows(keep_cols.len(), rows)
    }

    /// Sparse product `self * rhs`, computed row by row in parallel. Within a
    /// row, contributions are accumulated in the order of `self`'s stored
    /// entries, so results do not depend on thread scheduling.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch in matmul");
        let width = rhs.cols;
        let rows: Vec<Vec<(usize, f64)>> = (0..self.rows)
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; width], vec![false; width], Vec::new()),
                |(acc, seen, touched), r| {
                    for (k, a) in self.row_iter(r) {
                        for (c, b) in rhs.row_iter(k) {
                            if !seen[c] {
                                seen[c] = true;
                                touched.push(c);
                            }
                            acc[c] += a * b;
                        }
                    }
                    touched.sort_unstable();
                    let row = touched
                        .iter()
                        .map(|&c| {
                            let v = acc[c];
                            acc[c] = 0.0;
                            seen[c] = false;
                            (c, v)
                        })
                        .filter(|&(_, v)| v != 0.0)
                        .collect();
                    touched.clear();
                    row
                },
            )
            .collect();
        Self::from_rows(width, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (0, 1, 2.0), (1, 2, 0.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 2), 0.0);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]);
        let b = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 2.0], vec![4.0, 0.0]]);
        let c = a.matmul(&b);
        assert_eq!(c.to_dense(), vec![vec![9.0, 1.0], vec![0.0, 6.0]]);
    }

    #[test]
    fn transpose_and_submatrix() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]);
        assert_eq!(a.transpose().to_dense(), vec![vec![1.0, 0.0], vec![0.0, 3.0], vec![2.0, 0.0]]);
        let s = a.submatrix(&[1, 0], &[2, 1]);
        assert_eq!(s.to_dense(), vec![vec![0.0, 3.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn normalization_leaves_empty_rows_empty() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 6.0], vec![0.0, 0.0]]);
        let n = a.row_normalized();
        assert_eq!(n.to_dense(), vec![vec![0.25, 0.75], vec![0.0, 0.0]]);
    }
}
