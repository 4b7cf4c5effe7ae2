//! Minimal CSR matrix used for graph operators.
//!
//! The solver only ever multiplies dense matrices by a sparse operator from
//! the right (`Z * M` and `Z * M^T`), so the storage is row-major and both
//! products walk the nonzeros once per dense row block.

use nalgebra::DMatrix;

/// Compressed sparse row matrix with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds a CSR matrix from `(row, col, value)` triplets. Duplicate
    /// entries are summed. Zero values are kept as explicit entries.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut last_col = usize::MAX;
            for &(c, v) in row.iter() {
                if c == last_col {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last_col = c;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of one row as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c, v))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn transpose(&self) -> Csr {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        Csr::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// Entry-wise sum of two matrices with identical dimensions.
    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for r in 0..m.nrows {
                for (c, v) in m.row(r) {
                    triplets.push((r, c, v));
                }
            }
        }
        Csr::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// Computes `Z * self` for a dense `Z` with `ncols == self.nrows`.
    pub fn mul_dense_left(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(z.ncols(), self.nrows, "inner dimension mismatch");
        let mut out = DMatrix::<f64>::zeros(z.nrows(), self.ncols);
        for k in 0..self.nrows {
            let zk = z.column(k);
            for (c, v) in self.row(k) {
                let mut col = out.column_mut(c);
                col.axpy(v, &zk, 1.0);
            }
        }
        out
    }

    /// Computes `Z * self^T` for a dense `Z` with `ncols == self.ncols`.
    pub fn mul_dense_left_transposed(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(z.ncols(), self.ncols, "inner dimension mismatch");
        let mut out = DMatrix::<f64>::zeros(z.nrows(), self.nrows);
        for r in 0..self.nrows {
            let mut col = out.column_mut(r);
            for (c, v) in self.row(r) {
                col.axpy(v, &z.column(c), 1.0);
            }
        }
        out
    }

    /// Computes `self * X` for a dense `X` with `nrows == self.ncols`.
    pub fn mul_dense_right(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols, "inner dimension mismatch");
        let mut out = DMatrix::<f64>::zeros(self.nrows, x.ncols());
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let mut oc = out.column_mut(j);
            for r in 0..self.nrows {
                let mut acc = 0.0;
                for (c, v) in self.row(r) {
                    acc += v * xc[c];
                }
                oc[r] = acc;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                out[(r, c)] += v;
            }
        }
        out
    }
}
