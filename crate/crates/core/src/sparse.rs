//! Compressed sparse row storage and the handful of kernels the solver needs:
//! products, transposes, and dense extraction of subdomain blocks.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Small dense blocks (local subdomain matrices, eigenvector panels).
pub type DenseMatrix = nalgebra::DMatrix<f64>;

/// Rows at or above this count are multiplied in parallel.
const PAR_ROWS: usize = 4096;

/// Controls whether products keep entries that cancel to exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pattern {
    /// Drop entries whose accumulated value is exactly zero.
    Numeric,
    /// Keep every structurally reachable entry, even if it sums to zero.
    Symbolic,
}

/// Real CSR matrix with sorted, duplicate-free column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Index(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); entries.len()];
        for &(r, c, v) in entries {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_offsets.push(0);
        for r in 0..n_rows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from raw CSR arrays, validating every structural invariant.
    /// Explicit zeros are allowed here; they carry symbolic structure.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 || row_offsets[0] != 0 {
            return Err(Error::Format(
                "row_offsets must have n_rows + 1 entries starting at 0".into(),
            ));
        }
        if *row_offsets.last().unwrap() != col_indices.len() || col_indices.len() != values.len() {
            return Err(Error::Format(
                "row_offsets, col_indices and values disagree in length".into(),
            ));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::Format(format!("row_offsets decrease at row {r}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!(
                    "columns of row {r} not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::Index(format!(
                    "column index out of range in row {r}"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    /// Square diagonal matrix. Zero diagonal entries are still stored.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Iterates `(row, col, value)` over stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] = v;
        }
        d
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `y = M x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = M x` into a caller-provided buffer.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols || y.len() != self.n_rows {
            return Err(Error::Dim(format!(
                "spmv: matrix is {}x{}, x has {}, y has {}",
                self.n_rows,
                self.n_cols,
                x.len(),
                y.len()
            )));
        }
        let kernel = |(r, yr): (usize, &mut f64)| {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        };
        if self.n_rows >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(kernel);
        } else {
            y.iter_mut().enumerate().for_each(kernel);
        }
        Ok(())
    }

    /// `y = Mᵀ x` without forming the transpose.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(Error::Dim(format!(
                "spmv_transpose: matrix has {} rows, x has {}",
                self.n_rows,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in ascending order, so each output row comes out sorted.
        for (r, c, v) in self.triplets() {
            col_indices[next[c]] = r;
            values[next[c]] = v;
            next[c] += 1;
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Sparse product `self · rhs` (row-wise Gustavson accumulation).
    pub fn spgemm(&self, rhs: &CsrMatrix, pattern: Pattern) -> Result<Self> {
        if self.n_cols != rhs.n_rows {
            return Err(Error::Dim(format!(
                "spgemm: {}x{} times {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        let n_out = rhs.n_cols;
        let row_product = |work: &mut (Vec<f64>, Vec<bool>, Vec<usize>), r: usize| {
            let (acc, seen, touched) = work;
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (rc, rv) = rhs.row(k);
                for (&j, &b) in rc.iter().zip(rv) {
                    if !seen[j] {
                        seen[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            let mut out_c = Vec::with_capacity(touched.len());
            let mut out_v = Vec::with_capacity(touched.len());
            for &j in touched.iter() {
                let v = acc[j];
                if pattern == Pattern::Symbolic || v != 0.0 {
                    out_c.push(j);
                    out_v.push(v);
                }
                acc[j] = 0.0;
                seen[j] = false;
            }
            touched.clear();
            (out_c, out_v)
        };
        let init = || (vec![0.0; n_out], vec![false; n_out], Vec::new());
        let rows: Vec<(Vec<usize>, Vec<f64>)> = if self.n_rows >= PAR_ROWS {
            (0..self.n_rows)
                .into_par_iter()
                .map_init(init, row_product)
                .collect()
        } else {
            let mut work = init();
            (0..self.n_rows)
                .map(|r| row_product(&mut work, r))
                .collect()
        };

        let total: usize = rows.iter().map(|(c, _)| c.len()).sum();
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        row_offsets.push(0);
        for (c, v) in rows {
            col_indices.extend(c);
            values.extend(v);
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: n_out,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense block `M(rows, cols)` in the given orders.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<DenseMatrix> {
        check_index_list(rows, self.n_rows, "row")?;
        let order = sorted_positions(cols, self.n_cols, "column")?;
        let mut out = DenseMatrix::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            let (rc, rv) = self.row(r);
            // Merge the sorted row against the sorted requested columns.
            let (mut a, mut b) = (0, 0);
            while a < rc.len() && b < order.len() {
                match rc[a].cmp(&order[b].0) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        out[(i, order[b].1)] = rv[a];
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sorted rows with at least one stored entry in any of `cols`.
    pub fn rows_nonzero_in_columns(&self, cols: &[usize]) -> Result<Vec<usize>> {
        let mut mask = vec![false; self.n_cols];
        for &c in cols {
            if c >= self.n_cols {
                return Err(Error::Index(format!(
                    "column {c} out of range {}",
                    self.n_cols
                )));
            }
            mask[c] = true;
        }
        Ok((0..self.n_rows)
            .filter(|&r| self.row(r).0.iter().any(|&c| mask[c]))
            .collect())
    }

    /// Maximum absolute asymmetry `|M_ij - M_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let t = self.transpose();
        let diff = add_scaled(self, &t, -1.0);
        diff.values.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }
}

/// Frobenius norm of `a - b` divided by the Frobenius norm of `b`.
pub fn relative_frobenius_error(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    let diff = add_scaled(a, b, -1.0).frobenius_norm();
    let denom = b.frobenius_norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// `a + alpha·b` over the union pattern (shapes must agree).
pub fn add_scaled(a: &CsrMatrix, b: &CsrMatrix, alpha: f64) -> CsrMatrix {
    assert_eq!(
        (a.n_rows, a.n_cols),
        (b.n_rows, b.n_cols),
        "add_scaled: shape mismatch"
    );
    let mut row_offsets = Vec::with_capacity(a.n_rows + 1);
    let mut col_indices = Vec::with_capacity(a.nnz() + b.nnz());
    let mut values = Vec::with_capacity(a.nnz() + b.nnz());
    row_offsets.push(0);
    for r in 0..a.n_rows {
        let (ac, av) = a.row(r);
        let (bc, bv) = b.row(r);
        let (mut i, mut j) = (0, 0);
        while i < ac.len() || j < bc.len() {
            let (c, v) = if j >= bc.len() || (i < ac.len() && ac[i] < bc[j]) {
                i += 1;
                (ac[i - 1], av[i - 1])
            } else if i >= ac.len() || bc[j] < ac[i] {
                j += 1;
                (bc[j - 1], alpha * bv[j - 1])
            } else {
                i += 1;
                j += 1;
                (ac[i - 1], av[i - 1] + alpha * bv[j - 1])
            };
            col_indices.push(c);
            values.push(v);
        }
        row_offsets.push(col_indices.len());
    }
    CsrMatrix {
        n_rows: a.n_rows,
        n_cols: a.n_cols,
        row_offsets,
        col_indices,
        values,
    }
}

fn check_index_list(idx: &[usize], bound: usize, what: &str) -> Result<()> {
    sorted_positions(idx, bound, what).map(|_| ())
}

/// `(index, position)` pairs sorted by index; rejects duplicates and out-of-range.
fn sorted_positions(idx: &[usize], bound: usize, what: &str) -> Result<Vec<(usize, usize)>> {
    let mut order: Vec<(usize, usize)> = idx.iter().copied().zip(0..).collect();
    order.sort_unstable();
    for w in order.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Index(format!("duplicate {what} index {}", w[0].0)));
        }
    }
    if let Some(&(last, _)) = order.last() {
        if last >= bound {
            return Err(Error::Index(format!(
                "{what} index {last} out of range {bound}"
            )));
        }
    }
    Ok(order)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
