use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use super::{LinalgError, Scalar};

/// Compressed sparse row matrix over a real or complex field.
///
/// Column indices are sorted within each row and explicit zeros are never
/// stored. Complex values are `Complex64`, which is laid out as an
/// interleaved `(re, im)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<S> {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<S>,
    hermitian: bool,
}

pub type CsrMatrix = Csr<f64>;
pub type CsrComplexMatrix = Csr<Complex64>;

impl<S: Scalar> Csr<S> {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        let mut entries: Vec<(usize, usize, S)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(LinalgError::IndexOutOfBounds {
                    row: i,
                    col: j,
                    n_rows,
                    n_cols,
                });
            }
            entries.push((i, j, v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<S> = Vec::with_capacity(entries.len());
        let mut idx = 0;
        while idx < entries.len() {
            let (i, j, mut v) = entries[idx];
            idx += 1;
            while idx < entries.len() && entries[idx].0 == i && entries[idx].1 == j {
                v = v + entries[idx].2;
                idx += 1;
            }
            if v != S::zero() {
                row_offsets[i + 1] += 1;
                col_indices.push(j);
                values.push(v);
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            hermitian: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![S::one(); n],
            hermitian: true,
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
            hermitian: n_rows == n_cols,
        }
    }

    pub fn from_dense(m: &ArrayView2<S>) -> Self {
        let (r, c) = m.dim();
        let triplets = m
            .indexed_iter()
            .filter(|(_, v)| **v != S::zero())
            .map(|((i, j), v)| (i, j, *v));
        Self::from_triplets(r, c, triplets).expect("indices come from the matrix itself")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
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

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Whether the matrix was flagged Hermitian (symmetric for real fields).
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Flags the matrix Hermitian after checking `m(i,j) == conj(m(j,i))`
    /// bit for bit.
    pub fn into_hermitian(mut self) -> Result<Self, LinalgError> {
        let dev = self.hermitian_deviation();
        if self.n_rows != self.n_cols || dev != 0.0 {
            return Err(LinalgError::NotHermitian { max_deviation: dev });
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Largest `|m(i,j) - conj(m(j,i))|` over stored entries.
    pub fn hermitian_deviation(&self) -> f64 {
        if self.n_rows != self.n_cols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).modulus())
            .fold(0.0, f64::max)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => S::zero(),
        }
    }

    pub fn to_dense(&self) -> Array2<S> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for (i, j, v) in self.iter() {
            out[[i, j]] = v;
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = Self::from_triplets(
            self.n_cols,
            self.n_rows,
            self.iter().map(|(i, j, v)| (j, i, v.conj())),
        )
        .expect("transposed indices are in range");
        t.hermitian = self.hermitian;
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn map_values<T: Scalar>(&self, mut f: impl FnMut(S) -> T) -> Csr<T> {
        Csr::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().map(|(i, j, v)| (i, j, f(v))),
        )
        .expect("same sparsity pattern")
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &ArrayView1<S>) -> Result<Array1<S>, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                op: "spmv",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        let mut y = Array1::zeros(self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = S::zero();
            for (j, v) in self.row(i) {
                acc = acc + v * x[j];
            }
            *yi = acc;
        }
        Ok(y)
    }

    /// `Y = M X` for a dense right-hand side with any number of columns.
    pub fn mul_dense(&self, x: &ArrayView2<S>) -> Result<Array2<S>, LinalgError> {
        if x.nrows() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                op: "spmm",
                expected: self.n_cols,
                found: x.nrows(),
            });
        }
        let mut y = Array2::zeros((self.n_rows, x.ncols()));
        for (i, mut yrow) in y.outer_iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                yrow.scaled_add(v, &x.row(j));
            }
        }
        Ok(y)
    }

    /// `Y = Mᵀ X` (plain transpose, no conjugation) without materialising `Mᵀ`.
    pub fn mul_dense_transposed(&self, x: &ArrayView2<S>) -> Result<Array2<S>, LinalgError> {
        if x.nrows() != self.n_rows {
            return Err(LinalgError::DimensionMismatch {
                op: "spmm_t",
                expected: self.n_rows,
                found: x.nrows(),
            });
        }
        let mut y = Array2::zeros((self.n_cols, x.ncols()));
        for i in 0..self.n_rows {
            let xrow = x.row(i);
            for (j, v) in self.row(i) {
                y.row_mut(j).scaled_add(v, &xrow);
            }
        }
        Ok(y)
    }
}

impl CsrComplexMatrix {
    /// Complex matrix times real dense matrix; the result is promoted to complex.
    pub fn mul_real_dense(&self, x: &ArrayView2<f64>) -> Result<Array2<Complex64>, LinalgError> {
        let promoted = x.mapv(Complex64::from_re);
        self.mul_dense(&promoted.view())
    }

    /// Splits into real and imaginary parts, each a real sparse matrix.
    pub fn split_parts(&self) -> (CsrMatrix, CsrMatrix) {
        let re = CsrMatrix::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().map(|(i, j, v)| (i, j, v.re)),
        )
        .expect("same pattern");
        let im = CsrMatrix::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().map(|(i, j, v)| (i, j, v.im)),
        )
        .expect("same pattern");
        (re, im)
    }
}

impl CsrMatrix {
    pub fn to_complex(&self) -> CsrComplexMatrix {
        let mut out = self.map_values(Complex64::from_re);
        out.hermitian = self.hermitian;
        out
    }
}
