//! Compressed sparse row matrices and a symmetric positive definite solver.

use std::io::{self, Write};

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `a − b` componentwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += alpha·x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

/// CSR matrix with sorted, unique column indices per row. Explicit zeros are
/// kept so that matrices assembled on the same mesh share their pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            nrows: d.len(),
            ncols: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            entries.extend(self.row(i).map(|(j, v)| (j, i, v)));
        }
        Self::from_triplets(self.ncols, self.nrows, entries)
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `Σ αₖ Aₖ` over matrices of equal shape; the pattern is the union.
    pub fn lin_comb(terms: &[(f64, &SparseMatrix)]) -> Self {
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let same_pattern = terms
            .iter()
            .all(|(_, m)| m.row_ptr == terms[0].1.row_ptr && m.col_idx == terms[0].1.col_idx);
        if same_pattern {
            let mut out = terms[0].1.clone();
            for (k, v) in out.values.iter_mut().enumerate() {
                *v = terms.iter().map(|(a, m)| a * m.values[k]).sum();
            }
            return out;
        }
        let mut entries = Vec::new();
        for (alpha, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols), "shape mismatch");
            for i in 0..nrows {
                entries.extend(m.row(i).map(|(j, v)| (i, j, alpha * v)));
            }
        }
        Self::from_triplets(nrows, ncols, entries)
    }

    /// `A + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        Self::lin_comb(&[(1.0, self), (1.0, &Self::from_diagonal(d))])
    }

    /// Symmetric elimination of the flagged unknowns: their rows and columns
    /// are zeroed and the diagonal set to one.
    pub fn eliminate(&self, fixed: &[bool]) -> Self {
        let mut out = self.clone();
        for i in 0..out.nrows {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                let j = out.col_idx[k];
                if fixed[i] || fixed[j] {
                    out.values[k] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Compressed column form; for a symmetric matrix the CSR arrays are reused.
    pub fn to_csc(&self) -> CscMatrix<f64> {
        let t = self.transpose();
        CscMatrix::try_from_csc_data(self.nrows, self.ncols, t.row_ptr, t.col_idx, t.values)
            .expect("CSR invariants give valid CSC data")
    }

    /// Writes `row col value` lines, one per stored entry, 0-based.
    pub fn write_triplets(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse Cholesky factorization with a residual check on every solve.
pub struct SpdSolver {
    matrix: SparseMatrix,
    factor: CscCholesky<f64>,
    tol: f64,
}

impl SpdSolver {
    pub fn new(matrix: &SparseMatrix, tol: f64) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::LinearSolveFailure("matrix is not square".into()));
        }
        let factor = CscCholesky::factor(&matrix.to_csc())
            .map_err(|e| Error::LinearSolveFailure(format!("Cholesky factorization: {e:?}")))?;
        Ok(Self {
            matrix: matrix.clone(),
            factor,
            tol,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Solves `A x = b`, refining until `‖b − Ax‖ ≤ tol·‖b‖`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let scale = norm2(b);
        if scale == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.raw_solve(b);
        for _ in 0..4 {
            let r = sub(b, &self.matrix.mul_vec(&x));
            let rn = norm2(&r);
            if !rn.is_finite() {
                break;
            }
            if rn <= self.tol * scale {
                return Ok(x);
            }
            let dx = self.raw_solve(&r);
            axpy(1.0, &dx, &mut x);
        }
        let rn = norm2(&sub(b, &self.matrix.mul_vec(&x)));
        Err(Error::LinearSolveFailure(format!(
            "relative residual {:.3e} exceeds {:.3e}",
            rn / scale,
            self.tol
        )))
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = DMatrix::from_column_slice(b.len(), 1, b);
        self.factor.solve_mut(&mut rhs);
        rhs.as_slice().to_vec()
    }
}

/// Smallest eigenvalue of the pencil `A x = λ G x` for SPD `A` and `G`, by
/// inverse iteration with a Rayleigh quotient.
pub fn smallest_generalized_eigenvalue(a: &SparseMatrix, g: &SparseMatrix, iterations: usize) -> Result<f64> {
    let solver = SpdSolver::new(a, 1e-10)?;
    let n = a.nrows();
    // deterministic start with components in every direction
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i * 7919) % 13) as f64).collect();
    let mut lambda = f64::INFINITY;
    for _ in 0..iterations {
        let gx = g.mul_vec(&x);
        let y = solver.solve(&gx)?;
        let gy = g.quad_form(&y).sqrt();
        x = y.iter().map(|v| v / gy).collect();
        let next = a.quad_form(&x) / g.quad_form(&x);
        let done = (lambda - next).abs() <= 1e-10 * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}
