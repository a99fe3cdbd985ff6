//! Small dense matrix/vector kernel.
//!
//! Everything here is sized for a handful of states and parameters (the
//! shipped plant uses 4 parameters and 2 degrees of freedom), so the
//! implementations favor robustness over asymptotic cleverness: symmetric
//! eigenvalues come from cyclic Jacobi sweeps and SPD solves from an
//! unpivoted Cholesky factorization.

use alloc::vec;
use alloc::vec::Vec as AVec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Relative symmetry tolerance for operations that require a symmetric input.
const SYMMETRY_TOL: f64 = 1e-9;
/// Jacobi sweep termination: off-diagonal Frobenius norm below this fraction
/// of the input norm.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum NumError {
    /// Operand shapes are incompatible.
    ShapeMismatch {
        rows: usize,
        cols: usize,
        other_rows: usize,
        other_cols: usize,
    },
    NotSquare {
        rows: usize,
        cols: usize,
    },
    /// Symmetry required but the input is asymmetric beyond tolerance.
    NotSymmetric,
    /// Matrix singular (or not positive definite) within tolerance.
    Singular,
}

impl fmt::Display for NumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumError::ShapeMismatch {
                rows,
                cols,
                other_rows,
                other_cols,
            } => write!(
                f,
                "shape mismatch: {rows}x{cols} vs {other_rows}x{other_cols}"
            ),
            NumError::NotSquare { rows, cols } => {
                write!(f, "matrix is not square: {rows}x{cols}")
            }
            NumError::NotSymmetric => write!(f, "matrix is not symmetric within tolerance"),
            NumError::Singular => write!(f, "matrix is singular within tolerance"),
        }
    }
}

impl core::error::Error for NumError {}

/// Dense column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VecN {
    data: AVec<f64>,
}

impl VecN {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![0.0; dim],
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self {
            data: values.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn dot(&self, other: &VecN) -> Result<f64, NumError> {
        if self.dim() != other.dim() {
            return Err(NumError::ShapeMismatch {
                rows: self.dim(),
                cols: 1,
                other_rows: other.dim(),
                other_cols: 1,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn scale(&self, a: f64) -> VecN {
        VecN {
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add(&self, other: &VecN) -> Result<VecN, NumError> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &VecN) -> Result<VecN, NumError> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &VecN) -> Result<(), NumError> {
        if self.dim() != other.dim() {
            return Err(NumError::ShapeMismatch {
                rows: self.dim(),
                cols: 1,
                other_rows: other.dim(),
                other_cols: 1,
            });
        }
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Interpret as a single-column matrix.
    pub fn to_col_mat(&self) -> Mat {
        Mat {
            rows: self.dim(),
            cols: 1,
            data: self.data.clone(),
        }
    }
}

impl Index<usize> for VecN {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for VecN {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: AVec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = AVec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: AVec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Result<Mat, NumError> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat, NumError> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Mat) -> Result<(), NumError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(self.shape_err(other));
        }
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat, NumError> {
        if self.cols != other.rows {
            return Err(self.shape_err(other));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &VecN) -> Result<VecN, NumError> {
        if self.cols != v.dim() {
            return Err(NumError::ShapeMismatch {
                rows: self.rows,
                cols: self.cols,
                other_rows: v.dim(),
                other_cols: 1,
            });
        }
        let mut out = VecN::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// `selfᵀ · v` without forming the transpose.
    pub fn tr_matvec(&self, v: &VecN) -> Result<VecN, NumError> {
        if self.rows != v.dim() {
            return Err(NumError::ShapeMismatch {
                rows: self.cols,
                cols: self.rows,
                other_rows: v.dim(),
                other_cols: 1,
            });
        }
        let mut out = VecN::zeros(self.cols);
        for i in 0..self.rows {
            let a = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)] * a;
            }
        }
        Ok(out)
    }

    /// `self += a · m · mᵀ` (rank-k update used for Gram matrix maintenance).
    pub fn add_outer(&mut self, a: f64, m: &Mat) -> Result<(), NumError> {
        if self.rows != m.rows || self.cols != m.rows {
            return Err(self.shape_err(m));
        }
        for i in 0..m.rows {
            for j in 0..m.rows {
                let mut acc = 0.0;
                for k in 0..m.cols {
                    acc += m[(i, k)] * m[(j, k)];
                }
                self[(i, j)] += a * acc;
            }
        }
        Ok(())
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// Extract column `j` as a vector.
    pub fn col(&self, j: usize) -> VecN {
        let mut out = VecN::zeros(self.rows);
        for i in 0..self.rows {
            out[i] = self[(i, j)];
        }
        out
    }

    /// `(self + selfᵀ) / 2`; requires a square matrix.
    pub fn symmetrized(&self) -> Result<Mat, NumError> {
        if self.rows != self.cols {
            return Err(NumError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = m;
                out[(j, i)] = m;
            }
        }
        Ok(out)
    }

    fn shape_err(&self, other: &Mat) -> NumError {
        NumError::ShapeMismatch {
            rows: self.rows,
            cols: self.cols,
            other_rows: other.rows,
            other_cols: other.cols,
        }
    }

    fn check_symmetric(&self) -> Result<(), NumError> {
        if self.rows != self.cols {
            return Err(NumError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let scale = self.frob_norm();
        let tol = SYMMETRY_TOL * scale.max(1e-300);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if libm::fabs(self[(i, j)] - self[(j, i)]) > tol {
                    return Err(NumError::NotSymmetric);
                }
            }
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, in no
/// particular order.
pub fn sym_eigenvalues(g: &Mat) -> Result<VecN, NumError> {
    g.check_symmetric()?;
    let n = g.rows();
    let scale = g.frob_norm();
    let mut a = g.symmetrized()?;
    if n <= 1 || scale == 0.0 {
        return Ok(VecN::from_slice(
            &(0..n).map(|i| a[(i, i)]).collect::<AVec<f64>>(),
        ));
    }
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        if libm::sqrt(off) < JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // Rotate rows/columns p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Ok(VecN::from_slice(
        &(0..n).map(|i| a[(i, i)]).collect::<AVec<f64>>(),
    ))
}

/// Minimum singular value of a symmetric PSD matrix, i.e. its smallest
/// eigenvalue clamped at zero from below.
pub fn min_singular_value(g: &Mat) -> Result<f64, NumError> {
    let evs = sym_eigenvalues(g)?;
    let min = evs
        .as_slice()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(if g.rows() == 0 { 0.0 } else { min.max(0.0) })
}

/// Solve `a · x = b` for symmetric positive-definite `a` via Cholesky.
pub fn solve_spd(a: &Mat, b: &Mat) -> Result<Mat, NumError> {
    a.check_symmetric()?;
    let n = a.rows();
    if b.rows() != n {
        return Err(NumError::ShapeMismatch {
            rows: n,
            cols: n,
            other_rows: b.rows(),
            other_cols: b.cols(),
        });
    }
    // Lower-triangular factor L with a·= L·Lᵀ.
    let mut l = Mat::zeros(n, n);
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(libm::fabs(a[(i, i)])));
    let tol = 1e-12 * max_diag.max(1e-300);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if acc <= tol {
                    return Err(NumError::Singular);
                }
                l[(i, i)] = libm::sqrt(acc);
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    // Forward then back substitution, column by column.
    let mut x = Mat::zeros(n, b.cols());
    for col in 0..b.cols() {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[(i, col)];
            for k in 0..i {
                acc -= l[(i, k)] * y[k];
            }
            y[i] = acc / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)];
        }
    }
    Ok(x)
}
