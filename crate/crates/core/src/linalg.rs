//! Dense symmetric linear algebra: Cholesky with jitter escalation, cyclic
//! Jacobi eigen-decomposition, spectral matrix functions, and a pivoted
//! Cholesky for positive semidefinite covariances.
//!
//! Matrices are small and dense (a few hundred rows for solves, up to a few
//! thousand for sampling factors), stored row-major.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_diag(&self) -> f64 {
        self.diag().into_iter().fold(0.0, f64::max)
    }

    /// Largest |a_ij - a_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by (A + Aᵀ)/2.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn add_diag(&mut self, delta: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += delta;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Submatrix picking the given rows and columns, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) const SYMMETRY_TOL: f64 = 1e-12;
/// First jitter level, relative to the largest diagonal entry.
pub const JITTER_START: f64 = 1e-12;
/// Last jitter level, relative to the largest diagonal entry.
pub const JITTER_MAX: f64 = 1e-6;
/// Number of jitter levels tried after the unjittered attempt (1e-12, ..., 1e-6).
pub const JITTER_LEVELS: usize = 7;

const JACOBI_THRESHOLD: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const PSD_TOL: f64 = 1e-10;

/// Symmetric matrix with a lazily computed, cached Cholesky factorization.
pub struct SpdMatrix {
    matrix: Matrix,
    factor: OnceLock<Result<Cholesky>>,
}

impl SpdMatrix {
    /// Wraps a square matrix that is symmetric to within 1e-12 absolute.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        crate::error::check_finite(matrix.as_slice(), "matrix entries")?;
        let asym = matrix.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!("matrix is not symmetric (|a_ij - a_ji| = {asym:e})")));
        }
        Ok(SpdMatrix { matrix, factor: OnceLock::new() })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Cholesky factor with the full jitter escalation.
    pub fn cholesky(&self) -> Result<&Cholesky> {
        self.factor.get_or_init(|| Cholesky::factor(&self.matrix, JITTER_LEVELS)).as_ref().map_err(Clone::clone)
    }

    /// Jitter added to the diagonal by the cached factorization (0 if not yet factored).
    pub fn jitter_applied(&self) -> f64 {
        match self.factor.get() {
            Some(Ok(c)) => c.jitter,
            _ => 0.0,
        }
    }
}

impl Clone for SpdMatrix {
    fn clone(&self) -> Self {
        let factor = OnceLock::new();
        if let Some(f) = self.factor.get() {
            let _ = factor.set(f.clone());
        }
        SpdMatrix { matrix: self.matrix.clone(), factor }
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpdMatrix")
            .field("matrix", &self.matrix)
            .field("jitter_applied", &self.jitter_applied())
            .finish()
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

/// Square-root-free Cholesky factor `M + jitter·I = L D Lᵀ` with unit
/// lower-triangular `L` and positive diagonal `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: Matrix,
    d: Vec<f64>,
    jitter: f64,
    min_pivot: f64,
}

impl Cholesky {
    /// Factors `m`, trying no jitter first and then up to `max_levels` jitter
    /// levels 1e-12·s, 1e-11·s, ... with s the largest diagonal entry.
    pub fn factor(m: &Matrix, max_levels: usize) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::EmptyInput("matrix"));
        }
        let scale = m.max_diag();
        let mut smallest = f64::NAN;
        let mut jitter = 0.0;
        for level in 0..=max_levels.min(JITTER_LEVELS) {
            if level > 0 {
                jitter = JITTER_START * 10f64.powi(level as i32 - 1) * scale;
            }
            match try_ldl(m, jitter) {
                Ok((l, d)) => {
                    let min_pivot = d.iter().copied().fold(f64::INFINITY, f64::min);
                    return Ok(Cholesky { l, d, jitter, min_pivot });
                }
                Err(p) => smallest = p,
            }
            if scale <= 0.0 {
                break;
            }
        }
        Err(Error::Singular { smallest_pivot: smallest, jitter })
    }

    /// Unit lower-triangular factor.
    pub fn unit_lower(&self) -> &Matrix {
        &self.l
    }

    /// Pivots D.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Conventional lower factor L·D^{1/2}.
    pub fn lower(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| self.l[(i, j)] * self.d[j].sqrt())
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Smallest pivot of D.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
        }
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        let l = &self.l;
        for i in 0..n {
            let s = dot(&l.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s;
        }
    }

    /// Solves M X = B column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.nrows() });
        }
        let bt = b.transpose();
        let mut out = Matrix::zeros(bt.nrows(), n);
        for j in 0..bt.nrows() {
            let col = out.row_mut(j);
            col.copy_from_slice(bt.row(j));
            self.solve_in_place(col);
        }
        Ok(out.transpose())
    }
}

/// Returns (L, D), or the first nonpositive pivot.
fn try_ldl(m: &Matrix, jitter: f64) -> std::result::Result<(Matrix, Vec<f64>), f64> {
    let n = m.nrows();
    let mut l = Matrix::identity(n);
    let mut d = vec![0.0; n];
    let mut ld = vec![0.0; n];
    for j in 0..n {
        // ld[k] = L_jk d_k for k < j
        for k in 0..j {
            ld[k] = l[(j, k)] * d[k];
        }
        let dj = m[(j, j)] + jitter - dot(&l.row(j)[..j], &ld[..j]);
        if !(dj > 0.0) || !dj.is_finite() {
            return Err(if dj.is_finite() { dj } else { f64::NAN });
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let s = m[(i, j)] - dot(&l.row(i)[..j], &ld[..j]);
            l[(i, j)] = s / dj;
        }
    }
    Ok((l, d))
}

/// Solves M x = rhs through the (cached) jittered Cholesky factor of M.
pub fn cholesky_solve(m: &SpdMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    crate::error::check_finite(rhs, "right-hand side")?;
    m.cholesky()?.solve(rhs)
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomp {
    /// Q diag(f(λ)) Qᵀ.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&v| f(v)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| q[(i, k)] * fl[k] * q[(j, k)]).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|v| v)
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn sym_eigen(m: &SpdMatrix) -> Result<EigenDecomp> {
    jacobi_eigen(m.matrix())
}

pub(crate) fn jacobi_eigen(m: &Matrix) -> Result<EigenDecomp> {
    let n = m.nrows();
    let mut a = m.clone();
    a.symmetrize();
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_THRESHOLD * a.frobenius();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > threshold {
        return Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec: Vec<f64> = (0..n).map(|r| v[(r, src)]).collect();
        let big = vec.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = vec.iter().find(|x| x.abs() > 1e-12 * big) {
            if *first < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
        }
        for (r, x) in vec.into_iter().enumerate() {
            eigenvectors[(r, col)] = x;
        }
    }
    Ok(EigenDecomp { eigenvalues, eigenvectors })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Applies the rotation zeroing a[p][q] on both sides and accumulates it in v.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
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
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdFunction {
    Sqrt,
    InvSqrt,
}

/// Spectral function Q f(Λ) Qᵀ of a symmetric positive (semi)definite matrix.
///
/// Eigenvalues in [-1e-10·s, 0] (s = max(1, |λ|max)) are clamped to zero for
/// `Sqrt`; anything below that is rejected, as is any nonpositive eigenvalue
/// for `InvSqrt`.
pub fn spd_function(m: &SpdMatrix, f: SpdFunction) -> Result<SpdMatrix> {
    let eig = sym_eigen(m)?;
    let scale = eig.eigenvalues.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let smallest = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if smallest < -PSD_TOL * scale {
        return Err(Error::NotPsd { eigenvalue: smallest });
    }
    let out = match f {
        SpdFunction::Sqrt => eig.reconstruct_with(|v| v.max(0.0).sqrt()),
        SpdFunction::InvSqrt => {
            if smallest <= 0.0 {
                return Err(Error::Singular { smallest_pivot: smallest, jitter: 0.0 });
            }
            eig.reconstruct_with(|v| 1.0 / v.sqrt())
        }
    };
    SpdMatrix::new(out)
}

/// Pivoted Cholesky factor of a positive semidefinite matrix:
/// `M[perm[i]][perm[j]] ≈ Σ_k l[i][k] l[j][k]`, with columns past `rank`
/// dropped once the remaining diagonal falls below 1e-12 of the largest one.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFactor {
    perm: Vec<usize>,
    /// dim × rank, rows in pivot order, lower trapezoidal.
    l: Matrix,
}

impl PsdFactor {
    pub fn factor(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let n = m.nrows();
        let scale = m.max_diag();
        let stop = 1e-12 * scale;
        let neg_tol = PSD_TOL * scale.max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut d: Vec<f64> = m.diag();
        // Full n×n storage; only the first `rank` columns end up used.
        let mut l = Matrix::zeros(n, n);
        let mut rank = 0;
        for k in 0..n {
            let (jmax, dmax) =
                (k..n).map(|j| (j, d[j])).fold(
                    (k, f64::NEG_INFINITY),
                    |best, cur| {
                        if cur.1 > best.1 {
                            cur
                        } else {
                            best
                        }
                    },
                );
            if !(dmax > stop) {
                break;
            }
            if jmax != k {
                perm.swap(k, jmax);
                d.swap(k, jmax);
                for c in 0..k {
                    let tmp = l[(k, c)];
                    l[(k, c)] = l[(jmax, c)];
                    l[(jmax, c)] = tmp;
                }
            }
            let lkk = dmax.sqrt();
            l[(k, k)] = lkk;
            let pk = perm[k];
            for i in (k + 1)..n {
                let s = m[(perm[i], pk)] - dot(&l.row(i)[..k], &l.row(k)[..k]);
                let lik = s / lkk;
                l[(i, k)] = lik;
                d[i] -= lik * lik;
            }
            rank += 1;
        }

        if rank < n {
            check_remainder(m, &perm, &l, rank, neg_tol)?;
        }

        let trimmed = Matrix::from_fn(n, rank, |i, j| l[(i, j)]);
        Ok(PsdFactor { perm, l: trimmed })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn rank(&self) -> usize {
        self.l.ncols()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Factor rows in pivot order.
    pub fn l(&self) -> &Matrix {
        &self.l
    }

    /// The factor in original coordinate order: F with F Fᵀ ≈ M.
    pub fn unpermuted(&self) -> Matrix {
        let mut f = Matrix::zeros(self.dim(), self.rank());
        for (i, &p) in self.perm.iter().enumerate() {
            f.row_mut(p).copy_from_slice(self.l.row(i));
        }
        f
    }
}

/// The Schur complement left after early termination must be PSD up to tolerance.
fn check_remainder(m: &Matrix, perm: &[usize], l: &Matrix, rank: usize, neg_tol: f64) -> Result<()> {
    let n = m.nrows();
    let rest = n - rank;
    let s = Matrix::from_fn(rest, rest, |i, j| {
        let (a, b) = (i + rank, j + rank);
        m[(perm[a], perm[b])] - dot(&l.row(a)[..rank], &l.row(b)[..rank])
    });
    let min_diag = s.diag().into_iter().fold(f64::INFINITY, f64::min);
    if min_diag < -neg_tol {
        return Err(Error::NotPsd { eigenvalue: min_diag });
    }
    let gershgorin = (0..rest)
        .map(|i| s[(i, i)] - (0..rest).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if gershgorin >= -neg_tol {
        return Ok(());
    }
    let eig = jacobi_eigen(&s)?;
    let smallest = eig.eigenvalues[0];
    if smallest < -neg_tol {
        return Err(Error::NotPsd { eigenvalue: smallest });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd(rows: &[Vec<f64>]) -> SpdMatrix {
        SpdMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn solve_diagonal() {
        let m = spd(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(cholesky_solve(&m, &[2.0, 4.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(m.jitter_applied(), 0.0);
    }

    #[test]
    fn solve_zero_rhs() {
        let m = spd(&[vec![1.0]]);
        assert_eq!(cholesky_solve(&m, &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn solve_two_by_two() {
        let m = spd(&[vec![0.6, 0.5], vec![0.5, 1.1]]);
        let x = cholesky_solve(&m, &[1.0, 1.0]).unwrap();
        // det = 0.41: x = [0.6/0.41, 0.1/0.41]
        assert_relative_eq!(x[0], 0.6 / 0.41, max_relative = 1e-14);
        assert_relative_eq!(x[1], 0.1 / 0.41, max_relative = 1e-13);
        assert_relative_eq!(x[0], 1.4634146, epsilon = 1e-7);
        assert_relative_eq!(x[1], 0.2439024, epsilon = 1e-7);
    }

    #[test]
    fn singular_escalates_then_fails() {
        let m = spd(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        // Rank one: jitter makes it factorable.
        let c = m.cholesky().unwrap();
        assert!(c.jitter() > 0.0);
        assert_eq!(m.jitter_applied(), c.jitter());

        let neg = spd(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        match cholesky_solve(&neg, &[1.0, 1.0]) {
            Err(Error::Singular { smallest_pivot, jitter }) => {
                assert!(smallest_pivot < 0.0);
                assert_relative_eq!(jitter, 1e-6, max_relative = 1e-9);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn zero_matrix_is_singular() {
        let m = spd(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(m.cholesky(), Err(Error::Singular { .. })));
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(SpdMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(SpdMatrix::from_rows(&[vec![1.0, 0.5]]).is_err());
    }

    #[test]
    fn eigen_identity_and_diag() {
        let e = sym_eigen(&SpdMatrix::new(Matrix::identity(3)).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);

        let e = sym_eigen(&spd(&[vec![4.0, 0.0], vec![0.0, 1.0]])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 4.0]);
        assert_eq!(e.eigenvectors.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn eigen_two_by_two() {
        let e = sym_eigen(&spd(&[vec![2.0, 1.0], vec![1.0, 2.0]])).unwrap();
        assert_relative_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvalues[1], 3.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // Sign convention: first nonzero component positive.
        assert_relative_eq!(e.eigenvectors[(0, 0)], h, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvectors[(1, 0)], -h, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvectors[(0, 1)], h, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvectors[(1, 1)], h, epsilon = 1e-14);
    }

    #[test]
    fn spd_function_cases() {
        let id = SpdMatrix::new(Matrix::identity(3)).unwrap();
        for f in [SpdFunction::Sqrt, SpdFunction::InvSqrt] {
            assert_eq!(spd_function(&id, f).unwrap().matrix(), &Matrix::identity(3));
        }
        let s = spd_function(&spd(&[vec![4.0, 0.0], vec![0.0, 9.0]]), SpdFunction::Sqrt).unwrap();
        assert_eq!(s.matrix().to_rows(), vec![vec![2.0, 0.0], vec![0.0, 3.0]]);

        let r = spd_function(&spd(&[vec![2.0, 0.0], vec![0.0, 8.0]]), SpdFunction::InvSqrt).unwrap();
        let y = r.matrix().matvec(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(y[0], 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(y[1], 1.0 / 8f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn spd_function_rejects_indefinite() {
        let m = spd(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(spd_function(&m, SpdFunction::Sqrt), Err(Error::NotPsd { .. })));
        let singular = spd(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(spd_function(&singular, SpdFunction::Sqrt).is_ok());
        assert!(spd_function(&singular, SpdFunction::InvSqrt).is_err());
    }

    #[test]
    fn psd_factor_rank_deficient() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let f = PsdFactor::factor(&m).unwrap();
        assert_eq!(f.rank(), 1);
        let u = f.unpermuted();
        let rec = u.matmul(&u.transpose()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(rec[(i, j)], m[(i, j)], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn psd_factor_rejects_indefinite() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(PsdFactor::factor(&m), Err(Error::NotPsd { .. })));
        let zero = Matrix::zeros(2, 2);
        assert_eq!(PsdFactor::factor(&zero).unwrap().rank(), 0);
    }
}
