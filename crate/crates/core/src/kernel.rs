//! Double-precision complex matrix primitives: products, conjugate
//! transpose, triangular solves, and a semidefinite LDL* (Cholesky)
//! decomposition with rank detection.
//!
//! The decomposition is deliberately unpivoted: variable order is semantic
//! for everything built on top of it (innovations are taken in the given
//! order), so a permutation here would change the meaning, not just the
//! numerics.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl CMatrix {
    /// Build a matrix from row-major entries. Rejects length mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::dims(
                "CMatrix::new",
                format!("{rows}x{cols} needs {} entries, got {}", rows * cols, entries.len()),
            ));
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(CMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dims("CMatrix::from_rows", "ragged rows".to_string()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    /// Real matrix helper, mostly for tests and scenario builders.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            entries: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j] = value;
    }

    /// Standard complex matrix product.
    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::dims(
                "matmul",
                format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.at(i, j) + a * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product, used by the simulators.
    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::dims(
                "matvec",
                format!("{}x{} * {}-vector", self.rows, self.cols, v.len()),
            ));
        }
        let mut out = vec![Complex64::ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::ZERO;
            for k in 0..self.cols {
                acc += self.at(i, k) * v[k];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Conjugate transpose: `out[i][j] = conj(self[j][i])`.
    pub fn conj_transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &CMatrix,
        context: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<CMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(
                context,
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| z * s).collect(),
        }
    }

    /// Horizontal concatenation [self | right].
    pub fn hconcat(&self, right: &CMatrix) -> Result<CMatrix> {
        if self.rows != right.rows {
            return Err(Error::dims(
                "hconcat",
                format!("{} rows vs {} rows", self.rows, right.rows),
            ));
        }
        let mut out = CMatrix::zeros(self.rows, self.cols + right.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.at(i, j));
            }
            for j in 0..right.cols {
                out.set(i, self.cols + j, right.at(i, j));
            }
        }
        Ok(out)
    }

    /// Extract the submatrix with the given (not necessarily contiguous)
    /// row and column indices, in the given order.
    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> CMatrix {
        let mut out = CMatrix::zeros(row_idx.len(), col_idx.len());
        for (i, &ri) in row_idx.iter().enumerate() {
            for (j, &cj) in col_idx.iter().enumerate() {
                out.set(i, j, self.at(ri, cj));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise absolute difference to another matrix of the same
    /// shape. Panics on shape mismatch (test/diagnostic helper).
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Square Hermitian matrix of second-order statistics. Construction
/// symmetrizes the input as (M + M*)/2, zeroes the imaginary parts of the
/// diagonal, and rejects inputs whose asymmetry exceeds 1e-9 relative to the
/// largest entry magnitude. Positive semidefiniteness is established by
/// [`HermitianGram::ldl_semidefinite`], which every consumer of the pivots
/// runs.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianGram {
    entries: CMatrix,
}

/// Relative asymmetry tolerated by [`HermitianGram::new`].
const HERMITIAN_REL_TOL: f64 = 1e-9;

impl HermitianGram {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::dims(
                "HermitianGram::new",
                format!("{}x{} is not square", m.rows(), m.cols()),
            ));
        }
        let n = m.rows();
        let scale = m.max_abs().max(1.0);
        let mut asymmetry: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                asymmetry = asymmetry.max((m.at(i, j) - m.at(j, i).conj()).norm());
            }
        }
        let tolerance = HERMITIAN_REL_TOL * scale;
        if asymmetry > tolerance {
            return Err(Error::NotHermitian { asymmetry, tolerance });
        }
        let mut sym = CMatrix::zeros(n, n);
        for i in 0..n {
            sym.set(i, i, Complex64::new(m.at(i, i).re, 0.0));
            for j in (i + 1)..n {
                let v = (m.at(i, j) + m.at(j, i).conj()) * 0.5;
                sym.set(i, j, v);
                sym.set(j, i, v.conj());
            }
        }
        Ok(HermitianGram { entries: sym })
    }

    pub fn identity(n: usize) -> Self {
        HermitianGram {
            entries: CMatrix::identity(n),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if !diag.iter().all(|d| d.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, Complex64::new(d, 0.0));
        }
        Ok(HermitianGram { entries: m })
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.entries.at(i, j)
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.at(i, i).re).fold(0.0, f64::max)
    }

    /// Pivot threshold for treating a diagonal entry of the decomposition as
    /// exactly zero: dim * 2^-52 * (max diagonal, floored at 1).
    pub fn pivot_tolerance(&self) -> f64 {
        self.dim() as f64 * f64::EPSILON * self.max_diagonal().max(1.0)
    }

    /// Semidefinite LDL* decomposition in the stored variable order.
    ///
    /// Returns a monic lower-triangular factor and nonnegative pivots with
    /// `L * diag(d2) * L* = self`. A pivot within the tolerance of zero marks
    /// a linearly dependent variable: the pivot is set to exactly 0 and the
    /// rest of that column of L is zeroed, which leaves the reconstruction
    /// unchanged for a semidefinite input. A pivot below `-tolerance` means
    /// the input was not positive semidefinite.
    pub fn ldl_semidefinite(&self) -> Result<InnovationsForm> {
        let n = self.dim();
        let tol = self.pivot_tolerance();
        let mut l = CMatrix::identity(n);
        let mut d2 = vec![0.0; n];
        for j in 0..n {
            let mut d = self.at(j, j).re;
            for k in 0..j {
                d -= l.at(j, k).norm_sqr() * d2[k];
            }
            if d < -tol {
                return Err(Error::NotPositiveSemidefinite {
                    index: j,
                    pivot: d,
                    tolerance: tol,
                });
            }
            if d.abs() <= tol {
                // Dependent variable: zero pivot, zero column below the
                // diagonal. The span is unchanged.
                d2[j] = 0.0;
                continue;
            }
            d2[j] = d;
            for i in (j + 1)..n {
                let mut s = self.at(i, j);
                for k in 0..j {
                    s -= l.at(i, k) * l.at(j, k).conj() * d2[k];
                }
                l.set(i, j, s / d);
            }
        }
        let rank = d2.iter().filter(|&&d| d > 0.0).count();
        Ok(InnovationsForm { l, d2, rank })
    }

    /// Solve `self * x = b` through the LDL* factors. Requires full rank.
    pub fn solve_psd(&self, b: &CMatrix) -> Result<CMatrix> {
        let form = self.ldl_semidefinite()?;
        form.solve(b)
    }

    /// Number of nonzero pivots of the decomposition.
    pub fn rank(&self) -> Result<usize> {
        Ok(self.ldl_semidefinite()?.rank())
    }
}

/// Result of [`HermitianGram::ldl_semidefinite`]: monic lower-triangular `L`,
/// nonnegative pivots `d2` (the squared norms of the innovations variables),
/// and the count of nonzero pivots, which equals the rank of the input.
#[derive(Debug, Clone)]
pub struct InnovationsForm {
    l: CMatrix,
    d2: Vec<f64>,
    rank: usize,
}

impl InnovationsForm {
    pub fn l(&self) -> &CMatrix {
        &self.l
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub fn dim(&self) -> usize {
        self.d2.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.d2.len()
    }

    /// Determinant of the decomposed matrix: the product of the pivots,
    /// exactly 0 when rank-deficient.
    pub fn determinant(&self) -> f64 {
        if !self.is_full_rank() {
            return 0.0;
        }
        self.d2.iter().product()
    }

    /// Sum of log pivots; `None` when rank-deficient. More stable than
    /// `determinant().ln()` for larger dimensions.
    pub fn log_determinant(&self) -> Option<f64> {
        if !self.is_full_rank() {
            return None;
        }
        Some(self.d2.iter().map(|d| d.ln()).sum())
    }

    /// `L * diag(d2) * L*`, the reconstruction of the decomposed matrix.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..=i.min(j) {
                    acc += self.l.at(i, k) * self.l.at(j, k).conj() * self.d2[k];
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Solve `(L diag(d2) L*) x = b`. Requires full rank.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if !self.is_full_rank() {
            return Err(Error::singular("psd solve", self.rank, self.dim()));
        }
        let u = solve_unit_lower(&self.l, b)?;
        let mut w = u;
        for i in 0..w.rows() {
            let inv = 1.0 / self.d2[i];
            for j in 0..w.cols() {
                w.set(i, j, w.at(i, j) * inv);
            }
        }
        solve_unit_upper_adjoint(&self.l, &w)
    }
}

/// Forward substitution for a monic lower-triangular system `l * x = b`.
/// Exact divisions are avoided entirely thanks to the unit diagonal.
pub fn solve_unit_lower(l: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if l.rows() != l.cols() {
        return Err(Error::dims(
            "solve_unit_lower",
            format!("{}x{} is not square", l.rows(), l.cols()),
        ));
    }
    if l.rows() != b.rows() {
        return Err(Error::dims(
            "solve_unit_lower",
            format!("{}x{} vs rhs {}x{}", l.rows(), l.cols(), b.rows(), b.cols()),
        ));
    }
    debug_assert!((0..l.rows()).all(|i| l.at(i, i) == Complex64::ONE));
    let n = l.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut v = x.at(i, col);
            for k in 0..i {
                v -= l.at(i, k) * x.at(k, col);
            }
            x.set(i, col, v);
        }
    }
    Ok(x)
}

/// Backward substitution for `l* x = b` where `l` is monic lower triangular
/// (so `l*` is monic upper triangular).
fn solve_unit_upper_adjoint(l: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if l.rows() != b.rows() {
        return Err(Error::dims(
            "solve_unit_upper_adjoint",
            format!("{}x{} vs rhs {}x{}", l.rows(), l.cols(), b.rows(), b.cols()),
        ));
    }
    let n = l.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in (0..n).rev() {
            let mut v = x.at(i, col);
            for k in (i + 1)..n {
                v -= l.at(k, i).conj() * x.at(k, col);
            }
            x.set(i, col, v);
        }
    }
    Ok(x)
}
