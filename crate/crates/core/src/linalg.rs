//! Small dense complex linear algebra.
//!
//! Everything here is sized for spin systems of dimension ≤ 4: row-major
//! storage, naive products, and a cyclic complex Jacobi eigensolver. No
//! attempt is made to scale beyond that.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used for state coefficients and matrix entries.
pub type ComplexAmplitude = Complex64;

/// Entrywise tolerance for the Hermitian check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max |A - A^H| = {max_deviation:.3e})")]
    NotHermitian { max_deviation: f64 },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a valid density matrix: {reason}")]
    BadDensityMatrix { reason: String },
    #[error("Jacobi iteration did not converge (off-diagonal norm {off_norm:.3e})")]
    NoConvergence { off_norm: f64 },
}

#[inline]
pub fn c(re: f64, im: f64) -> ComplexAmplitude {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> ComplexAmplitude {
    Complex64::new(re, 0.0)
}

/// Dense complex vector.
#[derive(Clone, PartialEq)]
pub struct CVector {
    entries: Vec<ComplexAmplitude>,
}

impl CVector {
    pub fn new(entries: Vec<ComplexAmplitude>) -> Self {
        Self { entries }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| real(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// Unit vector along `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = real(1.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ComplexAmplitude] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexAmplitude> {
        self.entries.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: ComplexAmplitude) -> Self {
        Self::new(self.entries.iter().map(|&z| z * k).collect())
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVector) -> ComplexAmplitude {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_abs_diff(&self, other: &CVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Outer product |self⟩⟨self|.
    pub fn projector(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.entries[i] * self.entries[j].conj();
            }
        }
        m
    }
}

impl Index<usize> for CVector {
    type Output = ComplexAmplitude;
    fn index(&self, i: usize) -> &ComplexAmplitude {
        &self.entries[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut ComplexAmplitude {
        &mut self.entries[i]
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.iter()).finish()
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<ComplexAmplitude>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = real(1.0);
        }
        m
    }

    /// Builds a matrix from nested rows. Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[ComplexAmplitude]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            entries.extend_from_slice(r);
        }
        Self {
            rows: nrows,
            cols: ncols,
            entries,
        }
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let rows: Vec<Vec<ComplexAmplitude>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| real(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = real(v);
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVector]) -> Self {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, CVector::dim);
        let mut m = Self::zeros(nrows, ncols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.dim(), nrows, "ragged columns");
            for i in 0..nrows {
                m[(i, j)] = col[i];
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[ComplexAmplitude] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector::new((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn columns(&self) -> Vec<CVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &CVector) {
        assert_eq!(v.dim(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn scale(&self, k: ComplexAmplitude) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn matvec(&self, v: &CVector) -> Result<CVector, LinalgError> {
        if v.dim() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: v.dim(),
            });
        }
        Ok(CVector::new(
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
                .collect(),
        ))
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    m[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(m)
    }

    pub fn trace(&self) -> ComplexAmplitude {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self - other`. Shapes must agree.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A[i][j] - conj(A[j][i])|, or infinity for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// ‖A†A − I‖_max.
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = &self.adjoint() * self;
        gram.max_abs_diff(&CMatrix::identity(self.cols))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Frobenius norm of the strictly off-diagonal part.
    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = ComplexAmplitude;
    fn index(&self, (i, j): (usize, usize)) -> &ComplexAmplitude {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut ComplexAmplitude {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Panics on a shape mismatch; use [`CMatrix::matmul`] for a checked product.
impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

/// Kronecker product, dims (aᵣbᵣ)×(a_c b_c).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    m[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    m
}

/// [A, B] = AB − BA.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &(a * b) - &(b * a)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Eigenvalues, sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigen {
    /// ‖H·vᵢ − λᵢvᵢ‖ maximised over columns.
    pub fn residual(&self, h: &CMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for (j, &lambda) in self.values.iter().enumerate() {
            let v = self.vectors.column(j);
            let hv = h.matvec(&v).expect("shape checked at construction");
            worst = worst.max(hv.max_abs_diff(&v.scale(real(lambda))));
        }
        worst
    }

    /// V Λ V†.
    pub fn reconstruct(&self) -> CMatrix {
        let lambda = CMatrix::diag(&self.values);
        &(&self.vectors * &lambda) * &self.vectors.adjoint()
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `h[p][q]` with a
/// diagonal unitary, then applies the real Jacobi rotation that annihilates
/// it. Sweeps continue until the off-diagonal Frobenius norm drops to
/// [`JACOBI_OFF_TOL`]. Ties in the sorted spectrum keep the order in which
/// the solver produced them (stable sort).
pub fn hermitian_eigen(h: &CMatrix) -> Result<Eigen, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare {
            rows: h.rows,
            cols: h.cols,
        });
    }
    let max_deviation = h.hermitian_deviation();
    if max_deviation > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian { max_deviation });
    }
    let n = h.rows;
    let mut a = h.clone();
    // symmetrise away sub-tolerance asymmetry so the iteration sees an exact Hermitian
    for i in 0..n {
        a[(i, i)] = real(a[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);

    let mut sweeps = 0;
    while a.off_diagonal_norm() > JACOBI_OFF_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence {
                off_norm: a.off_diagonal_norm(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let magnitude = apq.norm();
                if magnitude < 1e-300 {
                    continue;
                }
                let phase = apq / magnitude;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * magnitude);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // U = diag(1, conj(phase)) · [[c, s], [-s, c]] in the (p, q) plane
                let mut u = CMatrix::identity(n);
                u[(p, p)] = real(cs);
                u[(p, q)] = real(sn);
                u[(q, p)] = phase.conj() * (-sn);
                u[(q, q)] = phase.conj() * cs;
                a = &(&u.adjoint() * &a) * &u;
                a[(p, q)] = real(0.0);
                a[(q, p)] = real(0.0);
                v = &v * &u;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let columns: Vec<CVector> = order.iter().map(|&i| v.column(i)).collect();
    Ok(Eigen {
        values,
        vectors: CMatrix::from_columns(&columns),
    })
}

/// Validates that `rho` is a 4×4 Hermitian, unit-trace matrix.
fn check_two_qubit_density(rho: &CMatrix) -> Result<(), LinalgError> {
    if rho.rows != 4 || rho.cols != 4 {
        return Err(LinalgError::BadDensityMatrix {
            reason: format!("expected 4x4, got {}x{}", rho.rows, rho.cols),
        });
    }
    let dev = rho.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(LinalgError::BadDensityMatrix {
            reason: format!("not Hermitian (deviation {dev:.3e})"),
        });
    }
    let tr = rho.trace();
    if (tr - real(1.0)).norm() > 1e-10 {
        return Err(LinalgError::BadDensityMatrix {
            reason: format!("trace {:.12} + {:.12}i is not 1", tr.re, tr.im),
        });
    }
    Ok(())
}

/// Traces out the first particle of a two-qubit density matrix, returning the
/// reduced state of the second: ρ_B[k][l] = Σ_i ρ[(i,k)][(i,l)].
pub fn partial_trace_first(rho: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_two_qubit_density(rho)?;
    let mut out = CMatrix::zeros(2, 2);
    for k in 0..2 {
        for l in 0..2 {
            out[(k, l)] = (0..2).map(|i| rho[(2 * i + k, 2 * i + l)]).sum();
        }
    }
    Ok(out)
}

/// Traces out the second particle: ρ_A[i][j] = Σ_k ρ[(i,k)][(j,k)].
pub fn partial_trace_second(rho: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_two_qubit_density(rho)?;
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = (0..2).map(|k| rho[(2 * i + k, 2 * j + k)]).sum();
        }
    }
    Ok(out)
}
