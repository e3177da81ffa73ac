//! Dense complex linear algebra: the matrix type everything else is built on,
//! subsystem bookkeeping for tensor-product spaces, Hermitian
//! eigendecomposition with a deterministic basis convention, and the
//! Hilbert–Schmidt / weighted inner products.
//!
//! Matrices are stored row-major. Composite indices follow the convention
//! that the *left* tensor factor is the outermost digit: for dims `[d0, d1]`
//! the composite index is `i0 * d1 + i1`, matching [`tensor_product`].

mod density;
mod eig;

pub use density::DensityMatrix;
pub use eig::{hermitian_eig, matrix_function, HermitianEig};

use num_complex::Complex64;

use crate::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        if self.rows > 8 || self.cols > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Matrix unit `E_{jk}` of size `n`, a single 1 at row `j`, column `k`.
    pub fn basis_matrix(n: usize, j: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(j, k)] = ONE;
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, entries })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn diagonal_real(values: &[f64]) -> Self {
        Self::diagonal(&values.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>())
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

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conjugate(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)].conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, entries }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, entries }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let lhs_row = &mut out.entries[r * other.cols..(r + 1) * other.cols];
                let rhs_row = &other.entries[k * other.cols..(k + 1) * other.cols];
                for (o, b) in lhs_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `a * self * a†` — the image of `self` under conjugation by `a`.
    pub fn conjugate_by(&self, a: &Self) -> Self {
        a.mul(self).mul(&a.adjoint())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hs_distance(&self, other: &Self) -> f64 {
        self.sub(other).hs_norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖A − A†‖`, zero for Hermitian matrices.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut s = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let d = self[(r, c)] - self[(c, r)].conj();
                s += d.norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `(A + A†)/2`.
    pub fn hermitize(&self) -> Self {
        self.add(&self.adjoint()).scale_real(0.5)
    }

    /// `‖U†U − I‖`, zero for isometries (square: unitaries).
    pub fn isometry_defect(&self) -> f64 {
        self.adjoint()
            .mul(self)
            .hs_distance(&ComplexMatrix::identity(self.cols))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.isometry_defect() <= tol
    }

    /// Column `c` as an `n x 1` matrix.
    pub fn column(&self, c: usize) -> Self {
        Self::from_fn(self.rows, 1, |r, _| self[(r, c)])
    }

    /// Projection defect `‖P² − P‖ + ‖P − P†‖`.
    pub fn projection_defect(&self) -> f64 {
        self.mul(self).hs_distance(self) + self.hermitian_defect()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.entries[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.entries[r * self.cols + c]
    }
}

/// Dimensions of the tensor factors of a composite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemDims {
    dims: Vec<usize>,
}

impl SubsystemDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(
                "subsystem dimensions must be a nonempty list of positive integers".into(),
            ));
        }
        Ok(SubsystemDims { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn factor_count(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: the left factor is the outermost digit.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() || m.rows() != self.total() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, subsystem dims {:?} require {0}x{0} with {}",
                m.rows(),
                m.cols(),
                self.dims,
                self.total()
            )));
        }
        Ok(())
    }
}

/// Kronecker product with the left factor outermost.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let v = a[(ar, ac)];
            if v == ZERO {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out[(ar * b.rows() + br, ac * b.cols() + bc)] = v * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Tensor product of a list of factors, left to right.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    assert!(!factors.is_empty());
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = tensor_product(&acc, f);
    }
    acc
}

/// Partial trace over the factors *not* listed in `keep`.
///
/// `keep` holds factor indices into `dims`; the output is ordered by the kept
/// factors in their original order. Tracing out everything (`keep = []`)
/// yields the 1x1 matrix holding the trace.
pub fn partial_trace(m: &ComplexMatrix, dims: &SubsystemDims, keep: &[usize]) -> Result<ComplexMatrix> {
    dims.check_matrix(m)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.factor_count()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} out of range for {} factors",
            dims.factor_count()
        )));
    }
    let traced: Vec<usize> = (0..dims.factor_count()).filter(|k| !keep.contains(k)).collect();
    let strides = dims.strides();

    // Offset tables: composite index = kept-part offset + traced-part offset.
    let offsets = |subset: &[usize]| -> Vec<usize> {
        let sub_dims: Vec<usize> = subset.iter().map(|&k| dims.dims()[k]).collect();
        let total: usize = sub_dims.iter().product();
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut off = 0;
            for pos in (0..subset.len()).rev() {
                off += (idx % sub_dims[pos]) * strides[subset[pos]];
                idx /= sub_dims[pos];
            }
            out.push(off);
        }
        out
    };
    let kept_off = offsets(&keep);
    let traced_off = offsets(&traced);

    let kdim = kept_off.len();
    let mut out = ComplexMatrix::zeros(kdim, kdim);
    for (kr, &ro) in kept_off.iter().enumerate() {
        for (kc, &co) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &to in &traced_off {
                acc += m[(ro + to, co + to)];
            }
            out[(kr, kc)] = acc;
        }
    }
    Ok(out)
}

/// Hilbert–Schmidt inner product `Tr(a† b)`, conjugate-linear in `a`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()), "shape mismatch in hs_inner");
    a.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// Weighted inner product `⟨a, b⟩_d = Tr(a† d^{1/2} b d^{1/2})`.
///
/// Faithful (positive definite) when `d` is invertible, which the
/// [`DensityMatrix`] argument is required to be.
pub fn weighted_inner(a: &ComplexMatrix, b: &ComplexMatrix, d: &DensityMatrix) -> Result<Complex64> {
    d.ensure_invertible("weight of the weighted inner product")?;
    let s = d.sqrt();
    Ok(hs_inner(a, &s.mul(b).mul(&s)))
}
