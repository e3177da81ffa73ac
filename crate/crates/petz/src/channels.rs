//! Completely positive maps in Kraus form, their Choi matrices and
//! superoperator (matrix-on-matrices) representations, and the two derived
//! maps the sufficiency analysis is built from: the transpose map `α` of a
//! channel with respect to a reference state, and the Petz dual `T#`.
//!
//! Conventions. A [`KrausMap`] acts as `X ↦ Σ_i L_i X L_i†` and is completely
//! positive by construction; [`KrausChannel`] additionally validates trace
//! preservation `Σ_i L_i† L_i = I`. The superoperator matrix uses row-major
//! vectorization, under which `X ↦ A X B` has matrix `A ⊗ Bᵀ`.

use num_complex::Complex64;

use crate::linalg::{
    partial_trace, tensor_product, ComplexMatrix, DensityMatrix, HermitianEig,
    SubsystemDims,
};
use crate::linalg::hermitian_eig;
use crate::{tol, Error, Result};

/// Completely positive map `X ↦ Σ_i L_i X L_i†` given by Kraus coefficients.
#[derive(Clone, Debug)]
pub struct KrausMap {
    in_dim: usize,
    out_dim: usize,
    coeffs: Vec<ComplexMatrix>,
}

impl KrausMap {
    pub fn new(in_dim: usize, out_dim: usize, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || coeffs.is_empty() {
            return Err(Error::DimensionMismatch(
                "a Kraus map needs positive dimensions and at least one coefficient".into(),
            ));
        }
        for (i, l) in coeffs.iter().enumerate() {
            if l.rows() != out_dim || l.cols() != in_dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus coefficient {i} is {}x{}, expected {out_dim}x{in_dim}",
                    l.rows(),
                    l.cols()
                )));
            }
        }
        Ok(KrausMap { in_dim, out_dim, coeffs })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn coefficients(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.in_dim || x.cols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "map expects {0}x{0} input, got {1}x{2}",
                self.in_dim,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for l in &self.coeffs {
            out = out.add(&l.mul(x).mul(&l.adjoint()));
        }
        Ok(out)
    }

    /// Hilbert–Schmidt adjoint `X ↦ Σ_i L_i† X L_i` (the dual map `T*`).
    pub fn adjoint_map(&self) -> KrausMap {
        KrausMap {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            coeffs: self.coeffs.iter().map(|l| l.adjoint()).collect(),
        }
    }

    /// Composition `self ∘ inner`.
    pub fn compose(&self, inner: &KrausMap) -> Result<KrausMap> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose: inner map outputs dim {}, outer expects {}",
                inner.out_dim, self.in_dim
            )));
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * inner.coeffs.len());
        for a in &self.coeffs {
            for b in &inner.coeffs {
                coeffs.push(a.mul(b));
            }
        }
        Ok(KrausMap { in_dim: inner.in_dim, out_dim: self.out_dim, coeffs })
    }

    /// `‖Σ L_i† L_i − I‖`, zero for trace-preserving maps.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for l in &self.coeffs {
            acc = acc.add(&l.adjoint().mul(l));
        }
        acc.hs_distance(&ComplexMatrix::identity(self.in_dim))
    }

    /// `‖Σ L_i L_i† − I‖`, zero for unital maps.
    pub fn unitality_defect(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for l in &self.coeffs {
            acc = acc.add(&l.mul(&l.adjoint()));
        }
        acc.hs_distance(&ComplexMatrix::identity(self.out_dim))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_defect() <= tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unitality_defect() <= tol
    }

    pub fn choi(&self) -> ChoiMatrix {
        ChoiMatrix::from_map(self.in_dim, self.out_dim, |x| {
            self.apply(x).expect("basis matrix has the right shape")
        })
    }

    pub fn superoperator(&self) -> SuperOperator {
        let n2 = self.in_dim * self.in_dim;
        let m2 = self.out_dim * self.out_dim;
        let mut matrix = ComplexMatrix::zeros(m2, n2);
        for l in &self.coeffs {
            matrix = matrix.add(&tensor_product(l, &l.conjugate()));
        }
        SuperOperator { in_dim: self.in_dim, out_dim: self.out_dim, matrix }
    }
}

/// Trace-preserving completely positive map (quantum channel) in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel(KrausMap);

impl KrausChannel {
    /// Validates trace preservation within [`tol::CHANNEL`].
    pub fn new(in_dim: usize, out_dim: usize, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        let map = KrausMap::new(in_dim, out_dim, coeffs)?;
        let defect = map.trace_preservation_defect();
        if defect > tol::CHANNEL {
            return Err(Error::NotTracePreserving { defect, tol: tol::CHANNEL });
        }
        Ok(KrausChannel(map))
    }

    pub fn as_map(&self) -> &KrausMap {
        &self.0
    }

    /// Channel output on a state, revalidated as a density matrix.
    pub fn apply_to_state(&self, d: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply(d.matrix())?)
    }
}

impl std::ops::Deref for KrausChannel {
    type Target = KrausMap;
    fn deref(&self) -> &KrausMap {
        &self.0
    }
}

/// The identity channel on dimension `d`.
pub fn identity_channel(d: usize) -> KrausChannel {
    KrausChannel::new(d, d, vec![ComplexMatrix::identity(d)]).expect("identity is trace preserving")
}

/// Conjugation `X ↦ u X u†` by a unitary.
pub fn unitary_channel(u: &ComplexMatrix) -> Result<KrausChannel> {
    let defect = u.isometry_defect();
    if !u.is_square() || defect > tol::CHANNEL {
        return Err(Error::NotUnitary { defect });
    }
    KrausChannel::new(u.rows(), u.rows(), vec![u.clone()])
}

/// Partial trace over the factors listed in `traced`, as a channel.
pub fn partial_trace_channel(dims: &SubsystemDims, traced: &[usize]) -> Result<KrausChannel> {
    let mut traced = traced.to_vec();
    traced.sort_unstable();
    traced.dedup();
    if traced.iter().any(|&k| k >= dims.factor_count()) {
        return Err(Error::DimensionMismatch(format!(
            "traced set {traced:?} out of range for {} factors",
            dims.factor_count()
        )));
    }
    if traced.len() == dims.factor_count() {
        return Err(Error::DimensionMismatch(
            "tracing out every factor does not define a channel onto a nonempty space".into(),
        ));
    }
    let kept: Vec<usize> = (0..dims.factor_count()).filter(|k| !traced.contains(k)).collect();
    let strides = dims.strides();
    let offsets = |subset: &[usize]| -> Vec<usize> {
        let sub_dims: Vec<usize> = subset.iter().map(|&k| dims.dims()[k]).collect();
        let total: usize = sub_dims.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut off = 0;
                for pos in (0..subset.len()).rev() {
                    off += (idx % sub_dims[pos]) * strides[subset[pos]];
                    idx /= sub_dims[pos];
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&kept);
    let traced_off = offsets(&traced);
    let out_dim = kept_off.len();
    let in_dim = dims.total();

    let coeffs: Vec<ComplexMatrix> = traced_off
        .iter()
        .map(|&to| {
            let mut l = ComplexMatrix::zeros(out_dim, in_dim);
            for (row, &ko) in kept_off.iter().enumerate() {
                l[(row, ko + to)] = Complex64::new(1.0, 0.0);
            }
            l
        })
        .collect();
    KrausChannel::new(in_dim, out_dim, coeffs)
}

/// Transpose map `α` of a channel with respect to a faithful input state:
/// `α(A) = T(d1)^{-1/2} T(d1^{1/2} A d1^{1/2}) T(d1)^{-1/2}`, with Kraus
/// coefficients `T(d1)^{-1/2} L_i d1^{1/2}`. Unital by construction.
pub fn transpose_alpha(t: &KrausChannel, d1: &DensityMatrix) -> Result<KrausMap> {
    d1.ensure_invertible("reference state of the transpose map")?;
    let out = t.apply_to_state(d1)?;
    out.ensure_invertible("channel output on the reference state")?;
    let w = out.inv_sqrt()?;
    let s = d1.sqrt();
    let coeffs = t.coefficients().iter().map(|l| w.mul(l).mul(s)).collect();
    KrausMap::new(t.in_dim(), t.out_dim(), coeffs)
}

/// Petz dual `T#` of a channel with respect to a faithful input state:
/// `T#(X) = d1^{1/2} T*(T(d1)^{-1/2} X T(d1)^{-1/2}) d1^{1/2}`, with Kraus
/// coefficients `d1^{1/2} L_i† T(d1)^{-1/2}`. Trace preserving, and it maps
/// `T(d1)` back to `d1` exactly.
pub fn petz_dual(t: &KrausChannel, d1: &DensityMatrix) -> Result<KrausChannel> {
    d1.ensure_invertible("reference state of the Petz dual")?;
    let out = t.apply_to_state(d1)?;
    out.ensure_invertible("channel output on the reference state")?;
    let w = out.inv_sqrt()?;
    let s = d1.sqrt();
    let coeffs = t
        .coefficients()
        .iter()
        .map(|l| s.mul(&l.adjoint()).mul(&w))
        .collect();
    KrausChannel::new(t.out_dim(), t.in_dim(), coeffs)
}

/// Choi matrix `Σ_{jk} E_{jk} ⊗ T(E_{jk})` of a linear map.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    in_dim: usize,
    out_dim: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    /// Build from the action of an arbitrary linear map on matrix units.
    pub fn from_map(in_dim: usize, out_dim: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let dim = in_dim * out_dim;
        let mut matrix = ComplexMatrix::zeros(dim, dim);
        for j in 0..in_dim {
            for k in 0..in_dim {
                let image = f(&ComplexMatrix::basis_matrix(in_dim, j, k));
                debug_assert_eq!(image.rows(), out_dim);
                for r in 0..out_dim {
                    for c in 0..out_dim {
                        matrix[(j * out_dim + r, k * out_dim + c)] += image[(r, c)];
                    }
                }
            }
        }
        ChoiMatrix { in_dim, out_dim, matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn eig(&self) -> Result<HermitianEig> {
        hermitian_eig(&self.matrix)
    }

    /// Complete positivity: the Choi matrix is positive semidefinite.
    pub fn is_completely_positive(&self, tol: f64) -> Result<bool> {
        Ok(self.eig()?.eigenvalues[0] >= -tol)
    }

    /// Trace preservation: tracing out the output factor gives the identity.
    pub fn is_trace_preserving(&self, tol: f64) -> Result<bool> {
        let dims = SubsystemDims::new(vec![self.in_dim, self.out_dim])?;
        let reduced = partial_trace(&self.matrix, &dims, &[0])?;
        Ok(reduced.hs_distance(&ComplexMatrix::identity(self.in_dim)) <= tol)
    }
}

/// Linear map on matrices as an explicit `out_dim² x in_dim²` matrix acting
/// on row-major vectorizations.
#[derive(Clone, Debug)]
pub struct SuperOperator {
    in_dim: usize,
    out_dim: usize,
    matrix: ComplexMatrix,
}

impl SuperOperator {
    pub fn new(in_dim: usize, out_dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != out_dim * out_dim || matrix.cols() != in_dim * in_dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                out_dim * out_dim,
                in_dim * in_dim
            )));
        }
        Ok(SuperOperator { in_dim, out_dim, matrix })
    }

    /// Build from the action of a linear map on matrix units.
    pub fn from_map(in_dim: usize, out_dim: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let mut matrix = ComplexMatrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for j in 0..in_dim {
            for k in 0..in_dim {
                let image = f(&ComplexMatrix::basis_matrix(in_dim, j, k));
                let col = j * in_dim + k;
                for (row, v) in image.entries().iter().enumerate() {
                    matrix[(row, col)] = *v;
                }
            }
        }
        SuperOperator { in_dim, out_dim, matrix }
    }

    pub fn identity(n: usize) -> Self {
        SuperOperator { in_dim: n, out_dim: n, matrix: ComplexMatrix::identity(n * n) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.in_dim || x.cols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator expects {0}x{0} input, got {1}x{2}",
                self.in_dim,
                x.rows(),
                x.cols()
            )));
        }
        let n2 = self.in_dim * self.in_dim;
        let m = self.out_dim;
        let mut out = ComplexMatrix::zeros(m, m);
        for row in 0..m * m {
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..n2 {
                acc += self.matrix[(row, col)] * x.entries()[col];
            }
            out.entries_mut()[row] = acc;
        }
        Ok(out)
    }

    /// Hilbert–Schmidt adjoint; row-major vectorization is an isometry, so
    /// this is the conjugate transpose of the matrix.
    pub fn adjoint(&self) -> Self {
        SuperOperator {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, inner: &SuperOperator) -> Result<Self> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose: inner superoperator outputs dim {}, outer expects {}",
                inner.out_dim, self.in_dim
            )));
        }
        Ok(SuperOperator {
            in_dim: inner.in_dim,
            out_dim: self.out_dim,
            matrix: self.matrix.mul(&inner.matrix),
        })
    }
}

/// Random channel through a Stinespring isometry: `env_dim` Kraus terms,
/// valid whenever `out_dim * env_dim >= in_dim`.
pub fn random_channel(
    gen: &mut crate::random::Seeded,
    in_dim: usize,
    out_dim: usize,
    env_dim: usize,
) -> KrausChannel {
    assert!(out_dim * env_dim >= in_dim, "Stinespring isometry needs out*env >= in");
    let v = gen.isometry(out_dim * env_dim, in_dim);
    // L_k = (I ⊗ ⟨k|) V
    let coeffs: Vec<ComplexMatrix> = (0..env_dim)
        .map(|k| {
            ComplexMatrix::from_fn(out_dim, in_dim, |r, c| v[(r * env_dim + k, c)])
        })
        .collect();
    KrausChannel::new(in_dim, out_dim, coeffs).expect("Stinespring construction is trace preserving")
}
