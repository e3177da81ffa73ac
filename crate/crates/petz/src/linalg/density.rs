//! Validated density matrices with a cached eigendecomposition.

use num_complex::Complex64;

use super::{hermitian_eig, ComplexMatrix, HermitianEig};
use crate::{tol, Error, Result};

/// Tolerance for the Hermiticity / unit-trace / positivity checks at
/// construction. Density matrices have unit trace, so this is absolute.
const VALIDATION_TOL: f64 = 1e-9;

/// A density matrix: Hermitian, positive semidefinite, unit trace.
///
/// The eigendecomposition and the positive square root are computed once at
/// construction and reused by the functional calculus, which keeps repeated
/// `d^{1/2}`, `d^{-1/2}`, `d^{it}` evaluations cheap.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    eig: HermitianEig,
    sqrt: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::NotDensity(format!(
                "expected a nonempty square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = matrix.hermitian_defect();
        if defect > VALIDATION_TOL * matrix.hs_norm().max(1.0) {
            return Err(Error::NotDensity(format!("not Hermitian (defect {defect:.3e})")));
        }
        let tr = matrix.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > VALIDATION_TOL {
            return Err(Error::NotDensity(format!("trace is {tr}, expected 1")));
        }
        let eig = hermitian_eig(&matrix)?;
        let min = eig.eigenvalues[0];
        if min < -VALIDATION_TOL {
            return Err(Error::NotDensity(format!("negative eigenvalue {min:.3e}")));
        }
        let sqrt = eig.apply_function(|x| Complex64::new(x.max(0.0).sqrt(), 0.0));
        Ok(DensityMatrix { matrix, eig, sqrt })
    }

    /// The maximally mixed state `I/n`.
    pub fn maximally_mixed(n: usize) -> Self {
        let m = ComplexMatrix::identity(n).scale_real(1.0 / n as f64);
        Self::new(m).expect("I/n is a density matrix")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eig(&self) -> &HermitianEig {
        &self.eig
    }

    /// Eigenvalues, ascending; tiny negatives from validation are not clamped
    /// here, consumers decide.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    /// Positive square root `d^{1/2}`.
    pub fn sqrt(&self) -> &ComplexMatrix {
        &self.sqrt
    }

    /// Threshold below which an eigenvalue counts as zero, relative to the
    /// largest eigenvalue.
    pub fn invertibility_threshold(&self) -> f64 {
        tol::INVERTIBILITY_REL * self.eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0)
    }

    pub fn invertible(&self) -> bool {
        self.eig.eigenvalues[0] > self.invertibility_threshold()
    }

    pub fn ensure_invertible(&self, what: &str) -> Result<()> {
        if self.invertible() {
            Ok(())
        } else {
            Err(Error::NotInvertible {
                what: what.to_string(),
                eigenvalue: self.eig.eigenvalues[0],
                threshold: self.invertibility_threshold(),
            })
        }
    }

    /// `d^{-1/2}`; requires invertibility.
    pub fn inv_sqrt(&self) -> Result<ComplexMatrix> {
        self.ensure_invertible("matrix in d^{-1/2}")?;
        Ok(self.eig.apply_function(|x| Complex64::new(1.0 / x.sqrt(), 0.0)))
    }

    /// `log d` (natural logarithm); requires invertibility.
    pub fn log(&self) -> Result<ComplexMatrix> {
        self.ensure_invertible("matrix in log d")?;
        Ok(self.eig.apply_function(|x| Complex64::new(x.ln(), 0.0)))
    }

    /// Unitary `d^{it} = exp(it log d)`; requires invertibility.
    pub fn imaginary_power(&self, t: f64) -> Result<ComplexMatrix> {
        self.ensure_invertible("matrix in d^{it}")?;
        Ok(self
            .eig
            .apply_function(|x| Complex64::from_polar(1.0, t * x.ln())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::Seeded;

    #[test]
    fn accepts_random_density_and_caches_consistent_eig() {
        let mut gen = Seeded::new(55);
        let d = gen.density(5);
        assert!((d.matrix().trace().re - 1.0).abs() < 1e-12);
        let sum: f64 = d.eigenvalues().iter().sum();
        assert!((sum - 1.0).abs() < 1e-11);
        assert!(d.eigenvalues().iter().all(|&x| x > -1e-12));
        assert!(d.sqrt().mul(d.sqrt()).hs_distance(d.matrix()) < 1e-12);
    }

    #[test]
    fn rejects_invalid_inputs() {
        // wrong trace
        let m = ComplexMatrix::identity(3);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotDensity(_))));
        // negative eigenvalue
        let m = ComplexMatrix::diagonal_real(&[1.5, -0.5]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotDensity(_))));
        // non-Hermitian
        let mut m = ComplexMatrix::identity(2).scale_real(0.5);
        m[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotDensity(_))));
    }

    #[test]
    fn inv_sqrt_inverts_the_square_root() {
        let mut gen = Seeded::new(56);
        let d = gen.density(4);
        let a = d.inv_sqrt().unwrap();
        let ident = a.mul(d.matrix()).mul(&a);
        assert!(ident.hs_distance(&ComplexMatrix::identity(4)) < 1e-10);
    }

    #[test]
    fn singular_density_refuses_inverse_calculus() {
        let m = ComplexMatrix::diagonal_real(&[1.0, 0.0]);
        let d = DensityMatrix::new(m).unwrap();
        assert!(!d.invertible());
        assert!(matches!(d.inv_sqrt(), Err(Error::NotInvertible { .. })));
        assert!(matches!(d.log(), Err(Error::NotInvertible { .. })));
        assert!(matches!(d.imaginary_power(1.0), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn imaginary_power_group_law_and_unitarity() {
        let mut gen = Seeded::new(57);
        let d = gen.density(5);
        let s = 0.7;
        let t = -1.3;
        let a = d.imaginary_power(s).unwrap();
        let b = d.imaginary_power(t).unwrap();
        let ab = a.mul(&b);
        let sum = d.imaginary_power(s + t).unwrap();
        assert!(ab.hs_distance(&sum) < 1e-11, "group law d^{{is}} d^{{it}} = d^{{i(s+t)}}");
        assert!(a.isometry_defect() < 1e-12);
        let zero = d.imaginary_power(0.0).unwrap();
        assert!(zero.hs_distance(&ComplexMatrix::identity(5)) < 1e-13);
    }

    #[test]
    fn log_matches_spectral_logarithm() {
        let mut gen = Seeded::new(58);
        let d = gen.density(4);
        let l = d.log().unwrap();
        // oracle: rebuild from eigenpairs by hand
        let eig = d.eig();
        let mut expect = ComplexMatrix::zeros(4, 4);
        for k in 0..4 {
            let lam = eig.eigenvalues[k].ln();
            for r in 0..4 {
                for c in 0..4 {
                    let v = eig.eigenvectors[(r, k)] * eig.eigenvectors[(c, k)].conj();
                    expect[(r, c)] += v * lam;
                }
            }
        }
        assert!(l.hs_distance(&expect) < 1e-11);
    }
}
