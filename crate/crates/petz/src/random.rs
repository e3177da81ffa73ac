//! Seeded random constructions: Gaussian matrices, Haar-style unitaries and
//! isometries, invertible densities. Everything is driven by an explicit
//! seed through a portable counter-based generator, so instance synthesis and
//! the CLI `gen` command are reproducible across platforms.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, DensityMatrix};

/// Deterministic generator wrapping a seeded ChaCha stream.
pub struct Seeded {
    rng: ChaCha12Rng,
}

impl Seeded {
    pub fn new(seed: u64) -> Self {
        Seeded { rng: ChaCha12Rng::seed_from_u64(seed) }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal())
    }

    /// Matrix with independent standard complex Gaussian entries.
    pub fn complex_matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        let entries = (0..rows * cols).map(|_| self.complex_normal()).collect();
        ComplexMatrix::from_entries(rows, cols, entries).expect("consistent shape")
    }

    /// Random Hermitian matrix `(G + G†)/2`.
    pub fn hermitian(&mut self, n: usize) -> ComplexMatrix {
        self.complex_matrix(n, n).hermitize()
    }

    /// Random invertible density `G G† / Tr(G G†)`.
    pub fn density(&mut self, n: usize) -> DensityMatrix {
        let g = self.complex_matrix(n, n);
        let p = g.mul(&g.adjoint());
        let d = p.scale_real(1.0 / p.trace().re);
        DensityMatrix::new(d).expect("Gram matrix is a density after normalization")
    }

    /// Random isometry: `rows x cols` with orthonormal columns (`rows >= cols`),
    /// obtained by orthonormalizing Gaussian columns.
    pub fn isometry(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        assert!(rows >= cols, "an isometry needs rows >= cols");
        let g = self.complex_matrix(rows, cols);
        let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
        for j in 0..cols {
            let mut v: Vec<Complex64> = (0..rows).map(|r| g[(r, j)]).collect();
            // modified Gram-Schmidt with one re-orthogonalization pass
            for _ in 0..2 {
                for prev in &q {
                    let ip: Complex64 = prev.iter().zip(&v).map(|(p, x)| p.conj() * x).sum();
                    for (x, p) in v.iter_mut().zip(prev) {
                        *x -= ip * p;
                    }
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            assert!(norm > 1e-12, "Gaussian columns are independent almost surely");
            for x in v.iter_mut() {
                *x = *x / norm;
            }
            q.push(v);
        }
        ComplexMatrix::from_fn(rows, cols, |r, c| q[c][r])
    }

    /// Random unitary (square isometry).
    pub fn unitary(&mut self, n: usize) -> ComplexMatrix {
        self.isometry(n, n)
    }

    /// Random probability vector of length `k` (normalized exponentials).
    pub fn simplex(&mut self, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| -self.rng.gen::<f64>().max(1e-300).ln()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }
}
