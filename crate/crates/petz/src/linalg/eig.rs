//! Hermitian eigendecomposition and functional calculus.
//!
//! The solver reduces a complex Hermitian matrix to real symmetric
//! tridiagonal form with Householder reflections, makes the subdiagonal real
//! with a diagonal phase similarity, and then runs the classic implicit-shift
//! QL iteration with eigenvector accumulation. Results follow a deterministic
//! convention: eigenvalues ascending, each eigenvector's first significant
//! component made real positive, exact eigenvalue ties broken by
//! lexicographic comparison of the phase-fixed eigenvectors.

use num_complex::Complex64;

use super::{ComplexMatrix, ONE, ZERO};
use crate::{Error, Result};

/// Eigendecomposition `h = U Λ U†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// `U Λ U†`, which reproduces the input within construction tolerance.
    pub fn recompose(&self) -> ComplexMatrix {
        self.apply_function(|x| Complex64::new(x, 0.0))
    }

    /// `U f(Λ) U†` for a scalar function applied to the spectrum.
    pub fn apply_function(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        self.apply_indexed(|_, lam| f(lam))
    }

    fn apply_indexed(&self, f: impl Fn(usize, f64) -> Complex64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(k, lam);
            for r in 0..n {
                scaled[(r, k)] = u[(r, k)] * s;
            }
        }
        scaled.mul(&u.adjoint())
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Index ranges of eigenvalues grouped as degenerate: a new group starts
    /// whenever the gap to the previous eigenvalue exceeds
    /// `rel_gap * (λ_max - λ_min)`, with an absolute floor well above the
    /// noise of the spectral scale. The floor matters when the whole spectrum
    /// is one degenerate cluster: the diameter is then itself noise and the
    /// relative term vanishes, while the cluster's internal gaps sit wherever
    /// the input's own perturbations put them — empirically up to ~1e-13 of
    /// the scale, not machine epsilon.
    pub fn degenerate_groups(&self, rel_gap: f64) -> Vec<std::ops::Range<usize>> {
        let n = self.eigenvalues.len();
        if n == 0 {
            return vec![];
        }
        let diameter = self.eigenvalues[n - 1] - self.eigenvalues[0];
        let threshold = rel_gap * diameter + 1e-11 * self.spectral_radius();
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..n {
            if self.eigenvalues[i] - self.eigenvalues[i - 1] > threshold {
                groups.push(start..i);
                start = i;
            }
        }
        groups.push(start..n);
        groups
    }

    /// Spectral projection onto the eigenvectors in `range`.
    pub fn spectral_projection(&self, range: std::ops::Range<usize>) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut p = ComplexMatrix::zeros(n, n);
        for k in range {
            for r in 0..n {
                for c in 0..n {
                    let v = self.eigenvectors[(r, k)] * self.eigenvectors[(c, k)].conj();
                    p[(r, c)] += v;
                }
            }
        }
        p
    }
}

/// Hermitian eigendecomposition with the deterministic ordering convention.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let defect = h.hermitian_defect();
    let tol_h = 1e-8 * h.hs_norm().max(1.0);
    if defect > tol_h {
        return Err(Error::NotHermitian { defect, tol: tol_h });
    }
    let n = h.rows();
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }

    let mut a = h.hermitize();
    let mut z = tridiagonalize(&mut a);
    let (mut d, mut e) = phase_real_subdiagonal(&a, &mut z);
    tql2(&mut d, &mut e, &mut z)?;
    Ok(order_and_fix(d, z))
}

/// Householder reduction to Hermitian tridiagonal form.
///
/// Overwrites `a` with the tridiagonal matrix (complex subdiagonal) and
/// returns the accumulated unitary `Q` with `a_input = Q a_tri Q†`.
fn tridiagonalize(a: &mut ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let mut q = ComplexMatrix::identity(n);
    let mut v = vec![ZERO; n];
    let mut w = vec![ZERO; n];

    for k in 0..n.saturating_sub(2) {
        let mut xnorm2 = 0.0;
        for i in k + 1..n {
            xnorm2 += a[(i, k)].norm_sqr();
        }
        if xnorm2 == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0.norm() > 0.0 {
            -(x0 / x0.norm()) * xnorm2.sqrt()
        } else {
            Complex64::new(-xnorm2.sqrt(), 0.0)
        };
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 <= xnorm2 * 1e-60 {
            continue; // column already in the required form
        }
        let inv = 1.0 / vnorm2.sqrt();
        for i in k + 1..n {
            v[i] *= inv;
        }

        // w = A v on the trailing block, mu = v† A v (real).
        for i in k + 1..n {
            let mut acc = ZERO;
            for j in k + 1..n {
                acc += a[(i, j)] * v[j];
            }
            w[i] = acc;
        }
        let mu: f64 = (k + 1..n).map(|i| (v[i].conj() * w[i]).re).sum();
        // u = w - mu v; rank-2 update A -= 2 v u† + 2 u v†.
        for i in k + 1..n {
            w[i] -= Complex64::new(mu, 0.0) * v[i];
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[(i, j)] -= upd * 2.0;
            }
        }
        // Column k collapses onto the subdiagonal entry.
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }
        // Q <- Q (I - 2 v v†), touching columns k+1.. only.
        for r in 0..n {
            let mut t = ZERO;
            for i in k + 1..n {
                t += q[(r, i)] * v[i];
            }
            let t2 = t * 2.0;
            for i in k + 1..n {
                q[(r, i)] -= t2 * v[i].conj();
            }
        }
    }
    q
}

/// Diagonal phase similarity making the subdiagonal real non-negative.
/// Scales the columns of `z` accordingly and returns `(diag, subdiag)`.
fn phase_real_subdiagonal(a: &ComplexMatrix, z: &mut ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in 0..n {
        d[i] = a[(i, i)].re;
    }
    let mut phase = ONE;
    for k in 0..n.saturating_sub(1) {
        let beta = a[(k + 1, k)];
        let babs = beta.norm();
        e[k] = babs;
        let next_phase = if babs > 0.0 { (beta / babs) * phase } else { phase };
        for r in 0..n {
            z[(r, k + 1)] *= next_phase;
        }
        phase = next_phase;
    }
    (d, e)
}

/// Implicit-shift QL iteration on a real symmetric tridiagonal matrix with
/// accumulation of the (real) rotations into the complex column matrix `z`.
/// `e[i]` couples `d[i]` and `d[i+1]`; `e[n-1]` is scratch.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut ComplexMatrix) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    // Absolute deflation floor at the rounding noise of the matrix scale.
    // The relative test alone stalls inside clusters of noise-level
    // eigenvalues (rank-deficient inputs), where the local diagonal is as
    // small as the couplings it is compared against.
    let anorm = d
        .iter()
        .chain(e.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::EigenFailed);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in 0..z.rows() {
                    let zi1 = z[(row, i + 1)];
                    let zi = z[(row, i)];
                    z[(row, i + 1)] = zi * s + zi1 * c;
                    z[(row, i)] = zi * c - zi1 * s;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Ascending sort, phase convention, and exact-tie lexicographic ordering.
fn order_and_fix(d: Vec<f64>, z: ComplexMatrix) -> HermitianEig {
    let n = d.len();
    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let mut col: Vec<Complex64> = (0..n).map(|r| z[(r, k)]).collect();
            fix_phase(&mut col);
            (d[k], col)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)));

    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (k, (_, col)) in pairs.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, k)] = col[r];
        }
    }
    HermitianEig { eigenvalues, eigenvectors }
}

/// Rotate a unit column so its first significant component is real positive.
fn fix_phase(col: &mut [Complex64]) {
    let max = col.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let lead = col.iter().find(|x| x.norm() > 1e-8 * max);
    if let Some(&lead) = lead {
        let factor = lead.conj() / lead.norm();
        for x in col.iter_mut() {
            *x *= factor;
        }
        // tidy: force the exact entry real
        if let Some(first) = col.iter_mut().find(|x| x.norm() > 1e-8 * max) {
            first.im = 0.0;
        }
    }
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// `U f(Λ) U†` for Hermitian `h`; `f` returns `None` where it is undefined,
/// which surfaces as a domain error naming the offending eigenvalue.
pub fn matrix_function(
    h: &ComplexMatrix,
    name: &'static str,
    f: impl Fn(f64) -> Option<Complex64>,
) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let mut values = Vec::with_capacity(eig.eigenvalues.len());
    for &lam in &eig.eigenvalues {
        match f(lam) {
            Some(v) => values.push(v),
            None => {
                return Err(Error::FunctionDomain { function: name, eigenvalue: lam });
            }
        }
    }
    Ok(eig.apply_indexed(|k, _| values[k]))
}
