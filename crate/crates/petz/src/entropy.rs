//! Von Neumann and relative entropy, the strong-subadditivity gap, and the
//! structure of tripartite states saturating it.
//!
//! Strong subadditivity bounds `S(D_ABC) + S(D_B) ≤ S(D_AB) + S(D_BC)`.
//! Equality holds exactly when the partial trace over `C` is sufficient for
//! the pair `(τ_A ⊗ D_BC, D_ABC)`, and in that case the state is a *Markov
//! state*: the middle system splits orthogonally into tensor factors,
//! `D_ABC = Σ_i λ(i) · D_{AL}(i) ⊗ D_{RC}(i)` with the `(L, R)` legs of term
//! `i` embedded into `H_B` by an isometry. [`ssa_equality_structure`]
//! recovers this decomposition; [`build_markov_state`] constructs such
//! states, serving as the ground-truth generator.
//!
//! All entropies are in nats; display conversions to bits are left to
//! callers.

use std::cmp::Reverse;

use crate::algebra::{block_structure, fixed_point_algebra, StarAlgebra};
use crate::channels::partial_trace_channel;
use crate::linalg::{
    partial_trace, tensor_all, tensor_product, ComplexMatrix, DensityMatrix,
    SubsystemDims,
};
use crate::random::Seeded;
use crate::sufficiency::gamma_maps;
use crate::{tol, Error, Result};

/// `−Σ λ ln λ` over the spectrum, in nats. Zero eigenvalues contribute
/// nothing (`0 · ln 0 := 0`), and the tiny negatives a validated density may
/// carry are treated as zero.
pub fn von_neumann_entropy(d: &DensityMatrix) -> f64 {
    d.eigenvalues()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// Umegaki relative entropy `Tr d (ln d − ln e)` in nats.
///
/// Returns `+∞` when the support of `d` is not contained in the support of
/// `e`; on the finite branch the value is nonnegative up to rounding and
/// vanishes exactly for equal states.
pub fn relative_entropy(d: &DensityMatrix, e: &DensityMatrix) -> Result<f64> {
    if d.dim() != e.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy of states with dimensions {} and {}",
            d.dim(),
            e.dim()
        )));
    }
    let threshold = e.invertibility_threshold();
    let basis = &e.eig().eigenvectors;
    let mut value: f64 = d
        .eigenvalues()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum();
    for (l, &mu) in e.eigenvalues().iter().enumerate() {
        // Weight of d on the l-th eigenvector of e.
        let v = basis.column(l);
        let weight = v.adjoint().mul(d.matrix()).mul(&v)[(0, 0)].re;
        if mu <= threshold {
            if weight > 1e-12 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        value -= weight * mu.ln();
    }
    Ok(value)
}

/// A state on `H_A ⊗ H_B ⊗ H_C` with its leg dimensions.
#[derive(Clone, Debug)]
pub struct TripartiteState {
    density: DensityMatrix,
    dims: SubsystemDims,
}

impl TripartiteState {
    pub fn new(density: DensityMatrix, dims: SubsystemDims) -> Result<Self> {
        if dims.factor_count() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "a tripartite state needs exactly 3 leg dimensions, got {:?}",
                dims.dims()
            )));
        }
        dims.check_matrix(density.matrix())?;
        Ok(TripartiteState { density, dims })
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }

    pub fn dim_a(&self) -> usize {
        self.dims.dims()[0]
    }

    pub fn dim_b(&self) -> usize {
        self.dims.dims()[1]
    }

    pub fn dim_c(&self) -> usize {
        self.dims.dims()[2]
    }

    /// Reduced density on the legs in `keep` (ascending order of legs).
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        DensityMatrix::new(partial_trace(self.density.matrix(), &self.dims, keep)?)
    }
}

/// The strong-subadditivity gap `S(D_AB) + S(D_BC) − S(D_ABC) − S(D_B)`;
/// nonnegative up to rounding, zero exactly for Markov states.
pub fn ssa_gap(s: &TripartiteState) -> Result<f64> {
    let s_ab = von_neumann_entropy(&s.reduced(&[0, 1])?);
    let s_bc = von_neumann_entropy(&s.reduced(&[1, 2])?);
    let s_b = von_neumann_entropy(&s.reduced(&[1])?);
    let s_abc = von_neumann_entropy(s.density());
    Ok(s_ab + s_bc - s_abc - s_b)
}

/// The two sides of the relative-entropy form of strong subadditivity:
/// `(S(D_ABC ‖ τ_A ⊗ D_BC), S(D_AB ‖ τ_A ⊗ D_B))`. The difference of the
/// sides equals [`ssa_gap`]; either side is `+∞` on support violations.
pub fn ssa_gap_via_relative_entropy(s: &TripartiteState) -> Result<(f64, f64)> {
    let tau = DensityMatrix::maximally_mixed(s.dim_a());
    let d_bc = s.reduced(&[1, 2])?;
    let d_ab = s.reduced(&[0, 1])?;
    let d_b = s.reduced(&[1])?;
    let lhs = relative_entropy(
        s.density(),
        &DensityMatrix::new(tensor_product(tau.matrix(), d_bc.matrix()))?,
    )?;
    let rhs = relative_entropy(
        &d_ab,
        &DensityMatrix::new(tensor_product(tau.matrix(), d_b.matrix()))?,
    )?;
    Ok((lhs, rhs))
}

/// One term of a Markov decomposition: a density on `H_A ⊗ ℂ^L`, a density
/// on `ℂ^R ⊗ H_C`, and the isometry embedding `ℂ^L ⊗ ℂ^R` into `H_B`.
#[derive(Clone, Debug)]
pub struct MarkovTerm {
    pub weight: f64,
    pub left: DensityMatrix,
    pub right: DensityMatrix,
    /// `d_B × (L·R)` isometry; the ranges of the terms' isometries are
    /// pairwise orthogonal.
    pub middle_isometry: ComplexMatrix,
}

impl MarkovTerm {
    /// `(L, R)`: how this term splits its middle subspace.
    pub fn split(&self, dim_a: usize, dim_c: usize) -> (usize, usize) {
        (self.left.dim() / dim_a, self.right.dim() / dim_c)
    }
}

/// Decomposition of a Markov state over orthogonal tensor splits of the
/// middle system, in canonical term order: descending weight, ties by
/// descending left split dimension (weights compared at 1e-9 resolution).
#[derive(Clone, Debug)]
pub struct MarkovDecomposition {
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_c: usize,
    pub terms: Vec<MarkovTerm>,
}

impl MarkovDecomposition {
    /// `(L, R)` splits of the terms, in canonical order.
    pub fn shape(&self) -> Vec<(usize, usize)> {
        self.terms.iter().map(|t| t.split(self.dim_a, self.dim_c)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    /// `Σ_i λ(i) · (I ⊗ J_i ⊗ I)(left_i ⊗ right_i)(I ⊗ J_i ⊗ I)†` on the
    /// full `A·B·C` space.
    pub fn reassemble(&self) -> ComplexMatrix {
        let n = self.dim_a * self.dim_b * self.dim_c;
        let mut acc = ComplexMatrix::zeros(n, n);
        let ident_a = ComplexMatrix::identity(self.dim_a);
        let ident_c = ComplexMatrix::identity(self.dim_c);
        for term in &self.terms {
            let embed = tensor_all(&[&ident_a, &term.middle_isometry, &ident_c]);
            let product = tensor_product(term.left.matrix(), term.right.matrix());
            acc = acc.add(&product.conjugate_by(&embed).scale_real(term.weight));
        }
        acc
    }
}

fn weight_key(x: f64) -> Reverse<i64> {
    Reverse((x * 1e9).round() as i64)
}

/// Blueprint for [`build_markov_state`]: leg dimensions of the outer
/// systems and, per term, the middle split `(L, R)` and the weight. The
/// middle dimension is implied: `d_B = Σ L·R`.
#[derive(Clone, Debug)]
pub struct MarkovSpec {
    pub dim_a: usize,
    pub dim_c: usize,
    /// `(L, R, weight)` per term.
    pub blocks: Vec<(usize, usize, f64)>,
    pub seed: u64,
}

impl MarkovSpec {
    fn validate(&self) -> Result<()> {
        if self.dim_a == 0 || self.dim_c == 0 {
            return Err(Error::InvalidSpec("outer leg dimensions must be positive".into()));
        }
        if self.blocks.is_empty() {
            return Err(Error::InvalidSpec("at least one middle block is required".into()));
        }
        if self.blocks.iter().any(|&(l, r, _)| l == 0 || r == 0) {
            return Err(Error::InvalidSpec("middle split dimensions must be positive".into()));
        }
        if self.blocks.iter().any(|&(_, _, w)| w <= 0.0) {
            return Err(Error::InvalidSpec(
                "weights must be strictly positive to keep the state faithful".into(),
            ));
        }
        let sum: f64 = self.blocks.iter().map(|&(_, _, w)| w).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "weights sum to {sum:.12} instead of 1"
            )));
        }
        Ok(())
    }
}

/// A generated Markov state together with the decomposition it was built
/// from, terms already in canonical order.
#[derive(Clone, Debug)]
pub struct SyntheticMarkovState {
    pub state: TripartiteState,
    pub ground_truth: MarkovDecomposition,
}

/// Assembles seeded random densities into a Markov state with the
/// prescribed middle splits; the strong-subadditivity gap of the result is
/// zero up to rounding.
pub fn build_markov_state(spec: &MarkovSpec) -> Result<SyntheticMarkovState> {
    spec.validate()?;
    let dim_b: usize = spec.blocks.iter().map(|&(l, r, _)| l * r).sum();

    let mut order: Vec<usize> = (0..spec.blocks.len()).collect();
    order.sort_by_key(|&i| (weight_key(spec.blocks[i].2), Reverse(spec.blocks[i].0)));

    let mut gen = Seeded::new(spec.seed);
    // Offsets follow the *canonical* term order, so the embedding below and
    // the reported ground truth agree.
    let mut terms = Vec::with_capacity(order.len());
    let mut offset = 0;
    for &i in &order {
        let (l, r, weight) = spec.blocks[i];
        let left = gen.density(spec.dim_a * l);
        let right = gen.density(r * spec.dim_c);
        let mut middle_isometry = ComplexMatrix::zeros(dim_b, l * r);
        for k in 0..l * r {
            middle_isometry[(offset + k, k)] = num_complex::Complex64::new(1.0, 0.0);
        }
        offset += l * r;
        terms.push(MarkovTerm { weight, left, right, middle_isometry });
    }
    let ground_truth = MarkovDecomposition {
        dim_a: spec.dim_a,
        dim_b,
        dim_c: spec.dim_c,
        terms,
    };
    let density = DensityMatrix::new(ground_truth.reassemble())?;
    let dims = SubsystemDims::new(vec![spec.dim_a, dim_b, spec.dim_c])?;
    Ok(SyntheticMarkovState {
        state: TripartiteState::new(density, dims)?,
        ground_truth,
    })
}

/// The `d_B × d_B` slice `(⟨a| ⊗ I_B) W (|a′| ⊗ I_B)` of an operator on
/// `H_A ⊗ H_B`.
fn middle_slice(w: &ComplexMatrix, a: usize, a2: usize, dim_b: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_b, dim_b, |r, c| w[(a * dim_b + r, a2 * dim_b + c)])
}

/// Extracts the Markov decomposition of a state saturating strong
/// subadditivity.
///
/// With `T` the partial trace over `C`, `D₁ = τ_A ⊗ D_BC` and `D₂ = D_ABC`,
/// the fixed-point algebra of `γ_out` on `H_AB` is computed and checked
/// against the sandwich `B(H_A) ⊗ ℂI_B ⊆ Fix ⊆ B(H_A) ⊗ B(H_B)` — the upper
/// inclusion holds by construction, since the adjoint of the partial trace
/// tensors with the identity on `C`. The middle algebra `A_B` is the span
/// of the `A`-slices of the fixed points; its blocks give the orthogonal
/// tensor splits of `H_B`, and compressing `D_ABC` into each split factors
/// it into the left and right densities of one Markov term.
pub fn ssa_equality_structure(s: &TripartiteState, tol: f64) -> Result<MarkovDecomposition> {
    let gap = ssa_gap(s)?;
    if !(gap < tol) {
        return Err(Error::Precondition(format!(
            "Markov structure requires strong-subadditivity equality; the gap is {gap:.6e} \
             at tolerance {tol:.3e}"
        )));
    }
    s.density().ensure_invertible("the tripartite state")?;
    let (dim_a, dim_b, dim_c) = (s.dim_a(), s.dim_b(), s.dim_c());
    let tau = DensityMatrix::maximally_mixed(dim_a);
    let d_bc = s.reduced(&[1, 2])?;
    let d1 = DensityMatrix::new(tensor_product(tau.matrix(), d_bc.matrix()))?;
    d1.ensure_invertible("the reference state τ ⊗ D_BC")?;
    let trace_out_c = partial_trace_channel(s.dims(), &[2])?;
    let image = trace_out_c.apply_to_state(&d1)?;
    image.ensure_invertible("the reduced reference state τ ⊗ D_B")?;
    trace_out_c
        .apply_to_state(s.density())?
        .ensure_invertible("the reduced state on the first two legs")?;

    let (_, gamma_out) = gamma_maps(&trace_out_c, &d1)?;
    let fixed = fixed_point_algebra(&gamma_out, &image)?;

    // Sandwich, lower inclusion: every operator acting on the first leg
    // alone is a fixed point.
    for a in 0..dim_a {
        for a2 in 0..dim_a {
            let unit = tensor_product(
                &ComplexMatrix::basis_matrix(dim_a, a, a2),
                &ComplexMatrix::identity(dim_b),
            );
            let distance = fixed.distance_from_span(&unit);
            if distance > crate::tol::VERDICT {
                return Err(Error::NumericalBreakdown(format!(
                    "the fixed-point algebra does not contain B(H_A) ⊗ I \
                     (span distance {distance:.3e}); the state is at best nearly Markov"
                )));
            }
        }
    }

    // Middle algebra: span of the A-slices of the fixed points.
    let mut slices = Vec::with_capacity(fixed.dim() * dim_a * dim_a);
    for w in fixed.basis() {
        for a in 0..dim_a {
            for a2 in 0..dim_a {
                slices.push(middle_slice(w, a, a2, dim_b));
            }
        }
    }
    let middle = StarAlgebra::new(slices)?;
    if fixed.dim() != dim_a * dim_a * middle.dim() {
        return Err(Error::NumericalBreakdown(format!(
            "the fixed-point algebra (dimension {}) does not factor over the first leg \
             (dimension {}) and the middle algebra (dimension {})",
            fixed.dim(),
            dim_a * dim_a,
            middle.dim()
        )));
    }

    let structure = block_structure(&middle)?;
    let ident_a = ComplexMatrix::identity(dim_a);
    let ident_c = ComplexMatrix::identity(dim_c);
    let mut terms = Vec::with_capacity(structure.blocks().len());
    let mut weight_sum = 0.0;
    for block in structure.blocks() {
        let (l, r) = (block.dimension, block.multiplicity);
        let embed = tensor_all(&[&ident_a, &block.basis_isometry, &ident_c]);
        let compression = s.density().matrix().conjugate_by(&embed.adjoint());
        let weight = compression.trace().re;
        if weight <= 1e-12 {
            return Err(Error::NumericalBreakdown(format!(
                "Markov term weight {weight:.3e} is too small to normalize against"
            )));
        }
        weight_sum += weight;
        let normalized = compression.scale_real(1.0 / weight);
        let legs = SubsystemDims::new(vec![dim_a, l, r, dim_c])?;
        let left = partial_trace(&normalized, &legs, &[0, 1])?.hermitize();
        let right = partial_trace(&normalized, &legs, &[2, 3])?.hermitize();
        let residual = tensor_product(&left, &right).hs_distance(&normalized);
        if residual > crate::tol::VERDICT {
            return Err(Error::FactorizationResidual {
                residual,
                tol: crate::tol::VERDICT,
            });
        }
        terms.push(MarkovTerm {
            weight,
            left: DensityMatrix::new(left)?,
            right: DensityMatrix::new(right)?,
            middle_isometry: block.basis_isometry.clone(),
        });
    }
    if (weight_sum - 1.0).abs() > tol::ALGEBRAIC {
        return Err(Error::NumericalBreakdown(format!(
            "Markov term weights sum to {weight_sum:.12} instead of 1"
        )));
    }
    terms.sort_by_key(|t| (weight_key(t.weight), Reverse(t.left.dim())));

    let decomposition = MarkovDecomposition { dim_a, dim_b, dim_c, terms };
    let residual = decomposition.reassemble().hs_distance(s.density().matrix());
    if residual > crate::tol::VERDICT {
        return Err(Error::NumericalBreakdown(format!(
            "reassembled Markov terms miss the state by {residual:.3e}"
        )));
    }
    Ok(decomposition)
}
