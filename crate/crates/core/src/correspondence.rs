//! Finite-dimensional Hilbert C*-correspondences.
//!
//! A correspondence is stored in raw form: a basis `e₁..e_m`, the A-valued
//! Gram matrix as one `m×m` slice per algebra basis coordinate, and the
//! right/left actions of each algebra basis element as `m×m` matrices
//! acting on coordinate columns. Inner products are conjugate-linear in the
//! first variable and linear in the second.
//!
//! Null vectors of the A-valued semi-inner product are removed by
//! [`Correspondence::reduce_null`]; localization against a representation of
//! the algebra produces a [`LocalizedSpace`] whose coordinates carry the
//! standard inner product of `ℂᵖ`.

use crate::algebra::{AlgebraElement, CStarAlgebra};
use crate::error::{DilationError, Result};
use crate::linalg::{self, kron, max_abs, op_norm, psd_factor, re, CMat, CVec};
use crate::report::Report;
use crate::representation::AlgebraRepresentation;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Correspondence {
    algebra: CStarAlgebra,
    dim: usize,
    /// `gram[p][(i,j)]` is the `p`-th coordinate of `⟨eᵢ,eⱼ⟩`.
    gram: Vec<CMat>,
    /// Column `i` of `right_action[p]` holds the coordinates of `eᵢ·f_p`.
    right_action: Vec<CMat>,
    /// Column `i` of `left_action[p]` holds the coordinates of `f_p·eᵢ`.
    left_action: Vec<CMat>,
}

/// Record of a null-space quotient: `surjection` maps raw coordinates to
/// quotient coordinates, `lift` is a right inverse onto the complement of
/// the null space.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub surjection: CMat,
    pub lift: CMat,
    pub warning: Option<String>,
}

impl Quotient {
    pub fn identity(m: usize) -> Self {
        Quotient {
            surjection: linalg::identity(m),
            lift: linalg::identity(m),
            warning: None,
        }
    }
}

fn ambiguous_rank(eigenvalues: &[f64], tol: f64) -> Option<String> {
    let bad: Vec<f64> = eigenvalues
        .iter()
        .copied()
        .filter(|&l| l >= tol / 10.0 && l <= tol * 10.0)
        .collect();
    (!bad.is_empty()).then(|| {
        format!(
            "degenerate rank: {} eigenvalue(s) within a decade of the cutoff {tol:.1e} (e.g. {:.3e})",
            bad.len(),
            bad[0]
        )
    })
}

impl Correspondence {
    pub fn new(
        algebra: CStarAlgebra,
        dim: usize,
        gram: Vec<CMat>,
        right_action: Vec<CMat>,
        left_action: Vec<CMat>,
    ) -> Result<Self> {
        let n = algebra.dim();
        if gram.len() != n || right_action.len() != n || left_action.len() != n {
            return Err(DilationError::invalid(format!(
                "correspondence needs {n} Gram slices and {n} action matrices per side"
            )));
        }
        let square = |m: &CMat| m.shape() == (dim, dim);
        if !gram.iter().chain(&right_action).chain(&left_action).all(square) {
            return Err(DilationError::invalid(format!(
                "all Gram slices and action matrices must be {dim}×{dim}"
            )));
        }
        Ok(Correspondence {
            algebra,
            dim,
            gram,
            right_action,
            left_action,
        })
    }

    /// Builds from an `m×m` array of Gram entries.
    pub fn from_gram_entries(
        algebra: CStarAlgebra,
        gram: &[Vec<AlgebraElement>],
        right_action: Vec<CMat>,
        left_action: Vec<CMat>,
    ) -> Result<Self> {
        let m = gram.len();
        let n = algebra.dim();
        let mut slices = vec![linalg::zeros(m, m); n];
        for (i, row) in gram.iter().enumerate() {
            if row.len() != m {
                return Err(DilationError::invalid("Gram must be square"));
            }
            for (j, g) in row.iter().enumerate() {
                if g.algebra() != &algebra {
                    return Err(DilationError::invalid("Gram entry over the wrong algebra"));
                }
                for (p, z) in g.coords().iter().enumerate() {
                    slices[p][(i, j)] = *z;
                }
            }
        }
        Correspondence::new(algebra, m, slices, right_action, left_action)
    }

    /// `A` as a correspondence over itself: `⟨x,y⟩ = x*y`, actions by
    /// multiplication.
    pub fn algebra_itself(algebra: &CStarAlgebra) -> Self {
        let n = algebra.dim();
        let mut gram = vec![linalg::zeros(n, n); n];
        let mut right = vec![linalg::zeros(n, n); n];
        let mut left = vec![linalg::zeros(n, n); n];
        for p in 0..n {
            for q in 0..n {
                // ⟨f_p, f_q⟩ = f_p* f_q
                if let Some(r) = algebra.basis_product(algebra.basis_adjoint(p), q) {
                    gram[r][(p, q)] = re(1.0);
                }
                // f_p · f_q
                if let Some(r) = algebra.basis_product(p, q) {
                    right[q][(r, p)] = re(1.0);
                    left[p][(r, q)] = re(1.0);
                }
            }
        }
        Correspondence {
            algebra: algebra.clone(),
            dim: n,
            gram,
            right_action: right,
            left_action: left,
        }
    }

    /// `ℂᵐ` over `ℂ` with the standard inner product.
    pub fn standard(m: usize) -> Self {
        Correspondence {
            algebra: CStarAlgebra::scalars(),
            dim: m,
            gram: vec![linalg::identity(m)],
            right_action: vec![linalg::identity(m)],
            left_action: vec![linalg::identity(m)],
        }
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram_slices(&self) -> &[CMat] {
        &self.gram
    }

    pub fn right_action(&self) -> &[CMat] {
        &self.right_action
    }

    pub fn left_action(&self) -> &[CMat] {
        &self.left_action
    }

    pub fn gram(&self, i: usize, j: usize) -> AlgebraElement {
        self.algebra
            .element(self.gram.iter().map(|g| g[(i, j)]).collect())
            .expect("gram slices match algebra dimension")
    }

    fn combine(mats: &[CMat], a: &AlgebraElement) -> CMat {
        mats.iter()
            .zip(a.coords())
            .fold(linalg::zeros(mats[0].nrows(), mats[0].ncols()), |acc, (m, z)| acc + m * *z)
    }

    /// Matrix of `x ↦ a·x` on coordinates.
    pub fn left(&self, a: &AlgebraElement) -> CMat {
        Self::combine(&self.left_action, a)
    }

    /// Matrix of `x ↦ x·a` on coordinates.
    pub fn right(&self, a: &AlgebraElement) -> CMat {
        Self::combine(&self.right_action, a)
    }

    /// `⟨x, y⟩ ∈ A` for coordinate vectors.
    pub fn inner(&self, x: &CVec, y: &CVec) -> AlgebraElement {
        let coords = self.gram.iter().map(|g| (x.adjoint() * g * y)[(0, 0)]).collect();
        self.algebra.element(coords).expect("dimension")
    }

    /// The `mn×mn` matrix `[embed⟨eᵢ,eⱼ⟩]`.
    pub fn embedded_gram(&self) -> CMat {
        let n = self.algebra.rep_dim();
        let mut out = linalg::zeros(self.dim * n, self.dim * n);
        for (p, g) in self.gram.iter().enumerate() {
            out += kron(g, &self.algebra.basis_element(p).embed());
        }
        out
    }

    /// Embedded Gram of the vectors given by the columns of `x`.
    pub fn pulled_back_embedded_gram(&self, x: &CMat) -> CMat {
        let n = self.algebra.rep_dim();
        let mut out = linalg::zeros(x.ncols() * n, x.ncols() * n);
        for (p, g) in self.gram.iter().enumerate() {
            out += kron(&(x.adjoint() * g * x), &self.algebra.basis_element(p).embed());
        }
        out
    }

    /// `M[i][j] = tr embed⟨eᵢ,eⱼ⟩`. A coordinate vector is null for the
    /// A-valued inner product exactly when it is null for `M`.
    pub fn trace_gram(&self) -> CMat {
        let mut out = linalg::zeros(self.dim, self.dim);
        for (p, g) in self.gram.iter().enumerate() {
            let u = self.algebra.matrix_unit(p);
            if u.row == u.col {
                out += g;
            }
        }
        out
    }

    /// Factor `F` of the trace Gram; `‖F D‖` is the seminorm used to
    /// compare raw maps modulo null vectors.
    pub fn seminorm_factor(&self, tol: f64) -> CMat {
        psd_factor(&self.trace_gram(), tol).factor
    }

    /// Named residuals for every correspondence axiom.
    pub fn validate(&self, tol: f64) -> Report {
        let mut rep = Report::default();
        let a = &self.algebra;
        let n = a.dim();
        let m = self.dim;
        let f = self.seminorm_factor(tol);
        let semi = |d: &CMat| op_norm(&(&f * d));

        let eg = self.embedded_gram();
        rep.push("gram_hermitian", max_abs(&(&eg - eg.adjoint())), tol);
        let min_eig = linalg::min_eigenvalue(&eg);
        rep.push("gram_positive", if min_eig.is_finite() { (-min_eig).max(0.0) } else { 0.0 }, tol);

        let unit = a.unit();
        rep.push("right_unital", semi(&(self.right(&unit) - linalg::identity(m))), tol);
        rep.push("left_unital", semi(&(self.left(&unit) - linalg::identity(m))), tol);

        let (mut r_mult, mut l_mult, mut compat, mut adj, mut bimod) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for p in 0..n {
            for q in 0..n {
                let pq = a.basis_product(p, q);
                let target = |acts: &[CMat]| match pq {
                    Some(r) => acts[r].clone(),
                    None => linalg::zeros(m, m),
                };
                // (x f_p) f_q = x (f_p f_q)
                let d = &self.right_action[q] * &self.right_action[p] - target(&self.right_action);
                r_mult = r_mult.max(semi(&d));
                let d = &self.left_action[p] * &self.left_action[q] - target(&self.left_action);
                l_mult = l_mult.max(semi(&d));
                let d = &self.left_action[p] * &self.right_action[q]
                    - &self.right_action[q] * &self.left_action[p];
                bimod = bimod.max(semi(&d));
            }
            // ⟨eᵢ, eⱼ f_p⟩ = ⟨eᵢ,eⱼ⟩ f_p, slice by slice
            for r in 0..n {
                let lhs = &self.gram[r] * &self.right_action[p];
                let mut rhs = linalg::zeros(m, m);
                for r2 in 0..n {
                    if a.basis_product(r2, p) == Some(r) {
                        rhs += &self.gram[r2];
                    }
                }
                compat = compat.max(max_abs(&(lhs - rhs)));
                // ⟨f_p eᵢ, eⱼ⟩ = ⟨eᵢ, f_p* eⱼ⟩
                let lhs = self.left_action[p].adjoint() * &self.gram[r];
                let rhs = &self.gram[r] * &self.left_action[a.basis_adjoint(p)];
                adj = adj.max(max_abs(&(lhs - rhs)));
            }
        }
        rep.push("right_multiplicative", r_mult, tol);
        rep.push("right_compatible", compat, tol);
        rep.push("left_multiplicative", l_mult, tol);
        rep.push("left_adjointable", adj, tol);
        rep.push("bimodule", bimod, tol);
        rep
    }

    /// The algebraic tensor product `E ⊗ F` before null vectors are
    /// removed. Raw index of `eᵢ ⊗ f_k` is `i·dim(F) + k`.
    pub fn raw_interior_tensor(&self, other: &Correspondence) -> Result<Correspondence> {
        if self.algebra != other.algebra {
            return Err(DilationError::invalid("interior tensor over different algebras"));
        }
        let n = self.algebra.dim();
        let (me, mf) = (self.dim, other.dim);
        let mut gram = vec![linalg::zeros(me * mf, me * mf); n];
        // ⟨eᵢ⊗f_k, eⱼ⊗f_l⟩ = ⟨f_k, ⟨eᵢ,eⱼ⟩·f_l⟩ = Σ_{p'} (G^E_{p'})ᵢⱼ (G^F_p Φ^F_{p'})_{kl}
        for (p, slice) in gram.iter_mut().enumerate() {
            for p2 in 0..n {
                let ge = &self.gram[p2];
                if ge.iter().all(|z| z.norm_sqr() == 0.0) {
                    continue;
                }
                let inner = &other.gram[p] * &other.left_action[p2];
                *slice += kron(ge, &inner);
            }
        }
        let right = other
            .right_action
            .iter()
            .map(|r| kron(&linalg::identity(me), r))
            .collect();
        let left = self
            .left_action
            .iter()
            .map(|l| kron(l, &linalg::identity(mf)))
            .collect();
        Correspondence::new(self.algebra.clone(), me * mf, gram, right, left)
    }

    /// Balanced tensor product `E ⊗_A F` with null vectors removed.
    pub fn interior_tensor(&self, other: &Correspondence, tol: f64) -> Result<(Correspondence, Quotient)> {
        Ok(self.raw_interior_tensor(other)?.reduce_null(tol))
    }

    /// Quotient by vectors null in the embedded Gram. Definite inputs are
    /// returned unchanged with the identity quotient.
    pub fn reduce_null(&self, tol: f64) -> (Correspondence, Quotient) {
        let g = self.trace_gram();
        // G − 10·tol·I positive definite means every eigenvalue clears the
        // cutoff by a decade: full rank and no warning, without an eigensolve
        let shifted = &g - linalg::identity(self.dim) * re(10.0 * tol);
        if self.dim == 0 || linalg::definite_cholesky(&shifted).is_some() {
            return (self.clone(), Quotient::identity(self.dim));
        }
        let eig = linalg::hermitian_eigen(&g);
        let q = eig.values.iter().filter(|&&l| l > tol).count();
        let warning = ambiguous_rank(&eig.values, tol);
        if q == self.dim {
            let mut quotient = Quotient::identity(self.dim);
            quotient.warning = warning;
            return (self.clone(), quotient);
        }
        let w = eig.vectors.columns(0, q).into_owned();
        let s = w.adjoint();
        let reduced = Correspondence {
            algebra: self.algebra.clone(),
            dim: q,
            gram: self.gram.iter().map(|g| &s * g * &w).collect(),
            right_action: self.right_action.iter().map(|r| &s * r * &w).collect(),
            left_action: self.left_action.iter().map(|l| &s * l * &w).collect(),
        };
        (
            reduced,
            Quotient {
                surjection: s,
                lift: w,
                warning,
            },
        )
    }

    /// The localized Gram `G_σ[(i,k),(j,l)] = σ(⟨eᵢ,eⱼ⟩)_{kl}`.
    pub fn localized_gram(&self, sigma: &AlgebraRepresentation) -> CMat {
        let d = sigma.dim();
        let mut out = linalg::zeros(self.dim * d, self.dim * d);
        for (g, s) in self.gram.iter().zip(sigma.images()) {
            out += kron(g, s);
        }
        out
    }

    /// `E ⊗_σ ℂᵈ` as a quotient of `ℂ^{m·d}`.
    pub fn localize(&self, sigma: &AlgebraRepresentation, tol: f64) -> Result<LocalizedSpace> {
        if sigma.algebra() != &self.algebra {
            return Err(DilationError::invalid("representation of a different algebra"));
        }
        Ok(LocalizedSpace::from_gram(&self.localized_gram(sigma), tol))
    }
}

/// A Hilbert space presented as the quotient of a raw coordinate space by
/// the null space of a positive semidefinite Gram matrix.
#[derive(Debug, Clone)]
pub struct LocalizedSpace {
    source_dim: usize,
    /// `p × source_dim`, `Fᴴ F = Gram`.
    factor: CMat,
    /// `source_dim × p`, `F · lift = I`.
    lift: CMat,
    /// Orthonormal basis of the discarded (numerically null) directions.
    kernel: CMat,
    tolerance: f64,
    warning: Option<String>,
}

impl LocalizedSpace {
    pub fn from_gram(gram: &CMat, tol: f64) -> Self {
        let f = psd_factor(gram, tol);
        let warning = ambiguous_rank(&f.eigenvalues, tol);
        LocalizedSpace {
            source_dim: gram.nrows(),
            factor: f.factor,
            lift: f.lift,
            kernel: f.kernel,
            tolerance: tol,
            warning,
        }
    }

    /// `ℂᵈ` presented by itself.
    pub fn identity(d: usize) -> Self {
        LocalizedSpace {
            source_dim: d,
            factor: linalg::identity(d),
            lift: linalg::identity(d),
            kernel: linalg::zeros(d, 0),
            tolerance: 0.0,
            warning: None,
        }
    }

    pub fn rank(&self) -> usize {
        self.factor.nrows()
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn factor(&self) -> &CMat {
        &self.factor
    }

    pub fn lift(&self) -> &CMat {
        &self.lift
    }

    pub fn kernel(&self) -> &CMat {
        &self.kernel
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    /// Quotient coordinates of raw vectors (columns).
    pub fn project(&self, raw: &CMat) -> CMat {
        &self.factor * raw
    }
}

/// Descends a raw map `M` between two quotient spaces: returns `B` with
/// `B·F_source = F_target·M`.
///
/// Well-definedness is certified by `‖F_target M K‖² ≤ tol` where `K` spans
/// the numerical kernel of the source; the squared form is on the same scale
/// as the eigenvalue cutoff that produced `K`.
pub fn descend_map(
    m: &CMat,
    source: &LocalizedSpace,
    target: &LocalizedSpace,
    tol: f64,
) -> Result<CMat> {
    if m.shape() != (target.source_dim, source.source_dim) {
        return Err(DilationError::invalid(format!(
            "raw map is {}×{}, expected {}×{}",
            m.nrows(),
            m.ncols(),
            target.source_dim,
            source.source_dim
        )));
    }
    let fm = linalg::matmul(&target.factor, m);
    if source.kernel.ncols() > 0 && fm.nrows() > 0 {
        let leak = op_norm(&linalg::matmul(&fm, &source.kernel)).powi(2);
        if leak > tol {
            return Err(DilationError::NotWellDefined {
                context: "descend_map".into(),
                residual: leak,
                tolerance: tol,
            });
        }
    }
    Ok(linalg::matmul(&fm, &source.lift))
}
