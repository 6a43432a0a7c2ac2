//! Representations of the coefficient algebra and completely contractive
//! covariant representations of a product system on `ℂᵈ`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::algebra::{AlgebraElement, CStarAlgebra};
use crate::correspondence::{descend_map, LocalizedSpace};
use crate::error::{DilationError, Result};
use crate::lattice::{subsets, LatticePoint};
use crate::linalg::{self, kron, max_abs, op_norm, CMat};
use crate::prodsys::ProductSystem;
use crate::report::Report;

/// A linear map `A → M_d(ℂ)` given on the canonical basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraRepresentation {
    algebra: CStarAlgebra,
    dim: usize,
    images: Vec<CMat>,
}

impl AlgebraRepresentation {
    pub fn new(algebra: CStarAlgebra, dim: usize, images: Vec<CMat>) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(DilationError::invalid(format!(
                "sigma needs {} matrices, got {}",
                algebra.dim(),
                images.len()
            )));
        }
        if images.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(DilationError::invalid(format!("sigma matrices must be {dim}×{dim}")));
        }
        Ok(AlgebraRepresentation { algebra, dim, images })
    }

    /// `λ ↦ λ·I_d` for `A = ℂ`.
    pub fn scalar(d: usize) -> Self {
        AlgebraRepresentation {
            algebra: CStarAlgebra::scalars(),
            dim: d,
            images: vec![linalg::identity(d)],
        }
    }

    /// The block-diagonal embedding.
    pub fn faithful(algebra: &CStarAlgebra) -> Self {
        Self::amplified(algebra, 1)
    }

    /// `a ↦ embed(a) ⊗ I_r`.
    pub fn amplified(algebra: &CStarAlgebra, r: usize) -> Self {
        let images = (0..algebra.dim())
            .map(|p| kron(&algebra.basis_element(p).embed(), &linalg::identity(r)))
            .collect();
        AlgebraRepresentation {
            algebra: algebra.clone(),
            dim: algebra.rep_dim() * r,
            images,
        }
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn images(&self) -> &[CMat] {
        &self.images
    }

    pub fn apply(&self, a: &AlgebraElement) -> CMat {
        self.images
            .iter()
            .zip(a.coords())
            .fold(linalg::zeros(self.dim, self.dim), |acc, (m, z)| acc + m * *z)
    }

    /// Multiplicativity, involution and unitality on the canonical basis.
    /// Linearity holds by construction.
    pub fn validate(&self, tol: f64) -> Report {
        let a = &self.algebra;
        let n = a.dim();
        let mut mult = 0.0f64;
        let mut adj = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                let prod = &self.images[p] * &self.images[q];
                let expected = match a.basis_product(p, q) {
                    Some(r) => self.images[r].clone(),
                    None => linalg::zeros(self.dim, self.dim),
                };
                mult = mult.max(max_abs(&(prod - expected)));
            }
            adj = adj.max(max_abs(&(self.images[p].adjoint() - &self.images[a.basis_adjoint(p)])));
        }
        let mut rep = Report::default();
        rep.push("sigma_multiplicative", mult, tol);
        rep.push("sigma_adjoint", adj, tol);
        rep.push(
            "sigma_unital",
            max_abs(&(self.apply(&a.unit()) - linalg::identity(self.dim))),
            tol,
        );
        rep
    }
}

/// `X(s)⊗_σH` with the localized contraction `T̃ₛ`.
#[derive(Debug)]
pub struct LocalizedFiber {
    pub space: LocalizedSpace,
    /// `d × (dim X(s)·d)`: `T̃ₛ` on raw coordinates `x ⊗ h`.
    pub raw: CMat,
    /// `d × rank`: `T̃ₛ` on quotient coordinates.
    pub tilde: CMat,
}

#[derive(Debug)]
pub struct CCRepresentation {
    system: Arc<ProductSystem>,
    sigma: AlgebraRepresentation,
    /// `maps[i][a] = Tᵢ(e_a)` for the raw basis of generator `i`.
    maps: Vec<Vec<CMat>>,
    tol: f64,
    fiber_ops: RwLock<HashMap<LatticePoint, Arc<Vec<CMat>>>>,
    localized: RwLock<HashMap<LatticePoint, Arc<LocalizedFiber>>>,
}

/// Where a Brehmer-type minimum was attained.
#[derive(Debug, Clone, PartialEq)]
pub struct BrehmerWitness {
    pub v: Vec<usize>,
    pub s: LatticePoint,
    pub min_eigenvalue: f64,
}

impl CCRepresentation {
    pub fn new(
        system: Arc<ProductSystem>,
        sigma: AlgebraRepresentation,
        maps: Vec<Vec<CMat>>,
        tol: f64,
    ) -> Result<Self> {
        if sigma.algebra() != system.algebra() {
            return Err(DilationError::invalid("sigma represents a different algebra"));
        }
        if maps.len() != system.k() {
            return Err(DilationError::invalid(format!(
                "expected maps for {} generators, got {}",
                system.k(),
                maps.len()
            )));
        }
        let d = sigma.dim();
        for (i, (m, e)) in maps.iter().zip(system.generators()).enumerate() {
            if m.len() != e.dim() {
                return Err(DilationError::invalid(format!(
                    "generator {} has dimension {} but {} operators were given",
                    i + 1,
                    e.dim(),
                    m.len()
                )));
            }
            if m.iter().any(|t| t.shape() != (d, d)) {
                return Err(DilationError::invalid(format!("operators of generator {} must be {d}×{d}", i + 1)));
            }
        }
        Ok(CCRepresentation {
            system,
            sigma,
            maps,
            tol,
            fiber_ops: RwLock::new(HashMap::new()),
            localized: RwLock::new(HashMap::new()),
        })
    }

    pub fn system(&self) -> &Arc<ProductSystem> {
        &self.system
    }

    pub fn sigma(&self) -> &AlgebraRepresentation {
        &self.sigma
    }

    pub fn maps(&self) -> &[Vec<CMat>] {
        &self.maps
    }

    pub fn h_dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn k(&self) -> usize {
        self.system.k()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn validate(&self, tol: f64) -> Report {
        let mut rep = self.sigma.validate(tol);
        let d = self.h_dim();
        let a = self.system.algebra();
        for (i, e) in self.system.generators().iter().enumerate() {
            let t = &self.maps[i];
            let (mut right, mut left) = (0.0f64, 0.0f64);
            for p in 0..a.dim() {
                let sp = &self.sigma.images()[p];
                for (col, tc) in t.iter().enumerate() {
                    let mut xr = linalg::zeros(d, d);
                    let mut xl = linalg::zeros(d, d);
                    for (r, tr) in t.iter().enumerate() {
                        xr += tr * e.right_action()[p][(r, col)];
                        xl += tr * e.left_action()[p][(r, col)];
                    }
                    right = right.max(max_abs(&(xr - tc * sp)));
                    left = left.max(max_abs(&(xl - sp * tc)));
                }
            }
            rep.push(format!("covariance_right_{}", i + 1), right, tol);
            rep.push(format!("covariance_left_{}", i + 1), left, tol);
            let contraction = match self.localized(&LatticePoint::unit(self.k(), i)) {
                Ok(l) => (op_norm(&l.tilde) - 1.0).max(0.0),
                Err(_) => f64::INFINITY,
            };
            rep.push(format!("contraction_{}", i + 1), contraction, tol);
        }
        for i in 0..self.k() {
            for j in i + 1..self.k() {
                rep.push(format!("commutation_{}_{}", i + 1, j + 1), self.commutation_residual(i, j), tol);
            }
        }
        rep
    }

    /// `T̃ᵢ(I⊗T̃ⱼ) − T̃ⱼ(I⊗T̃ᵢ)(t_{ij}⊗I)` on localized `Eᵢ⊗Eⱼ⊗H`.
    fn commutation_residual(&self, i: usize, j: usize) -> f64 {
        let d = self.h_dim();
        let gens = self.system.generators();
        let (mi, mj) = (gens[i].dim(), gens[j].dim());
        let mut lhs = linalg::zeros(d, mi * mj * d);
        let mut rhs_raw = linalg::zeros(d, mj * mi * d);
        for a in 0..mi {
            for b in 0..mj {
                lhs.columns_mut((a * mj + b) * d, d)
                    .copy_from(&(&self.maps[i][a] * &self.maps[j][b]));
                rhs_raw
                    .columns_mut((b * mi + a) * d, d)
                    .copy_from(&(&self.maps[j][b] * &self.maps[i][a]));
            }
        }
        let flip = self.system.flip(i, j).expect("validated system has every flip");
        let rhs = rhs_raw * kron(flip, &linalg::identity(d));
        let space = match gens[i].raw_interior_tensor(&gens[j]) {
            Ok(e) => e.localized_gram(&self.sigma),
            Err(_) => return f64::INFINITY,
        };
        let loc = LocalizedSpace::from_gram(&space, self.tol);
        op_norm(&((lhs - rhs) * loc.lift()))
    }

    /// `Tₛ(b_q)` for each basis vector `b_q` of the fiber `X(s)`.
    pub fn fiber_operators(&self, s: &LatticePoint) -> Arc<Vec<CMat>> {
        if let Some(v) = self.fiber_ops.read().expect("ops cache").get(s) {
            return v.clone();
        }
        let ops = Arc::new(self.build_fiber_operators(s));
        self.fiber_ops
            .write()
            .expect("ops cache")
            .entry(s.clone())
            .or_insert(ops)
            .clone()
    }

    fn build_fiber_operators(&self, s: &LatticePoint) -> Vec<CMat> {
        let d = self.h_dim();
        let fiber = self.system.fiber(s);
        let w = &fiber.step_lift;
        let Some(j) = s.last_nonzero() else {
            return self.sigma.images().to_vec();
        };
        let unit = LatticePoint::unit(self.k(), j);
        if *s == unit {
            return (0..fiber.dim())
                .map(|q| {
                    self.maps[j]
                        .iter()
                        .enumerate()
                        .fold(linalg::zeros(d, d), |acc, (i, t)| acc + t * w[(i, q)])
                })
                .collect();
        }
        let prev = self.fiber_operators(&s.checked_sub(&unit).expect("support"));
        let last = self.fiber_operators(&unit);
        let products: Vec<CMat> = prev
            .iter()
            .flat_map(|x| last.iter().map(move |y| x * y))
            .collect();
        (0..fiber.dim())
            .map(|q| {
                products
                    .iter()
                    .enumerate()
                    .fold(linalg::zeros(d, d), |acc, (idx, m)| {
                        let z = w[(idx, q)];
                        if z.norm_sqr() == 0.0 {
                            acc
                        } else {
                            acc + m * z
                        }
                    })
            })
            .collect()
    }

    /// `T̃ₛ` on raw coordinates of the algebraic tensor `X(s)⊗H`
    /// (`x⊗h ↦ Tₛ(x)h`). For `s = 0` this is `a⊗h ↦ σ(a)h`.
    pub fn raw_tilde(&self, s: &LatticePoint) -> CMat {
        linalg::hstack(self.h_dim(), &self.fiber_operators(s))
    }

    /// Localization of `X(s)` with `T̃ₛ`. The zero fiber is presented as
    /// `H` itself with `T̃₀ = I`.
    pub fn localized(&self, s: &LatticePoint) -> Result<Arc<LocalizedFiber>> {
        if let Some(v) = self.localized.read().expect("loc cache").get(s) {
            return Ok(v.clone());
        }
        let lf = Arc::new(self.build_localized(s)?);
        Ok(self
            .localized
            .write()
            .expect("loc cache")
            .entry(s.clone())
            .or_insert(lf)
            .clone())
    }

    fn build_localized(&self, s: &LatticePoint) -> Result<LocalizedFiber> {
        let d = self.h_dim();
        if s.is_zero() {
            return Ok(LocalizedFiber {
                space: LocalizedSpace::identity(d),
                raw: linalg::identity(d),
                tilde: linalg::identity(d),
            });
        }
        let fiber = self.system.fiber(s);
        let space = fiber.correspondence.localize(&self.sigma, self.tol)?;
        let raw = self.raw_tilde(s);
        let tilde = descend_map(&raw, &space, &LocalizedSpace::identity(d), self.tol).map_err(|e| match e {
            DilationError::NotWellDefined { residual, tolerance, .. } => DilationError::NotWellDefined {
                context: format!("T̃ at {s}"),
                residual,
                tolerance,
            },
            other => other,
        })?;
        Ok(LocalizedFiber { space, raw, tilde })
    }

    pub fn t_tilde(&self, s: &LatticePoint) -> Result<CMat> {
        Ok(self.localized(s)?.tilde.clone())
    }

    pub fn localized_rank(&self, s: &LatticePoint) -> Result<usize> {
        Ok(self.localized(s)?.space.rank())
    }

    pub fn is_isometric(&self, s: &LatticePoint, tol: f64) -> Result<bool> {
        let t = self.t_tilde(s)?;
        Ok(max_abs(&(t.adjoint() * &t - linalg::identity(t.ncols()))) <= tol)
    }

    pub fn is_fully_coisometric(&self, s: &LatticePoint, tol: f64) -> Result<bool> {
        let t = self.t_tilde(s)?;
        Ok(max_abs(&(&t * t.adjoint() - linalg::identity(t.nrows()))) <= tol)
    }

    /// `‖T̃_{s+t} − T̃ₛ(I⊗T̃ₜ)(U_{s,t}⁻¹⊗I)‖` on localized `X(s+t)⊗H`.
    pub fn semigroup_residual(&self, s: &LatticePoint, t: &LatticePoint) -> Result<f64> {
        let d = self.h_dim();
        let st = s.add(t);
        let target = self.system.fiber(&st).correspondence.localize(&self.sigma, self.tol)?;
        if target.rank() == 0 {
            return Ok(0.0);
        }
        let m = self.system.multiplication(s, t)?;
        let ds = self.system.fiber_dim(s);
        let lhs = self.raw_tilde(&st);
        let rhs = self.raw_tilde(s)
            * kron(&linalg::identity(ds), &self.raw_tilde(t))
            * kron(&m.inverse_raw, &linalg::identity(d));
        Ok(op_norm(&((lhs - rhs) * target.lift())))
    }

    /// The Brehmer operator `Σ_{u⊆v}(−1)^{|u|} I⊗T̃*_{s[u]}T̃_{s[u]}` on
    /// localized `X(s[v])⊗H`, or `None` when that space is zero.
    pub fn brehmer_operator(&self, v: &[usize], s: &LatticePoint) -> Result<Option<CMat>> {
        let d = self.h_dim();
        let top = s.restrict(v);
        let loc = self.localized(&top)?;
        let p = loc.space.rank();
        if p == 0 {
            return Ok(None);
        }
        let mut sum = linalg::zeros(p, p);
        for u in subsets(v) {
            let b = s.restrict(&u);
            let a = top.checked_sub(&b).expect("s[u] ≤ s[v]");
            let term = if b.is_zero() {
                linalg::identity(p)
            } else if a.is_zero() {
                loc.tilde.adjoint() * &loc.tilde
            } else {
                let lb = self.localized(&b)?;
                let inner = lb.space.lift() * lb.tilde.adjoint() * &lb.raw;
                let m = self.system.multiplication(&a, &b)?;
                let da = self.system.fiber_dim(&a);
                let raw = kron(&m.raw, &linalg::identity(d))
                    * kron(&linalg::identity(da), &inner)
                    * kron(&m.inverse_raw, &linalg::identity(d));
                descend_map(&raw, &loc.space, &loc.space, self.tol)?
            };
            if u.len() % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        Ok(Some(sum))
    }

    /// Minimum eigenvalue of the Brehmer operator for `(v, s)`; `+∞` when the
    /// localized fiber is zero.
    pub fn brehmer_check_ns(&self, v: &[usize], s: &LatticePoint) -> Result<f64> {
        Ok(self
            .brehmer_operator(v, s)?
            .map(|m| linalg::min_eigenvalue(&m))
            .unwrap_or(f64::INFINITY))
    }

    /// Minimum of [`Self::brehmer_check_ns`] over nonempty `v` and all
    /// `s ≤ bound` with `s(i) ≥ 1` exactly on `v`. Other `s` give the zero
    /// operator.
    pub fn brehmer_min_over_box(&self, bound: &LatticePoint) -> Result<Option<BrehmerWitness>> {
        let k = self.k();
        let all: Vec<usize> = (0..k).collect();
        let mut cases = Vec::new();
        for v in subsets(&all).into_iter().filter(|v| !v.is_empty()) {
            for s in bound.restrict(&v).box_points() {
                if v.iter().all(|&i| s.get(i) >= 1) {
                    cases.push((v.clone(), s));
                }
            }
        }
        let values: Vec<Result<f64>> = cases
            .par_iter()
            .map(|(v, s)| self.brehmer_check_ns(v, s))
            .collect();
        let mut best: Option<BrehmerWitness> = None;
        for ((v, s), val) in cases.into_iter().zip(values) {
            let val = val?;
            if best.as_ref().is_none_or(|b| val < b.min_eigenvalue) {
                best = Some(BrehmerWitness { v, s, min_eigenvalue: val });
            }
        }
        Ok(best)
    }

    /// The flip `X(a)⊗X(b) → X(b)⊗X(a)` on raw coordinates:
    /// `U_{b,a}⁻¹ U_{a,b}`.
    pub fn raw_flip(&self, a: &LatticePoint, b: &LatticePoint) -> Result<CMat> {
        Ok(&self.system.multiplication(b, a)?.inverse_raw * &self.system.multiplication(a, b)?.raw)
    }

    /// `‖(I⊗T̃_a)(t⊗I_H)(I⊗T̃_b*) − T̃_b*T̃_a‖` with `a = e_j(s_j)` and
    /// `b = e_k(s_k)`, generators 0-based.
    pub fn doubly_commuting_check(&self, j: usize, k: usize, s_j: usize, s_k: usize) -> Result<f64> {
        if j == k {
            return Err(DilationError::invalid("doubly commuting check needs two distinct generators"));
        }
        if j >= self.k() || k >= self.k() {
            return Err(DilationError::invalid("generator index out of range"));
        }
        if s_j == 0 || s_k == 0 {
            return Err(DilationError::invalid("doubly commuting check needs s_j, s_k ≥ 1"));
        }
        let a = LatticePoint::axis(self.k(), j, s_j);
        let b = LatticePoint::axis(self.k(), k, s_k);
        let (la, lb) = (self.localized(&a)?, self.localized(&b)?);
        let lhs = flip_sandwich(
            self.h_dim(),
            self.system.fiber_dim(&a),
            self.system.fiber_dim(&b),
            &la.space,
            &lb.space,
            &la.raw,
            &(lb.space.lift() * lb.tilde.adjoint()),
            &self.raw_flip(&a, &b)?,
        );
        let rhs = lb.tilde.adjoint() * &la.tilde;
        Ok(op_norm(&(lhs - rhs)))
    }

    /// Largest doubly-commuting residual over all generator pairs and
    /// powers up to `bound`.
    pub fn doubly_commuting_max(&self, bound: &LatticePoint) -> Result<f64> {
        let mut cases = Vec::new();
        for j in 0..self.k() {
            for k in 0..self.k() {
                if j == k {
                    continue;
                }
                for sj in 1..=bound.get(j) {
                    for sk in 1..=bound.get(k) {
                        cases.push((j, k, sj, sk));
                    }
                }
            }
        }
        let vals: Vec<Result<f64>> = cases
            .par_iter()
            .map(|&(j, k, sj, sk)| self.doubly_commuting_check(j, k, sj, sk))
            .collect();
        vals.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
    }

    /// `Tₛ(x)` for `x` given by fiber coordinates.
    pub fn apply_fiber(&self, s: &LatticePoint, x: &[linalg::C64]) -> CMat {
        let ops = self.fiber_operators(s);
        ops.iter()
            .zip(x)
            .fold(linalg::zeros(self.h_dim(), self.h_dim()), |acc, (t, z)| acc + t * *z)
    }
}

/// `F_b·(I_{m_b}⊗A_raw)·(t⊗I_d)·(I_{m_a}⊗B_lift)·F_a⁺` as a map from the
/// quotient of `X(a)⊗K` to the quotient of `X(b)⊗K`, where `A_raw` is a raw
/// map `X(a)⊗K → K` and `B_lift` maps `K` into raw `X(b)⊗K`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn flip_sandwich(
    d: usize,
    ma: usize,
    mb: usize,
    space_a: &LocalizedSpace,
    space_b: &LocalizedSpace,
    a_raw: &CMat,
    b_lift: &CMat,
    flip: &CMat,
) -> CMat {
    let m = kron(&linalg::identity(mb), a_raw)
        * kron(flip, &linalg::identity(d))
        * kron(&linalg::identity(ma), b_lift);
    space_b.factor() * m * space_a.lift()
}
