//! Minimal regular isometric dilation of a completely contractive
//! representation, assembled from a Kolmogorov factor of the window Gram.
//!
//! Generating vectors are `γₛ = V̂ₛ(δₛ·ξ)` for `ξ` in block `s` of `𝓗_L`
//! and `s ≤ min(M, L)`; the dilation space `K` is their span, `H` sits
//! inside as `ι = γ₀`, and `Vₛ(x)` is determined by
//! `Vₛ(x)γₜξ = γ_{s+t}(x⊗ξ)`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::algebra::AlgebraElement;
use crate::correspondence::descend_map;
use crate::error::{DilationError, Result};
use crate::hat::TruncatedFock;
use crate::kernel::{kolmogorov, FactorBackend, KernelWindow, KolmogorovFactor, RANK_CUTOFF};
use crate::lattice::LatticePoint;
use crate::linalg::{self, c, kron, max_abs, op_norm, pinv, range_basis, CMat, CVec, C64};
use crate::report::Report;
use crate::representation::{flip_sandwich, AlgebraRepresentation};

/// Tolerances for the dilation checks.
#[derive(Debug, Clone, Copy)]
pub struct DilationTolerances {
    /// Smallest admissible Gram eigenvalue is `−psd`.
    pub psd: f64,
    /// Least-squares consistency when assembling `V₀` and `Vₛ`.
    pub well_defined: f64,
    /// Weak-form identities (items 1–3, isometry, semigroup, `V₀`).
    pub weak: f64,
    /// Checks involving adjoints of truncated maps.
    pub adjoint: f64,
    /// Block-exact identities on `𝓗_L`.
    pub exact: f64,
    pub uniqueness: f64,
}

impl Default for DilationTolerances {
    fn default() -> Self {
        DilationTolerances {
            psd: 1e-8,
            well_defined: 1e-8,
            weak: 1e-8,
            adjoint: 1e-6,
            exact: 1e-10,
            uniqueness: 1e-9,
        }
    }
}

pub struct MinimalDilation {
    window: Arc<KernelWindow>,
    factor: KolmogorovFactor,
    guard: usize,
    tol: DilationTolerances,
    gen_bound: LatticePoint,
    points: Vec<LatticePoint>,
    /// `p × p_K` orthonormal basis of `K` inside the factor space.
    basis: CMat,
    gamma: HashMap<LatticePoint, CMat>,
    v0: Vec<CMat>,
    vs: RwLock<HashMap<LatticePoint, Arc<Vec<CMat>>>>,
}

impl std::fmt::Debug for MinimalDilation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinimalDilation")
            .field("backend", &self.factor.backend)
            .field("window_rank", &self.factor.rank)
            .field("k_dim", &self.k_dim())
            .field("gen_bound", &self.gen_bound)
            .finish()
    }
}

impl MinimalDilation {
    pub fn new(
        window: Arc<KernelWindow>,
        backend: FactorBackend,
        guard: usize,
        tol: DilationTolerances,
    ) -> Result<Self> {
        let factor = kolmogorov(&window, tol.psd, backend)?;
        let space = window.space().clone();
        let gen_bound = window.bound().meet(space.bound());
        let points = gen_bound.box_points();

        let mut gammas = Vec::with_capacity(points.len());
        for s in &points {
            let kappa = factor.kappa(s).expect("generating point lies in the window");
            let b = space.block_index(s).expect("generating point lies in the box");
            gammas.push(kappa.columns(space.offset(b), space.block_dim(b)).into_owned());
        }
        let basis = range_basis(&linalg::hstack(factor.rank, &gammas), RANK_CUTOFF);
        let gamma: HashMap<LatticePoint, CMat> = points
            .iter()
            .cloned()
            .zip(gammas.iter().map(|g| basis.adjoint() * g))
            .collect();

        let mut out = MinimalDilation {
            window,
            factor,
            guard,
            tol,
            gen_bound,
            points,
            basis,
            gamma,
            v0: Vec::new(),
            vs: RwLock::new(HashMap::new()),
        };
        out.v0 = out.assemble_v0()?;
        Ok(out)
    }

    pub fn window(&self) -> &Arc<KernelWindow> {
        &self.window
    }

    pub fn space(&self) -> &Arc<TruncatedFock> {
        self.window.space()
    }

    pub fn factor(&self) -> &KolmogorovFactor {
        &self.factor
    }

    /// `min(M, L)`: the box of generating points.
    pub fn generating_bound(&self) -> &LatticePoint {
        &self.gen_bound
    }

    pub fn generating_points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn k_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    /// `ι : H → K`.
    pub fn iota(&self) -> &CMat {
        &self.gamma[&LatticePoint::zero(self.gen_bound.k())]
    }

    pub fn gamma(&self, s: &LatticePoint) -> Option<&CMat> {
        self.gamma.get(s)
    }

    fn k(&self) -> usize {
        self.gen_bound.k()
    }

    fn d(&self) -> usize {
        self.space().h_dim()
    }

    /// Largest generating point still used by adjoint-sensitive probes.
    pub fn guarded_bound(&self) -> LatticePoint {
        self.gen_bound.saturating_sub_scalar(self.guard)
    }

    /// `V̂ᵤ` on the factor space, as `(matrix, domain projection)`; only
    /// defined on `span{κₛ : s+u ≤ M}`.
    pub fn hat_v(&self, u: &LatticePoint) -> Result<(CMat, CMat)> {
        let bound = self.window.bound();
        let top = bound
            .checked_sub(u)
            .ok_or_else(|| DilationError::invalid(format!("{u} exceeds the window bound {bound}")))?;
        let dom: Vec<LatticePoint> = top.box_points();
        let p = self.factor.rank;
        let src: Vec<CMat> = dom.iter().map(|s| self.factor.kappa(s).expect("in window")).collect();
        let dst: Vec<CMat> = dom.iter().map(|s| self.factor.kappa(&s.add(u)).expect("in window")).collect();
        let (cs, ds) = (linalg::hstack(p, &src), linalg::hstack(p, &dst));
        let cp = pinv(&cs, RANK_CUTOFF);
        Ok((&ds * &cp, &cs * cp))
    }

    /// Domain of `Vₛ`: points `t` with `s+t ≤ bound`.
    fn domain_points(s: &LatticePoint, bound: &LatticePoint) -> Vec<LatticePoint> {
        bound.checked_sub(s).map(|b| b.box_points()).unwrap_or_default()
    }

    fn stack(&self, pts: &[LatticePoint]) -> CMat {
        let blocks: Vec<CMat> = pts.iter().map(|t| self.gamma[t].clone()).collect();
        linalg::hstack(self.k_dim(), &blocks)
    }

    /// Orthonormal basis of `span{γₜ : s+t ≤ bound}`.
    fn domain_basis(&self, s: &LatticePoint, bound: &LatticePoint) -> CMat {
        range_basis(&self.stack(&Self::domain_points(s, bound)), RANK_CUTOFF)
    }

    fn solve(&self, domain: &CMat, target: &CMat, context: String) -> Result<CMat> {
        let v = target * pinv(domain, RANK_CUTOFF);
        let residual = op_norm(&(&v * domain - target));
        let allowed = self.tol.well_defined * op_norm(target).max(1.0);
        if residual > allowed {
            return Err(DilationError::NotWellDefined {
                context,
                residual,
                tolerance: allowed,
            });
        }
        Ok(v)
    }

    fn assemble_v0(&self) -> Result<Vec<CMat>> {
        let space = self.space().clone();
        let alg = space.rep().system().algebra().clone();
        let domain = self.stack(&self.points);
        (0..alg.dim())
            .map(|p| {
                let blocks = space.a_action_blocks(&alg.basis_element(p))?;
                let target: Vec<CMat> = self
                    .points
                    .iter()
                    .map(|s| &self.gamma[s] * &blocks[space.block_index(s).expect("in box")])
                    .collect();
                self.solve(&domain, &linalg::hstack(self.k_dim(), &target), format!("V0 on basis element {p}"))
            })
            .collect()
    }

    /// `V₀(a)`.
    pub fn build_v0(&self, a: &AlgebraElement) -> CMat {
        combine(&self.v0, a.coords(), self.k_dim())
    }

    /// `J_{x,t}`: block `t` of `𝓗_L` to block `s+t`, `ξ ↦ x⊗ξ`, for the
    /// fiber basis vector `x = b_q` of `X(s)`.
    fn tensor_block(&self, s: &LatticePoint, q: usize, t: &LatticePoint) -> Result<CMat> {
        let rep = self.space().rep().clone();
        let d = self.d();
        let st = s.add(t);
        let target = rep.localized(&st)?;
        if t.is_zero() {
            let mut e = CMat::zeros(rep.system().fiber_dim(s), 1);
            e[(q, 0)] = linalg::re(1.0);
            return Ok(target.space.factor() * kron(&e, &linalg::identity(d)));
        }
        let mult = rep.system().multiplication(s, t)?;
        let dt = rep.system().fiber_dim(t);
        let raw = kron(&mult.raw.columns(q * dt, dt).into_owned(), &linalg::identity(d));
        descend_map(&raw, &rep.localized(t)?.space, &target.space, rep.tolerance())
    }

    fn assemble_vs(&self, s: &LatticePoint) -> Result<Vec<CMat>> {
        let dom = Self::domain_points(s, &self.gen_bound);
        let domain = self.stack(&dom);
        let ds = self.space().rep().system().fiber_dim(s);
        (0..ds)
            .map(|q| {
                let blocks = dom
                    .iter()
                    .map(|t| Ok(&self.gamma[&s.add(t)] * self.tensor_block(s, q, t)?))
                    .collect::<Result<Vec<_>>>()?;
                self.solve(&domain, &linalg::hstack(self.k_dim(), &blocks), format!("V at {s}, basis vector {q}"))
            })
            .collect()
    }

    /// `V_s(b_q)` for every fiber basis vector `b_q`; zero off the domain.
    pub fn vs_basis(&self, s: &LatticePoint) -> Result<Arc<Vec<CMat>>> {
        if !s.le(&self.gen_bound) {
            return Err(DilationError::invalid(format!(
                "{s} lies outside the generating box {}",
                self.gen_bound
            )));
        }
        if s.is_zero() {
            return Ok(Arc::new(self.v0.clone()));
        }
        if let Some(v) = self.vs.read().expect("vs cache").get(s) {
            return Ok(v.clone());
        }
        let built = Arc::new(self.assemble_vs(s)?);
        Ok(self.vs.write().expect("vs cache").entry(s.clone()).or_insert(built).clone())
    }

    /// Builds `V_s` for every generating point in parallel.
    pub fn precompute(&self) -> Result<()> {
        let r: Vec<Result<Arc<Vec<CMat>>>> = self.points.par_iter().map(|s| self.vs_basis(s)).collect();
        r.into_iter().try_for_each(|x| x.map(|_| ()))
    }

    /// `Vₛ(x)` for `x` in fiber coordinates (algebra coordinates at `s = 0`).
    pub fn build_vs(&self, s: &LatticePoint, x: &[C64]) -> Result<CMat> {
        let basis = self.vs_basis(s)?;
        if x.len() != basis.len() {
            return Err(DilationError::invalid(format!(
                "vector has {} coordinates, fiber at {s} has dimension {}",
                x.len(),
                basis.len()
            )));
        }
        Ok(combine(&basis, x, self.k_dim()))
    }

    /// `Ψₛ = [Vₛ(b_q)ι]·Fₛ⁺ : X(s)⊗_σH → K`; `Ψ₀ = ι`.
    fn psi(&self, s: &LatticePoint) -> Result<CMat> {
        if s.is_zero() {
            return Ok(self.iota().clone());
        }
        let basis = self.vs_basis(s)?;
        let cols: Vec<CMat> = basis.iter().map(|v| v * self.iota()).collect();
        let loc = self.space().rep().localized(s)?;
        Ok(linalg::hstack(self.k_dim(), &cols) * loc.space.lift())
    }

    fn t_tilde(&self, s: &LatticePoint) -> Result<CMat> {
        self.space().rep().t_tilde(s)
    }

    /// Items 1–4 of regularity plus the isometry, semigroup and `V₀` checks.
    pub fn verify_regular_dilation(&self) -> Result<Report> {
        self.precompute()?;
        let tol = self.tol;
        let space = self.space().clone();
        let rep = space.rep().clone();
        let alg = rep.system().algebra().clone();
        let iota = self.iota();
        let pk = self.k_dim();
        let guarded = self.guarded_bound();
        let mut report = Report::default();

        // item 1: H reduces V₀ and V₀|_H = σ
        let mut item1 = 0.0f64;
        for (p, v) in self.v0.iter().enumerate() {
            let sa = &rep.sigma().images()[p];
            item1 = item1
                .max(op_norm(&(v * iota - iota * sa)))
                .max(op_norm(&(iota.adjoint() * v - sa * iota.adjoint())));
        }
        report.push("regular_item1", item1, tol.weak);

        // item 2: Ψ_{s−}ᴴΨ_{s+} = T̃_{s−}ᴴT̃_{s+} for disjoint supports
        let gpts = guarded.box_points();
        let psis: HashMap<LatticePoint, CMat> = self
            .points
            .iter()
            .map(|s| Ok((s.clone(), self.psi(s)?)))
            .collect::<Result<_>>()?;
        let mut item2 = 0.0f64;
        for a in &gpts {
            for b in &gpts {
                if a.coords().iter().zip(b.coords()).any(|(x, y)| *x > 0 && *y > 0) {
                    continue;
                }
                let lhs = psis[a].adjoint() * &psis[b];
                let rhs = self.t_tilde(a)?.adjoint() * self.t_tilde(b)?;
                item2 = item2.max(op_norm(&(lhs - rhs)));
            }
        }
        report.push("regular_item2", item2, tol.weak);

        // item 3: the vectors Vₛ(x)ιh span K
        let mut item3 = 0.0f64;
        for s in &self.points {
            item3 = item3.max(op_norm(&(&psis[s] - &self.gamma[s])));
        }
        let all: Vec<CMat> = self.points.iter().map(|s| psis[s].clone()).collect();
        if linalg::numerical_rank(&linalg::hstack(pk, &all), RANK_CUTOFF) != pk {
            item3 = f64::INFINITY;
        }
        report.push("regular_item3", item3, tol.weak);

        // item 4: P_H Vₛ(x) vanishes on K ⊖ H
        let proj = linalg::identity(pk) - iota * iota.adjoint();
        let mut item4 = 0.0f64;
        for s in gpts.iter().filter(|s| !s.is_zero()) {
            let dom = self.domain_basis(s, &guarded);
            let right = &proj * dom;
            for v in self.vs_basis(s)?.iter() {
                item4 = item4.max(op_norm(&(iota.adjoint() * v * &right)));
            }
        }
        report.push("regular_item4", item4, tol.adjoint);

        // Vₛ(x)ᴴVₛ(y) = V₀(⟨x,y⟩) on the domain
        let mut iso = 0.0f64;
        let mut cov = 0.0f64;
        for s in self.points.iter().filter(|s| !s.is_zero()) {
            let dom = self.domain_basis(s, &self.gen_bound);
            let vb = self.vs_basis(s)?;
            let fiber = rep.system().fiber(s);
            for (q, vq) in vb.iter().enumerate() {
                for (r, vr) in vb.iter().enumerate() {
                    let g = self.build_v0(&fiber.correspondence.gram(q, r));
                    iso = iso.max(op_norm(&(dom.adjoint() * (vq.adjoint() * vr - g) * &dom)));
                }
            }
            // covariance: Vₛ(x·a) = Vₛ(x)V₀(a), Vₛ(a·x) = V₀(a)Vₛ(x)
            for x in probes(vb.len()) {
                let vx = combine(&vb, x.as_slice(), pk);
                for p in 0..alg.dim() {
                    let a = alg.basis_element(p);
                    let xa = fiber.correspondence.right(&a) * &x;
                    let ax = fiber.correspondence.left(&a) * &x;
                    let r1 = (combine(&vb, xa.as_slice(), pk) - &vx * &self.v0[p]) * &dom;
                    let r2 = (combine(&vb, ax.as_slice(), pk) - &self.v0[p] * &vx) * &dom;
                    cov = cov.max(op_norm(&r1)).max(op_norm(&r2));
                }
            }
        }
        report.push("V_isometry", iso, tol.weak);

        // V_{s+t}(U(x⊗y)) = Vₛ(x)Vₜ(y) on the domain of V_{s+t}
        let mut semi = 0.0f64;
        for st in &self.points {
            let dom = self.domain_basis(st, &self.gen_bound);
            for s in st.box_points() {
                let t = st.checked_sub(&s).expect("s ≤ s+t");
                if s.is_zero() || t.is_zero() {
                    continue;
                }
                let mult = rep.system().multiplication(&s, &t)?;
                let (vsb, vtb) = (self.vs_basis(&s)?, self.vs_basis(&t)?);
                for x in probes(vsb.len()) {
                    for y in probes(vtb.len()) {
                        let z = &mult.raw * kron_vec(&x, &y);
                        let lhs = self.build_vs(st, z.as_slice())?;
                        let rhs = combine(&vsb, x.as_slice(), pk) * combine(&vtb, y.as_slice(), pk);
                        semi = semi.max(op_norm(&((lhs - rhs) * &dom)));
                    }
                }
            }
        }
        report.push("V_semigroup", semi, tol.weak);

        // V₀ is a unital *-homomorphism and Vₛ is A-bilinear
        let mut hom = cov;
        for p in 0..alg.dim() {
            for q in 0..alg.dim() {
                let prod = match alg.basis_product(p, q) {
                    Some(r) => self.v0[r].clone(),
                    None => linalg::zeros(pk, pk),
                };
                hom = hom.max(op_norm(&(prod - &self.v0[p] * &self.v0[q])));
            }
            hom = hom.max(op_norm(&(self.v0[p].adjoint() - &self.v0[alg.basis_adjoint(p)])));
        }
        hom = hom.max(op_norm(&(self.build_v0(&alg.unit()) - linalg::identity(pk))));
        report.push("V0_star_hom", hom, tol.weak);
        Ok(report)
    }

    /// `‖Ṽ_bᴴṼ_a − (I⊗Ṽ_a)(t⊗I_K)(I⊗Ṽ_bᴴ)‖` over `a = e_j(s_j)`,
    /// `b = e_k(s_k)`, evaluated on `x⊗ξ` with `ξ` a guarded generating
    /// vector. Returns `None` when no probe fits in the guarded box.
    pub fn verify_doubly_commuting_v(&self) -> Result<Option<f64>> {
        self.precompute()?;
        let rep = self.space().rep().clone();
        let sys = rep.system().clone();
        let pk = self.k_dim();
        let k = self.k();
        let guarded = self.guarded_bound();
        let v0rep = AlgebraRepresentation::new(sys.algebra().clone(), pk, self.v0.clone())?;

        let mut cases = Vec::new();
        for j in 0..k {
            for l in 0..k {
                if j == l {
                    continue;
                }
                for sj in 1..=guarded.get(j) {
                    for sl in 1..=guarded.get(l) {
                        let a = LatticePoint::axis(k, j, sj);
                        let b = LatticePoint::axis(k, l, sl);
                        if let Some(top) = guarded.checked_sub(&a.add(&b)) {
                            cases.push((a, b, top));
                        }
                    }
                }
            }
        }
        if cases.is_empty() {
            return Ok(None);
        }
        let mut locs = HashMap::new();
        for (a, b, _) in &cases {
            for s in [a, b] {
                if !locs.contains_key(s) {
                    let loc = sys.fiber(s).correspondence.localize(&v0rep, rep.tolerance())?;
                    locs.insert(s.clone(), loc);
                }
            }
        }
        let mut worst = 0.0f64;
        for (a, b, top) in &cases {
            let (la, lb) = (&locs[a], &locs[b]);
            let (da, db) = (sys.fiber_dim(a), sys.fiber_dim(b));
            let va_raw = linalg::hstack(pk, &self.vs_basis(a)?);
            let vb_raw = linalg::hstack(pk, &self.vs_basis(b)?);
            let vb_q = &vb_raw * lb.lift();
            let rhs = flip_sandwich(
                pk,
                da,
                db,
                la,
                lb,
                &va_raw,
                &(lb.lift() * vb_q.adjoint()),
                &rep.raw_flip(a, b)?,
            );
            let lhs = vb_q.adjoint() * &va_raw * la.lift();
            let xi = self.domain_basis(&LatticePoint::zero(k), top);
            let inputs = range_basis(&(la.factor() * kron(&linalg::identity(da), &xi)), RANK_CUTOFF);
            worst = worst.max(op_norm(&((rhs - lhs) * inputs)));
        }
        Ok(Some(worst))
    }
}

fn combine(basis: &[CMat], x: &[C64], n: usize) -> CMat {
    basis
        .iter()
        .zip(x)
        .fold(linalg::zeros(n, n), |acc, (m, z)| acc + m * *z)
}

fn kron_vec(x: &CVec, y: &CVec) -> CVec {
    CVec::from_fn(x.len() * y.len(), |i, _| x[i / y.len()] * y[i % y.len()])
}

/// Deterministic probe vectors: the first two basis vectors and one generic
/// combination.
fn probes(d: usize) -> Vec<CVec> {
    let mut out: Vec<CVec> = (0..d.min(2))
        .map(|i| CVec::from_fn(d, |j, _| linalg::re(if i == j { 1.0 } else { 0.0 })))
        .collect();
    if d > 0 {
        let g = CVec::from_fn(d, |j, _| {
            let t = j as f64 + 1.0;
            c((0.9 * t).cos(), (0.7 * t).sin()) / t
        });
        out.push(g);
    }
    out
}

/// Distance between two minimal dilations of the same kernel: the Gram
/// mismatch of their generating vectors on the common window, plus the
/// defect of the induced intertwiner. Infinite if the ranks differ.
pub fn compare_minimal_dilations(a: &KolmogorovFactor, b: &KolmogorovFactor) -> f64 {
    let common: Vec<&LatticePoint> = a.points().iter().filter(|s| b.points().contains(s)).collect();
    let ka: Vec<CMat> = common.iter().map(|s| a.kappa(s).expect("common point")).collect();
    let kb: Vec<CMat> = common.iter().map(|s| b.kappa(s).expect("common point")).collect();
    if ka.first().map(|m| m.ncols()) != kb.first().map(|m| m.ncols()) {
        return f64::INFINITY;
    }
    let (ga, gb) = (linalg::hstack(a.rank, &ka), linalg::hstack(b.rank, &kb));
    // ΓΓᴴ is small and shares its nonzero spectrum with the Gram of the
    // generating vectors
    let (gga, ggb) = (linalg::matmul(&ga, &ga.adjoint()), linalg::matmul(&gb, &gb.adjoint()));
    let full = common.len() == a.points().len() && common.len() == b.points().len();
    let rank = |f: &KolmogorovFactor, g: &CMat| {
        if full {
            f.rank
        } else {
            crate::kernel::pivoted_cholesky(g, RANK_CUTOFF).ncols()
        }
    };
    let (ra, rb) = (rank(a, &gga), rank(b, &ggb));
    if ra != rb {
        return f64::INFINITY;
    }
    let inv_a = if ra == gga.nrows() {
        match linalg::definite_cholesky(&gga) {
            Some(ch) => ch.inverse(),
            None => gram_pinv(&gga),
        }
    } else {
        gram_pinv(&gga)
    };
    let gram = max_abs(&(linalg::matmul(&ga.adjoint(), &ga) - linalg::matmul(&gb.adjoint(), &gb)));
    let w = linalg::matmul(&gb, &linalg::matmul(&ga.adjoint(), &inv_a));
    gram.max(max_abs(&(linalg::matmul(&w, &ga) - gb)))
}

/// Pseudo-inverse of a positive semidefinite matrix, keeping eigenvalues
/// above `RANK_CUTOFF` relative to the largest.
fn gram_pinv(g: &CMat) -> CMat {
    let e = linalg::hermitian_eigen(g);
    let top = e.values.first().copied().unwrap_or(0.0);
    let mut inv = linalg::zeros(g.nrows(), g.ncols());
    for (i, &l) in e.values.iter().enumerate() {
        if top > 0.0 && l > RANK_CUTOFF * top {
            let v = e.vectors.column(i);
            inv += &v * v.adjoint() * linalg::re(1.0 / l);
        }
    }
    inv
}

/// The hat-level checks on `𝓗_L`: semigroup law, the technology identity
/// and, optionally, doubly commuting.
pub fn hat_checks(space: &TruncatedFock, tol: &DilationTolerances, doubly_commuting: bool) -> Result<Report> {
    let pts = space.bound().box_points();
    let pairs: Vec<(LatticePoint, LatticePoint)> = pts
        .iter()
        .flat_map(|s| pts.iter().map(move |t| (s.clone(), t.clone())))
        .collect();
    let vals: Vec<Result<f64>> = pairs.par_iter().map(|(s, t)| space.check_hat_semigroup(s, t)).collect();
    let semi = vals.into_iter().try_fold(0.0f64, |m, v| Ok::<_, DilationError>(m.max(v?)))?;

    let d = space.h_dim();
    let h = CVec::from_fn(d, |j, _| c(1.0 / (j as f64 + 1.0), 0.3 * j as f64));
    let mut tech = 0.0f64;
    for s in pts.iter().filter(|s| !s.is_zero()) {
        for x in probes(space.rep().system().fiber_dim(s)) {
            tech = tech.max(space.check_technology(s, x.as_slice(), &h)?);
        }
    }
    let mut report = Report::default();
    report.push("hat_semigroup", semi, tol.exact);
    report.push("technology", tech, tol.exact);
    if doubly_commuting {
        let k = space.bound().k();
        let mut dc = 0.0f64;
        for j in 0..k {
            for l in 0..k {
                if j == l {
                    continue;
                }
                for sj in 1..=space.bound().get(j) {
                    for sl in 1..=space.bound().get(l) {
                        dc = dc.max(space.hat_doubly_commuting(j, l, sj, sl)?);
                    }
                }
            }
        }
        report.push("doubly_commuting_hat", dc, tol.exact);
    }
    Ok(report)
}

/// Gram restricted to the generating vectors `δₛ·h`, `s ≤ min(M, L)`: the
/// matrix `[⟨ι h_i, κ-image⟩]` used to compare with a classical kernel.
pub fn diagonal_generating_gram(window: &KernelWindow) -> CMat {
    let space = window.space();
    let d = space.h_dim();
    let pts = window.bound().meet(space.bound()).box_points();
    let n = pts.len();
    let mut out = linalg::zeros(n * d, n * d);
    for (i, t) in pts.iter().enumerate() {
        for (j, s) in pts.iter().enumerate() {
            let blk = window.block(t, s).expect("window point");
            let (bi, bj) = (space.block_index(t).expect("box"), space.block_index(s).expect("box"));
            let sub = blk.view((space.offset(bi), space.offset(bj)), (space.block_dim(bi), space.block_dim(bj)));
            if sub.nrows() == d && sub.ncols() == d {
                out.view_mut((i * d, j * d), (d, d)).copy_from(&sub);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CStarAlgebra;
    use crate::correspondence::Correspondence;
    use crate::linalg::re;
    use crate::prodsys::ProductSystem;
    use crate::representation::CCRepresentation;
    use std::collections::BTreeMap;

    fn lp(v: &[usize]) -> LatticePoint {
        LatticePoint::new(v.to_vec())
    }

    fn scalar_space(ts: &[CMat], l: &[usize]) -> Arc<TruncatedFock> {
        let k = ts.len();
        let d = ts[0].nrows();
        let mut flips = BTreeMap::new();
        for i in 0..k {
            for j in i + 1..k {
                flips.insert((i, j), linalg::identity(1));
            }
        }
        let sys = Arc::new(
            ProductSystem::new(CStarAlgebra::scalars(), vec![Correspondence::standard(1); k], flips, 1e-10).unwrap(),
        );
        let rep = Arc::new(
            CCRepresentation::new(sys, AlgebraRepresentation::scalar(d), ts.iter().map(|t| vec![t.clone()]).collect(), 1e-10)
                .unwrap(),
        );
        Arc::new(TruncatedFock::new(rep, lp(l)).unwrap())
    }

    fn dilation(space: Arc<TruncatedFock>, m: &[usize], backend: FactorBackend) -> MinimalDilation {
        let w = Arc::new(KernelWindow::new(space, lp(m)).unwrap());
        MinimalDilation::new(w, backend, 1, DilationTolerances::default()).unwrap()
    }

    fn s1(x: f64) -> CMat {
        CMat::from_element(1, 1, re(x))
    }

    #[test]
    fn scalar_half_item2_value() {
        let d = dilation(scalar_space(&[s1(0.5)], &[3]), &[3], FactorBackend::Eigen);
        let rep = d.verify_regular_dilation().unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        // ⟨V₂ι1, ιι⟩ equals T² = 0.25
        let v2 = d.build_vs(&lp(&[2]), &[re(1.0)]).unwrap();
        let val = (d.iota().adjoint() * v2 * d.iota())[(0, 0)];
        assert!((val.re - 0.25).abs() < 1e-12 && val.im.abs() < 1e-12);
    }

    /// Schäffer oracle: for a single contraction T the minimal isometric
    /// dilation satisfies ⟨Vⁿh, Vᵐg⟩ = ⟨T^{n−m}h, g⟩ for n ≥ m.
    #[test]
    fn single_contraction_matches_schaffer() {
        let t = CMat::from_row_slice(2, 2, &[re(0.3), c(0.2, 0.1), re(-0.4), re(0.5)]);
        let d = dilation(scalar_space(&[t.clone()], &[3]), &[3], FactorBackend::Eigen);
        let v1 = d.build_vs(&lp(&[1]), &[re(1.0)]).unwrap();
        let iota = d.iota();
        let mut vn = iota.clone();
        let mut pows = vec![iota.clone()];
        for _ in 0..3 {
            vn = &v1 * vn;
            pows.push(vn.clone());
        }
        let mut tp = linalg::identity(2);
        for n in 0..=3usize {
            // ⟨Vⁿ·, ι·⟩ = Tⁿ
            assert!(op_norm(&(iota.adjoint() * &pows[n] - &tp)) < 1e-10);
            tp = &t * tp;
        }
        assert!(op_norm(&(v1.adjoint() * &v1 * d.domain_basis(&lp(&[1]), &lp(&[3])) - d.domain_basis(&lp(&[1]), &lp(&[3])))) < 1e-9);
    }

    #[test]
    fn backends_agree() {
        let z = CMat::from_row_slice(2, 2, &[re(0.3), re(0.4), re(0.1), re(-0.2)]);
        let sp = scalar_space(&[z.clone(), &z * &z], &[2, 2]);
        let a = dilation(sp.clone(), &[2, 2], FactorBackend::Eigen);
        let b = dilation(sp, &[2, 2], FactorBackend::PivotedCholesky);
        assert!(compare_minimal_dilations(a.factor(), b.factor()) < 1e-9);
        assert_eq!(a.k_dim(), b.k_dim());
    }

    #[test]
    fn doubly_commuting_scalar_pair_verifies() {
        let sp = scalar_space(&[s1(0.6), s1(0.8)], &[3, 3]);
        let rep_ns = sp.rep().brehmer_min_over_box(&lp(&[3, 3])).unwrap();
        assert!(rep_ns.unwrap().min_eigenvalue > 0.0);
        let d = dilation(sp.clone(), &[3, 3], FactorBackend::Eigen);
        let rep = d.verify_regular_dilation().unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        let dc = d.verify_doubly_commuting_v().unwrap().unwrap();
        assert!(dc < 1e-6, "{dc}");
        assert!(hat_checks(&sp, &DilationTolerances::default(), true).unwrap().passed());
    }

    #[test]
    fn hat_v_is_isometric_on_its_domain() {
        let d = dilation(scalar_space(&[s1(0.6), s1(0.8)], &[2, 2]), &[2, 2], FactorBackend::Eigen);
        let (v, proj) = d.hat_v(&lp(&[1, 0])).unwrap();
        assert!(op_norm(&(v.adjoint() * &v - &proj)) < 1e-9);
        assert!(d.hat_v(&lp(&[3, 0])).is_err());
        assert!(d.build_vs(&lp(&[3, 0]), &[re(1.0)]).is_err());
    }
}
