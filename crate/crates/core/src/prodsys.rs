//! Product systems over ℕᵏ presented by generator correspondences and
//! flip isomorphisms.
//!
//! Fibers are realized as normal-ordered tensor words `E₁^{⊗s₁}⊗…⊗E_k^{⊗s_k}`
//! with null vectors removed. Every fiber keeps a lift into, and a
//! projection from, the raw word space (the plain tensor product of the
//! generators' raw coordinate spaces), which is where flips act.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use crate::algebra::CStarAlgebra;
use crate::correspondence::{Correspondence, Quotient};
use crate::error::{DilationError, Result};
use crate::lattice::LatticePoint;
use crate::linalg::{self, kron, max_abs, op_norm, CMat};
use crate::report::Report;

/// `X(s)` together with its relation to the raw word space.
#[derive(Debug)]
pub struct Fiber {
    pub point: LatticePoint,
    pub correspondence: Correspondence,
    /// Raw word coordinates of each fiber basis vector (columns).
    pub lift: CMat,
    /// Quotient map from raw word coordinates onto fiber coordinates.
    pub projection: CMat,
    /// Lift from the last construction step: generator raw coordinates for
    /// `eⱼ`, raw `X(s−eⱼ)⊗X(eⱼ)` coordinates otherwise.
    pub step_lift: CMat,
    pub warnings: Vec<String>,
}

impl Fiber {
    pub fn dim(&self) -> usize {
        self.correspondence.dim()
    }
}

/// Multiplication data for a pair `(s, t)`.
#[derive(Debug)]
pub struct Multiplication {
    /// `dim X(s+t) × (dim X(s)·dim X(t))`: the multiplication on raw
    /// coordinates of the algebraic tensor `X(s)⊗X(t)`.
    pub raw: CMat,
    /// Square matrix from quotient coordinates of `X(s)⊗X(t)` onto `X(s+t)`.
    pub iso: CMat,
    pub quotient: Quotient,
    /// Right inverse of `raw`: raw coordinates of `U⁻¹(z)`.
    pub inverse_raw: CMat,
}

type MultKey = (LatticePoint, LatticePoint);

#[derive(Debug)]
pub struct ProductSystem {
    algebra: CStarAlgebra,
    generators: Vec<Correspondence>,
    flips: BTreeMap<(usize, usize), CMat>,
    /// For `a > b`: raw map `E_a⊗E_b → E_b⊗E_a`, the inverse of `t_{ba}`.
    swaps: HashMap<(usize, usize), CMat>,
    tol: f64,
    report: Report,
    fibers: RwLock<HashMap<LatticePoint, Arc<Fiber>>>,
    mults: RwLock<HashMap<MultKey, Arc<Multiplication>>>,
}

fn pair_label(i: usize, j: usize) -> String {
    format!("{},{}", i + 1, j + 1)
}

/// Applies `swap` to tensor positions `pos, pos+1` of the row index of `x`,
/// whose rows are the raw word space with factor dimensions `dims`.
fn apply_adjacent(x: &CMat, dims: &[usize], pos: usize, swap: &CMat) -> CMat {
    let before: usize = dims[..pos].iter().product();
    let pair = dims[pos] * dims[pos + 1];
    let after: usize = dims[pos + 2..].iter().product();
    debug_assert_eq!(swap.shape(), (pair, pair));
    let ncols = x.ncols();
    let mut out = linalg::zeros(x.nrows(), ncols);
    for b in 0..before {
        for rp in 0..pair {
            for r in 0..pair {
                let coef = swap[(rp, r)];
                if coef.norm_sqr() == 0.0 {
                    continue;
                }
                for a in 0..after {
                    let dst = (b * pair + rp) * after + a;
                    let src = (b * pair + r) * after + a;
                    for col in 0..ncols {
                        out[(dst, col)] += coef * x[(src, col)];
                    }
                }
            }
        }
    }
    out
}

impl ProductSystem {
    /// Validates generators and flips and assembles the system.
    ///
    /// `flips[(i, j)]` for `i < j` (0-based) maps raw `Eᵢ⊗Eⱼ` coordinates
    /// to raw `Eⱼ⊗Eᵢ` coordinates.
    pub fn new(
        algebra: CStarAlgebra,
        generators: Vec<Correspondence>,
        flips: BTreeMap<(usize, usize), CMat>,
        tol: f64,
    ) -> Result<Self> {
        let k = generators.len();
        if k == 0 {
            return Err(DilationError::invalid("a product system needs at least one generator"));
        }
        let mut report = Report::default();
        for (i, e) in generators.iter().enumerate() {
            if e.algebra() != &algebra {
                return Err(DilationError::invalid(format!("generator {} is over a different algebra", i + 1)));
            }
            let rep = e.validate(tol);
            if let Some(bad) = rep.failures().next() {
                return Err(DilationError::invalid(format!(
                    "generator {}: {} residual {:.3e}",
                    i + 1,
                    bad.name,
                    bad.residual
                )));
            }
            for c in rep.checks {
                report.push(format!("generator{}_{}", i + 1, c.name), c.residual, c.tolerance);
            }
        }
        if let Some(&(i, j)) = flips.keys().find(|&&(i, j)| i >= j || j >= k) {
            return Err(DilationError::InvalidFlip {
                pair: pair_label(i, j),
                reason: format!("flip keys must satisfy i < j ≤ {k}"),
            });
        }

        let mut swaps = HashMap::new();
        for i in 0..k {
            for j in i + 1..k {
                let t = flips.get(&(i, j)).ok_or_else(|| DilationError::InvalidFlip {
                    pair: pair_label(i, j),
                    reason: "missing".into(),
                })?;
                let inverse = Self::validate_flip(&generators, i, j, t, tol, &mut report)?;
                swaps.insert((j, i), inverse);
            }
        }

        let system = ProductSystem {
            algebra,
            generators,
            flips,
            swaps,
            tol,
            report,
            fibers: RwLock::new(HashMap::new()),
            mults: RwLock::new(HashMap::new()),
        };
        let mut braid = Report::default();
        for i in 0..k {
            for j in i + 1..k {
                for l in j + 1..k {
                    let r = system.braid_residual(i, j, l);
                    if r > tol {
                        return Err(DilationError::IncoherentFlips {
                            triple: format!("{},{},{}", i + 1, j + 1, l + 1),
                            residual: r,
                            tolerance: tol,
                        });
                    }
                    braid.push(format!("braid_{}_{}_{}", i + 1, j + 1, l + 1), r, tol);
                }
            }
        }
        let mut system = system;
        system.report.extend(braid);
        Ok(system)
    }

    /// Checks one flip and returns its inverse in raw coordinates.
    fn validate_flip(
        generators: &[Correspondence],
        i: usize,
        j: usize,
        t: &CMat,
        tol: f64,
        report: &mut Report,
    ) -> Result<CMat> {
        let (ei, ej) = (&generators[i], &generators[j]);
        let label = pair_label(i, j);
        let shape = (ej.dim() * ei.dim(), ei.dim() * ej.dim());
        if t.shape() != shape {
            return Err(DilationError::InvalidFlip {
                pair: label,
                reason: format!("expected {}×{} matrix, got {}×{}", shape.0, shape.1, t.nrows(), t.ncols()),
            });
        }
        let src = ei.raw_interior_tensor(ej)?;
        let dst = ej.raw_interior_tensor(ei)?;

        let iso = max_abs(&(dst.pulled_back_embedded_gram(t) - src.embedded_gram()));
        report.push(format!("flip_{}_{}_isometric", i + 1, j + 1), iso, tol);
        if iso > tol {
            return Err(DilationError::InvalidFlip {
                pair: label,
                reason: format!("does not preserve the inner product (residual {iso:.3e})"),
            });
        }

        let f = dst.seminorm_factor(tol);
        let mut intertwine = 0.0f64;
        for p in 0..src.algebra().dim() {
            let d = t * &src.right_action()[p] - &dst.right_action()[p] * t;
            intertwine = intertwine.max(op_norm(&(&f * d)));
            let d = t * &src.left_action()[p] - &dst.left_action()[p] * t;
            intertwine = intertwine.max(op_norm(&(&f * d)));
        }
        report.push(format!("flip_{}_{}_bimodule", i + 1, j + 1), intertwine, tol);
        if intertwine > tol {
            return Err(DilationError::InvalidFlip {
                pair: label,
                reason: format!("does not intertwine the actions (residual {intertwine:.3e})"),
            });
        }

        let (_, qs) = src.reduce_null(tol);
        let (_, qd) = dst.reduce_null(tol);
        let q = &qd.surjection * t * &qs.lift;
        let inv = linalg::inverse(&q);
        let inv = inv.ok_or_else(|| DilationError::InvalidFlip {
            pair: pair_label(i, j),
            reason: format!("not invertible on the balanced tensor ({}×{} on quotients)", q.nrows(), q.ncols()),
        })?;
        Ok(&qs.lift * inv * &qd.surjection)
    }

    /// Disagreement of the two flip routes reordering `Eᵢ⊗Eⱼ⊗E_l` into
    /// `E_l⊗Eⱼ⊗Eᵢ`, measured modulo null vectors of the target.
    fn braid_residual(&self, i: usize, j: usize, l: usize) -> f64 {
        let m = |a: usize| self.generators[a].dim();
        let flip = |a: usize, b: usize| &self.flips[&(a, b)];
        let start = linalg::identity(m(i) * m(j) * m(l));
        // (i,j,l) → (i,l,j) → (l,i,j) → (l,j,i)
        let mut a = apply_adjacent(&start, &[m(i), m(j), m(l)], 1, flip(j, l));
        a = apply_adjacent(&a, &[m(i), m(l), m(j)], 0, flip(i, l));
        a = apply_adjacent(&a, &[m(l), m(i), m(j)], 1, flip(i, j));
        // (i,j,l) → (j,i,l) → (j,l,i) → (l,j,i)
        let mut b = apply_adjacent(&start, &[m(i), m(j), m(l)], 0, flip(i, j));
        b = apply_adjacent(&b, &[m(j), m(i), m(l)], 1, flip(i, l));
        b = apply_adjacent(&b, &[m(j), m(l), m(i)], 0, flip(j, l));
        let target = self.generators[l]
            .raw_interior_tensor(&self.generators[j])
            .and_then(|x| x.raw_interior_tensor(&self.generators[i]))
            .expect("generators share the algebra");
        op_norm(&(target.seminorm_factor(self.tol) * (a - b)))
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Correspondence] {
        &self.generators
    }

    pub fn flip(&self, i: usize, j: usize) -> Option<&CMat> {
        self.flips.get(&(i, j))
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Residuals recorded while validating generators, flips and braids.
    pub fn report(&self) -> &Report {
        &self.report
    }

    fn swap(&self, a: usize, b: usize) -> &CMat {
        if a < b {
            &self.flips[&(a, b)]
        } else {
            &self.swaps[&(a, b)]
        }
    }

    pub fn fiber(&self, s: &LatticePoint) -> Arc<Fiber> {
        assert_eq!(s.k(), self.k(), "lattice point has the wrong rank");
        if let Some(f) = self.fibers.read().expect("fiber cache").get(s) {
            return f.clone();
        }
        let fiber = Arc::new(self.build_fiber(s));
        self.fibers
            .write()
            .expect("fiber cache")
            .entry(s.clone())
            .or_insert(fiber)
            .clone()
    }

    fn build_fiber(&self, s: &LatticePoint) -> Fiber {
        let Some(j) = s.last_nonzero() else {
            let n = self.algebra.dim();
            return Fiber {
                point: s.clone(),
                correspondence: Correspondence::algebra_itself(&self.algebra),
                lift: linalg::identity(n),
                projection: linalg::identity(n),
                step_lift: linalg::identity(n),
                warnings: Vec::new(),
            };
        };
        let unit = LatticePoint::unit(self.k(), j);
        if *s == unit {
            let (c, q) = self.generators[j].reduce_null(self.tol);
            return Fiber {
                point: s.clone(),
                correspondence: c,
                lift: q.lift.clone(),
                projection: q.surjection,
                step_lift: q.lift,
                warnings: q.warning.into_iter().collect(),
            };
        }
        let prev = self.fiber(&s.checked_sub(&unit).expect("j is in the support"));
        let last = self.fiber(&unit);
        let raw = prev
            .correspondence
            .raw_interior_tensor(&last.correspondence)
            .expect("fibers share the algebra");
        let (c, q) = raw.reduce_null(self.tol);
        let mut warnings = prev.warnings.clone();
        warnings.extend(q.warning.clone());
        Fiber {
            point: s.clone(),
            lift: linalg::matmul(&kron(&prev.lift, &last.lift), &q.lift),
            projection: linalg::matmul(&q.surjection, &kron(&prev.projection, &last.projection)),
            step_lift: q.lift,
            correspondence: c,
            warnings,
        }
    }

    pub fn fiber_dim(&self, s: &LatticePoint) -> usize {
        self.fiber(s).dim()
    }

    /// Multiplication `U_{s,t}` with its quotient data and inverse.
    pub fn multiplication(&self, s: &LatticePoint, t: &LatticePoint) -> Result<Arc<Multiplication>> {
        let key = (s.clone(), t.clone());
        if let Some(m) = self.mults.read().expect("mult cache").get(&key) {
            return Ok(m.clone());
        }
        let m = Arc::new(self.build_multiplication(s, t)?);
        Ok(self
            .mults
            .write()
            .expect("mult cache")
            .entry(key)
            .or_insert(m)
            .clone())
    }

    fn raw_multiplication(&self, s: &LatticePoint, t: &LatticePoint) -> CMat {
        let fs = self.fiber(s);
        let ft = self.fiber(t);
        let n = self.algebra.dim();
        if s.is_zero() {
            // f_p ⊗ y ↦ f_p · y
            let (dt, acts) = (ft.dim(), ft.correspondence.left_action());
            let mut out = linalg::zeros(dt, n * dt);
            for (p, phi) in acts.iter().enumerate() {
                out.columns_mut(p * dt, dt).copy_from(phi);
            }
            return out;
        }
        if t.is_zero() {
            // x ⊗ f_p ↦ x · f_p
            let (ds, acts) = (fs.dim(), fs.correspondence.right_action());
            let mut out = linalg::zeros(ds, ds * n);
            for k in 0..ds {
                for (p, r) in acts.iter().enumerate() {
                    out.set_column(k * n + p, &r.column(k));
                }
            }
            return out;
        }
        let mut word: Vec<usize> = s.word();
        word.extend(t.word());
        let mut x = kron(&fs.lift, &ft.lift);
        // bubble sort into normal order, one adjacent transposition at a time
        let len = word.len();
        for pass in 0..len {
            let mut moved = false;
            for p in 0..len - 1 - pass {
                if word[p] > word[p + 1] {
                    let dims: Vec<usize> = word.iter().map(|&g| self.generators[g].dim()).collect();
                    x = apply_adjacent(&x, &dims, p, self.swap(word[p], word[p + 1]));
                    word.swap(p, p + 1);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        let target = self.fiber(&s.add(t));
        linalg::matmul(&target.projection, &x)
    }

    fn build_multiplication(&self, s: &LatticePoint, t: &LatticePoint) -> Result<Multiplication> {
        let raw = self.raw_multiplication(s, t);
        let fs = self.fiber(s);
        let ft = self.fiber(t);
        let (_, quotient) = fs.correspondence.interior_tensor(&ft.correspondence, self.tol)?;
        let iso = linalg::matmul(&raw, &quotient.lift);
        let inv = linalg::inverse(&iso);
        let inv = inv.ok_or_else(|| DilationError::NotWellDefined {
            context: format!("multiplication {s}·{t} is not invertible ({}×{})", iso.nrows(), iso.ncols()),
            residual: f64::INFINITY,
            tolerance: self.tol,
        })?;
        Ok(Multiplication {
            inverse_raw: linalg::matmul(&quotient.lift, &inv),
            raw,
            iso,
            quotient,
        })
    }

    /// `U_{s,t}` on quotient coordinates.
    pub fn mult_iso(&self, s: &LatticePoint, t: &LatticePoint) -> Result<CMat> {
        Ok(self.multiplication(s, t)?.iso.clone())
    }

    /// How far `U_{s,t}` is from preserving the A-valued inner product.
    pub fn mult_unitarity_residual(&self, s: &LatticePoint, t: &LatticePoint) -> Result<f64> {
        let m = self.multiplication(s, t)?;
        let fs = self.fiber(s);
        let ft = self.fiber(t);
        let (src, _) = fs.correspondence.interior_tensor(&ft.correspondence, self.tol)?;
        let dst = &self.fiber(&s.add(t)).correspondence;
        Ok(max_abs(&(dst.pulled_back_embedded_gram(&m.iso) - src.embedded_gram())))
    }

    /// `‖U_{s+t,r}(U_{s,t}⊗I) − U_{s,t+r}(I⊗U_{t,r})‖` on raw triple tensors,
    /// measured in the norm of `X(s+t+r)`.
    pub fn check_associativity(&self, s: &LatticePoint, t: &LatticePoint, r: &LatticePoint) -> Result<f64> {
        let (ds, dt, dr) = (self.fiber_dim(s), self.fiber_dim(t), self.fiber_dim(r));
        let lhs = &self.multiplication(&s.add(t), r)?.raw * kron(&self.multiplication(s, t)?.raw, &linalg::identity(dr));
        let rhs = &self.multiplication(s, &t.add(r))?.raw * kron(&linalg::identity(ds), &self.multiplication(t, r)?.raw);
        let _ = dt;
        let f = self.fiber(&s.add(t).add(r)).correspondence.seminorm_factor(self.tol);
        Ok(op_norm(&(f * (lhs - rhs))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, re};

    fn swap_matrix(m: usize, n: usize) -> CMat {
        // e_a ⊗ f_b ↦ f_b ⊗ e_a
        let mut s = linalg::zeros(n * m, m * n);
        for a in 0..m {
            for b in 0..n {
                s[(b * m + a, a * n + b)] = re(1.0);
            }
        }
        s
    }

    fn scalar_system(k: usize, dims: &[usize]) -> ProductSystem {
        let gens = dims.iter().map(|&m| Correspondence::standard(m)).collect();
        let mut flips = BTreeMap::new();
        for i in 0..k {
            for j in i + 1..k {
                flips.insert((i, j), swap_matrix(dims[i], dims[j]));
            }
        }
        ProductSystem::new(CStarAlgebra::scalars(), gens, flips, 1e-10).unwrap()
    }

    fn matrix_system(k: usize) -> ProductSystem {
        let a = CStarAlgebra::new(vec![2]).unwrap();
        let e = Correspondence::algebra_itself(&a);
        let mut flips = BTreeMap::new();
        for i in 0..k {
            for j in i + 1..k {
                flips.insert((i, j), multiplication_flip(&a));
            }
        }
        ProductSystem::new(a, vec![e; k], flips, 1e-10).unwrap()
    }

    /// `x ⊗ y ↦ (xy) ⊗ 1` on `M₂ ⊗ M₂`.
    fn multiplication_flip(a: &CStarAlgebra) -> CMat {
        let n = a.dim();
        let unit = a.unit();
        let mut t = linalg::zeros(n * n, n * n);
        for p in 0..n {
            for q in 0..n {
                if let Some(r) = a.basis_product(p, q) {
                    for (u, z) in unit.coords().iter().enumerate() {
                        t[(r * n + u, p * n + q)] += *z;
                    }
                }
            }
        }
        t
    }

    fn lp(v: &[usize]) -> LatticePoint {
        LatticePoint::new(v.to_vec())
    }

    #[test]
    fn zero_fiber_is_the_algebra() {
        let x = matrix_system(1);
        let f = x.fiber(&lp(&[0]));
        assert_eq!(f.dim(), 4);
        assert_eq!(f.correspondence.gram_slices(), Correspondence::algebra_itself(x.algebra()).gram_slices());
    }

    #[test]
    fn scalar_fibers_are_one_dimensional() {
        let x = scalar_system(2, &[1, 1]);
        assert_eq!(x.fiber_dim(&lp(&[1, 1])), 1);
        assert_eq!(x.fiber_dim(&lp(&[3, 2])), 1);
    }

    /// Oracle: iterated interior tensor of M₂ over itself via plain
    /// `interior_tensor` calls, compared against the cached fiber.
    #[test]
    fn matrix_fiber_dimension_three() {
        let x = matrix_system(1);
        let e = Correspondence::algebra_itself(x.algebra());
        let (e2, _) = e.interior_tensor(&e, 1e-10).unwrap();
        let (e3, _) = e2.interior_tensor(&e, 1e-10).unwrap();
        assert_eq!(e3.dim(), 4);
        assert_eq!(x.fiber_dim(&lp(&[3])), 4);
    }

    #[test]
    fn fiber_dims_multiply_for_scalars() {
        let x = scalar_system(2, &[2, 3]);
        for s in lp(&[2, 2]).box_points() {
            let expected = 2usize.pow(s.get(0) as u32) * 3usize.pow(s.get(1) as u32);
            assert_eq!(x.fiber_dim(&s), expected, "{s}");
        }
    }

    #[test]
    fn non_unitary_flip_is_rejected() {
        let gens = vec![Correspondence::standard(2), Correspondence::standard(2)];
        let mut flips = BTreeMap::new();
        flips.insert((0, 1), swap_matrix(2, 2) * re(1.5));
        let err = ProductSystem::new(CStarAlgebra::scalars(), gens, flips, 1e-10).unwrap_err();
        assert!(matches!(err, DilationError::InvalidFlip { .. }), "{err}");
    }

    #[test]
    fn flip_preserves_inner_products_directly() {
        let t = swap_matrix(2, 2);
        let xi = linalg::CVec::from_vec(vec![c(1.0, 0.5), c(0.0, -1.0), c(2.0, 0.0), c(0.3, 0.3)]);
        let eta = linalg::CVec::from_vec(vec![c(-1.0, 0.0), c(0.5, 0.5), c(0.0, 1.0), c(1.0, -2.0)]);
        let lhs = (&t * &xi).dotc(&(&t * &eta));
        assert!((lhs - xi.dotc(&eta)).norm() < 1e-14);
        assert!(scalar_system(2, &[2, 2]).report().passed());
    }

    #[test]
    fn missing_flip_is_rejected() {
        let gens = vec![Correspondence::standard(1), Correspondence::standard(1)];
        assert!(ProductSystem::new(CStarAlgebra::scalars(), gens, BTreeMap::new(), 1e-10).is_err());
    }

    #[test]
    fn mixed_multiplication_is_the_flip() {
        let x = scalar_system(2, &[2, 2]);
        let u = x.mult_iso(&lp(&[0, 1]), &lp(&[1, 0])).unwrap();
        assert!(max_abs(&(&u * u.adjoint() - identity(4))) < 1e-12);
        // f ⊗ e ↦ e ⊗ f
        assert_eq!(u, swap_matrix(2, 2));
        assert!(x.mult_unitarity_residual(&lp(&[1, 1]), &lp(&[0, 1])).unwrap() < 1e-12);
    }

    #[test]
    fn edge_multiplications_are_actions() {
        let x = matrix_system(1);
        let f = x.fiber(&lp(&[1]));
        let u = x.multiplication(&lp(&[0]), &lp(&[1])).unwrap();
        for p in 0..4 {
            assert_eq!(u.raw.columns(p * 4, 4), f.correspondence.left_action()[p]);
        }
        assert!(x.mult_unitarity_residual(&lp(&[0]), &lp(&[2])).unwrap() < 1e-10);
        assert!(x.mult_unitarity_residual(&lp(&[2]), &lp(&[0])).unwrap() < 1e-10);
    }

    #[test]
    fn associativity_holds() {
        let x = matrix_system(2);
        let pts = lp(&[1, 1]).box_points();
        for s in &pts {
            for t in &pts {
                for r in &pts {
                    let res = x.check_associativity(s, t, r).unwrap();
                    assert!(res < 1e-10, "{s} {t} {r}: {res}");
                }
            }
        }
        let y = scalar_system(3, &[1, 2, 1]);
        let e: Vec<LatticePoint> = (0..3).map(|i| LatticePoint::unit(3, i)).collect();
        assert!(y.check_associativity(&e[2], &e[1], &e[0]).unwrap() < 1e-10);
        assert!(y.check_associativity(&e[0], &e[2], &e[1]).unwrap() < 1e-10);
    }

    #[test]
    fn incoherent_flips_are_rejected() {
        // each flip is a swap after a local unitary on the shared middle
        // factor; X and Z anticommute, so the two routes differ by a sign
        let gens = vec![Correspondence::standard(2), Correspondence::standard(2), Correspondence::standard(2)];
        let x = CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]);
        let z = CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]);
        let mut flips = BTreeMap::new();
        flips.insert((0, 1), swap_matrix(2, 2) * kron(&identity(2), &x));
        flips.insert((1, 2), swap_matrix(2, 2) * kron(&z, &identity(2)));
        flips.insert((0, 2), swap_matrix(2, 2));
        let err = ProductSystem::new(CStarAlgebra::scalars(), gens, flips, 1e-10).unwrap_err();
        match err {
            DilationError::IncoherentFlips { residual, .. } => assert!((residual - 2.0).abs() < 1e-12),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn coherent_random_phase_flips() {
        // flips t_ij = swap · diag(phases) with phases factoring per pair are coherent
        let gens = vec![Correspondence::standard(1); 3];
        let mut flips = BTreeMap::new();
        flips.insert((0, 1), CMat::from_element(1, 1, c(0.6, 0.8)));
        flips.insert((0, 2), CMat::from_element(1, 1, c(0.0, 1.0)));
        flips.insert((1, 2), CMat::from_element(1, 1, c(-1.0, 0.0)));
        let x = ProductSystem::new(CStarAlgebra::scalars(), gens, flips, 1e-10).unwrap();
        let pts = lp(&[1, 1, 1]).box_points();
        for s in &pts {
            for t in &pts {
                assert!(x.mult_unitarity_residual(s, t).unwrap() < 1e-12);
                for r in &pts {
                    assert!(x.check_associativity(s, t, r).unwrap() < 1e-10);
                }
            }
        }
    }
}
