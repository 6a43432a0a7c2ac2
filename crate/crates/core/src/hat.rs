//! The block space `𝓗_L = H ⊕ ⊕_{0<s≤L} X(s)⊗_σH` and the contractive
//! semigroup `T̂` of block-lowering operators on it.
//!
//! `𝓗_L` is invariant under every `T̂ₛ`, so the semigroup identities hold
//! exactly on it. Operators are stored block-sparse: `T̂ₛ` has at most one
//! nonzero block per block column, mapping block `t` to block `t−s`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::algebra::AlgebraElement;
use crate::correspondence::descend_map;
use crate::error::{DilationError, Result};
use crate::lattice::{subsets, LatticePoint};
use crate::linalg::{self, kron, op_norm, CMat, CVec, C64};
use crate::representation::CCRepresentation;

/// A block-sparse operator with at most one nonzero block per source block.
#[derive(Debug, Clone)]
pub struct HatOperator {
    pub s: LatticePoint,
    /// `maps[source] = Some((target, block))`.
    pub maps: Vec<Option<(usize, CMat)>>,
}

impl HatOperator {
    pub fn norm(&self) -> f64 {
        // distinct sources land in distinct targets, so the norm is the
        // largest block norm
        self.maps
            .iter()
            .flatten()
            .map(|(_, m)| op_norm(m))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug)]
pub struct TruncatedFock {
    rep: Arc<CCRepresentation>,
    bound: LatticePoint,
    blocks: Vec<LatticePoint>,
    index: HashMap<LatticePoint, usize>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
    hats: RwLock<HashMap<LatticePoint, Arc<HatOperator>>>,
}

impl TruncatedFock {
    pub fn new(rep: Arc<CCRepresentation>, bound: LatticePoint) -> Result<Self> {
        if bound.k() != rep.k() {
            return Err(DilationError::invalid(format!(
                "box bound {bound} has rank {}, system has {}",
                bound.k(),
                rep.k()
            )));
        }
        let blocks = bound.box_points();
        let ranks: Vec<Result<usize>> = blocks.par_iter().map(|s| rep.localized_rank(s)).collect();
        let dims = ranks.into_iter().collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for d in &dims {
            offsets.push(total);
            total += d;
        }
        let index = blocks.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(TruncatedFock {
            rep,
            bound,
            blocks,
            index,
            dims,
            offsets,
            total,
            hats: RwLock::new(HashMap::new()),
        })
    }

    pub fn rep(&self) -> &Arc<CCRepresentation> {
        &self.rep
    }

    pub fn bound(&self) -> &LatticePoint {
        &self.bound
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn h_dim(&self) -> usize {
        self.rep.h_dim()
    }

    pub fn blocks(&self) -> &[LatticePoint] {
        &self.blocks
    }

    pub fn block_index(&self, s: &LatticePoint) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn block_dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// `δₛ·ξ` for quotient coordinates `ξ` of block `s`.
    pub fn embed_block(&self, s: &LatticePoint, xi: &CVec) -> Result<CVec> {
        let i = self
            .block_index(s)
            .ok_or_else(|| DilationError::invalid(format!("{s} is outside the box {}", self.bound)))?;
        if xi.len() != self.dims[i] {
            return Err(DilationError::invalid("block vector has the wrong length"));
        }
        let mut v = CVec::zeros(self.total);
        v.rows_mut(self.offsets[i], self.dims[i]).copy_from(xi);
        Ok(v)
    }

    /// `δₛ·(x⊗h)` for fiber coordinates `x` and `h ∈ H`.
    pub fn inject(&self, s: &LatticePoint, x: &[C64], h: &CVec) -> Result<CVec> {
        if s.is_zero() {
            // a ⊗ h ↦ σ(a)h
            return self.embed_block(s, &(self.rep.apply_fiber(s, x) * h));
        }
        let loc = self.rep.localized(s)?;
        let d = h.len();
        let raw = CVec::from_fn(x.len() * d, |i, _| x[i / d] * h[i % d]);
        self.embed_block(s, &(loc.space.factor() * raw))
    }

    pub fn extract(&self, s: &LatticePoint, v: &CVec) -> Option<CVec> {
        let i = self.block_index(s)?;
        Some(v.rows(self.offsets[i], self.dims[i]).into_owned())
    }

    /// `T̂ₛ`.
    pub fn hat(&self, s: &LatticePoint) -> Result<Arc<HatOperator>> {
        if let Some(h) = self.hats.read().expect("hat cache").get(s) {
            return Ok(h.clone());
        }
        let h = Arc::new(self.build_hat(s)?);
        Ok(self
            .hats
            .write()
            .expect("hat cache")
            .entry(s.clone())
            .or_insert(h)
            .clone())
    }

    fn build_hat(&self, s: &LatticePoint) -> Result<HatOperator> {
        if s.k() != self.rep.k() {
            return Err(DilationError::invalid("lattice point has the wrong rank"));
        }
        if s.is_zero() {
            return Ok(HatOperator {
                s: s.clone(),
                maps: (0..self.blocks.len())
                    .map(|i| Some((i, linalg::identity(self.dims[i]))))
                    .collect(),
            });
        }
        let d = self.h_dim();
        let maps: Vec<Result<Option<(usize, CMat)>>> = self
            .blocks
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let Some(rest) = t.checked_sub(s) else {
                    return Ok(None);
                };
                let target = self.index[&rest];
                if self.dims[i] == 0 || self.dims[target] == 0 {
                    return Ok(Some((target, linalg::zeros(self.dims[target], self.dims[i]))));
                }
                let ls = self.rep.localized(s)?;
                if rest.is_zero() {
                    return Ok(Some((target, ls.tilde.clone())));
                }
                let lt = self.rep.localized(t)?;
                let lr = self.rep.localized(&rest)?;
                let m = self.rep.system().multiplication(&rest, s)?;
                let dr = self.rep.system().fiber_dim(&rest);
                let raw = linalg::matmul(&kron(&linalg::identity(dr), &ls.raw), &kron(&m.inverse_raw, &linalg::identity(d)));
                let block = descend_map(&raw, &lt.space, &lr.space, self.rep.tolerance())?;
                Ok(Some((target, block)))
            })
            .collect();
        Ok(HatOperator {
            s: s.clone(),
            maps: maps.into_iter().collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn dense(&self, op: &HatOperator) -> CMat {
        let mut out = linalg::zeros(self.total, self.total);
        for (src, entry) in op.maps.iter().enumerate() {
            if let Some((dst, m)) = entry {
                out.view_mut((self.offsets[*dst], self.offsets[src]), m.shape())
                    .copy_from(m);
            }
        }
        out
    }

    pub fn hat_dense(&self, s: &LatticePoint) -> Result<CMat> {
        Ok(self.dense(&*self.hat(s)?))
    }

    /// `‖T̂ₛT̂ₜ − T̂_{s+t}‖`, evaluated block by block.
    pub fn check_hat_semigroup(&self, s: &LatticePoint, t: &LatticePoint) -> Result<f64> {
        let (hs, ht, hst) = (self.hat(s)?, self.hat(t)?, self.hat(&s.add(t))?);
        let mut worst = 0.0f64;
        for src in 0..self.blocks.len() {
            let composed = ht.maps[src]
                .as_ref()
                .and_then(|(mid, bt)| hs.maps[*mid].as_ref().map(|(dst, bs)| (*dst, linalg::matmul(bs, bt))));
            // Frobenius bounds the operator norm and skips an SVD per block
            let r = match (composed, hst.maps[src].as_ref()) {
                (None, None) => 0.0,
                (Some((d1, m1)), Some((d2, m2))) if d1 == *d2 => (m1 - m2).norm(),
                (Some((_, m)), None) => m.norm(),
                (None, Some((_, m))) => m.norm(),
                (Some((_, m1)), Some((_, m2))) => m1.norm().max(m2.norm()),
            };
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// `‖T̂ₛ(δₛ·x⊗h) − δ₀·Tₛ(x)h‖` with the right side computed from the
    /// fiber operators directly.
    pub fn check_technology(&self, s: &LatticePoint, x: &[C64], h: &CVec) -> Result<f64> {
        let i = self
            .block_index(s)
            .ok_or_else(|| DilationError::invalid(format!("{s} is outside the box")))?;
        if self.dims[i] == 0 {
            return Ok(0.0);
        }
        let v = self.inject(s, x, h)?;
        let lhs = self.dense(&*self.hat(s)?) * v;
        let rhs = self.embed_block(&LatticePoint::zero(s.k()), &(self.rep.apply_fiber(s, x) * h))?;
        Ok((lhs - rhs).norm())
    }

    /// Diagonal blocks of the left action of `a` on `𝓗_L`.
    pub fn a_action_blocks(&self, a: &AlgebraElement) -> Result<Vec<CMat>> {
        let d = self.h_dim();
        let sigma_a = self.rep.sigma().apply(a);
        let out: Vec<Result<CMat>> = self
            .blocks
            .par_iter()
            .map(|s| {
                if s.is_zero() {
                    return Ok(sigma_a.clone());
                }
                let loc = self.rep.localized(s)?;
                let fiber = self.rep.system().fiber(s);
                let raw = kron(&fiber.correspondence.left(a), &linalg::identity(d));
                descend_map(&raw, &loc.space, &loc.space, self.rep.tolerance())
            })
            .collect();
        out.into_iter().collect()
    }

    pub fn a_action(&self, a: &AlgebraElement) -> Result<CMat> {
        let blocks = self.a_action_blocks(a)?;
        let mut out = linalg::zeros(self.total, self.total);
        for (i, b) in blocks.iter().enumerate() {
            out.view_mut((self.offsets[i], self.offsets[i]), b.shape()).copy_from(b);
        }
        Ok(out)
    }

    /// `‖[a, T̂ₛ]‖` block by block.
    pub fn a_commutator(&self, a: &AlgebraElement, s: &LatticePoint) -> Result<f64> {
        let act = self.a_action_blocks(a)?;
        let h = self.hat(s)?;
        Ok(h.maps
            .iter()
            .enumerate()
            .filter_map(|(src, e)| e.as_ref().map(|(dst, m)| op_norm(&(linalg::matmul(&act[*dst], m) - linalg::matmul(m, &act[src])))))
            .fold(0.0, f64::max))
    }

    /// Minimum eigenvalue of `Σ_{u⊆v}(−1)^{|u|} T̂*_{s[u]}T̂_{s[u]}` on
    /// `𝓗_L`; the operator is block diagonal.
    pub fn brehmer_check_hat(&self, v: &[usize], s: &LatticePoint) -> Result<f64> {
        let hats = subsets(v)
            .into_iter()
            .map(|u| Ok((u.len(), self.hat(&s.restrict(&u))?)))
            .collect::<Result<Vec<_>>>()?;
        let mut worst = f64::INFINITY;
        for src in 0..self.blocks.len() {
            let n = self.dims[src];
            if n == 0 {
                continue;
            }
            let mut sum = linalg::zeros(n, n);
            for (size, h) in &hats {
                if let Some((_, m)) = &h.maps[src] {
                    let term = m.adjoint() * m;
                    if size % 2 == 0 {
                        sum += term;
                    } else {
                        sum -= term;
                    }
                }
            }
            worst = worst.min(linalg::min_eigenvalue(&sum));
        }
        Ok(worst)
    }

    /// `‖T̂_b*T̂_a − T̂_aT̂_b*‖` with `a = e_j(s_j)`, `b = e_k(s_k)`; exact
    /// on `𝓗_L` because `a` and `b` have disjoint supports.
    pub fn hat_doubly_commuting(&self, j: usize, k: usize, s_j: usize, s_k: usize) -> Result<f64> {
        if j == k {
            return Err(DilationError::invalid("doubly commuting check needs two distinct generators"));
        }
        let kk = self.rep.k();
        let ha = self.hat(&LatticePoint::axis(kk, j, s_j))?;
        let hb = self.hat(&LatticePoint::axis(kk, k, s_k))?;
        // adjoint of T̂_b as target → (source, block*)
        let mut b_adj: Vec<Option<(usize, CMat)>> = vec![None; self.blocks.len()];
        for (src, e) in hb.maps.iter().enumerate() {
            if let Some((dst, m)) = e {
                b_adj[*dst] = Some((src, m.adjoint()));
            }
        }
        let mut worst = 0.0f64;
        for src in 0..self.blocks.len() {
            let lhs = ha.maps[src]
                .as_ref()
                .and_then(|(mid, m)| b_adj[*mid].as_ref().map(|(dst, n)| (*dst, linalg::matmul(n, m))));
            let rhs = b_adj[src]
                .as_ref()
                .and_then(|(mid, n)| ha.maps[*mid].as_ref().map(|(dst, m)| (*dst, linalg::matmul(m, n))));
            let r = match (lhs, rhs) {
                (None, None) => 0.0,
                (Some((d1, m1)), Some((d2, m2))) if d1 == d2 => op_norm(&(m1 - m2)),
                (Some((_, m)), None) | (None, Some((_, m))) => op_norm(&m),
                (Some((_, m1)), Some((_, m2))) => op_norm(&m1).max(op_norm(&m2)),
            };
            worst = worst.max(r);
        }
        Ok(worst)
    }
}
