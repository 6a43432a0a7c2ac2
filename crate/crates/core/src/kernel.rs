//! The Toeplitz kernel `K(t,s) = T̂*_{(s−t)₋}T̂_{(s−t)₊}` on a lattice window
//! and its Kolmogorov factorization `K(t,s) = κₜᴴκₛ`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{DilationError, Result};
use crate::hat::TruncatedFock;
use crate::lattice::{Displacement, LatticePoint};
use crate::linalg::{self, max_abs, CMat, HermitianEigen};

/// Relative eigenvalue cutoff used to decide the rank of the window Gram.
pub const RANK_CUTOFF: f64 = 1e-10;

/// `K(t,s)` as an `N×N` matrix on `𝓗_L`.
pub fn kernel(space: &TruncatedFock, t: &LatticePoint, s: &LatticePoint) -> Result<CMat> {
    let d = Displacement::between(t, s);
    kernel_for_displacement(space, &d)
}

fn kernel_for_displacement(space: &TruncatedFock, d: &Displacement) -> Result<CMat> {
    let hp = space.hat(&d.positive())?;
    let hn = space.hat(&d.negative())?;
    let nblocks = space.blocks().len();
    // T̂_n as target → (source, block)
    let mut n_by_target: Vec<Option<(usize, &CMat)>> = vec![None; nblocks];
    for (src, e) in hn.maps.iter().enumerate() {
        if let Some((dst, m)) = e {
            n_by_target[*dst] = Some((src, m));
        }
    }
    let mut out = linalg::zeros(space.dim(), space.dim());
    for (src, e) in hp.maps.iter().enumerate() {
        let Some((mid, b1)) = e else { continue };
        let Some((dst, b2)) = n_by_target[*mid] else { continue };
        let block = b2.adjoint() * b1;
        out.view_mut((space.offset(dst), space.offset(src)), block.shape())
            .copy_from(&block);
    }
    Ok(out)
}

/// The window Gram `[K(t,s)]_{t,s ≤ M}` with its eigendecomposition.
#[derive(Debug)]
pub struct KernelWindow {
    space: Arc<TruncatedFock>,
    bound: LatticePoint,
    points: Vec<LatticePoint>,
    index: HashMap<LatticePoint, usize>,
    gram: CMat,
    eigen: HermitianEigen,
}

impl KernelWindow {
    pub fn new(space: Arc<TruncatedFock>, bound: LatticePoint) -> Result<Self> {
        if bound.k() != space.rep().k() {
            return Err(DilationError::invalid(format!("window bound {bound} has the wrong rank")));
        }
        let points = bound.box_points();
        let n = space.dim();
        let w = points.len();

        let mut displacements: Vec<Displacement> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, t) in points.iter().enumerate() {
            for s in &points[i..] {
                let d = Displacement::between(t, s);
                if seen.insert(d.clone()) {
                    displacements.push(d);
                }
            }
        }
        let blocks: Vec<Result<CMat>> = displacements
            .par_iter()
            .map(|d| kernel_for_displacement(&space, d))
            .collect();
        let mut cache = HashMap::new();
        for (d, b) in displacements.into_iter().zip(blocks) {
            cache.insert(d, b?);
        }

        let mut gram = linalg::zeros(w * n, w * n);
        for (i, t) in points.iter().enumerate() {
            for (j, s) in points.iter().enumerate().skip(i) {
                let b = &cache[&Displacement::between(t, s)];
                gram.view_mut((i * n, j * n), (n, n)).copy_from(b);
                if i != j {
                    gram.view_mut((j * n, i * n), (n, n)).copy_from(&b.adjoint());
                }
            }
        }
        let eigen = linalg::hermitian_eigen(&gram);
        let index = points.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(KernelWindow {
            space,
            bound,
            points,
            index,
            gram,
            eigen,
        })
    }

    pub fn space(&self) -> &Arc<TruncatedFock> {
        &self.space
    }

    pub fn bound(&self) -> &LatticePoint {
        &self.bound
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn index(&self, s: &LatticePoint) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    /// Block `(t, s)` of the Gram.
    pub fn block(&self, t: &LatticePoint, s: &LatticePoint) -> Option<CMat> {
        let n = self.space.dim();
        let (i, j) = (self.index(t)?, self.index(s)?);
        Some(self.gram.view((i * n, j * n), (n, n)).into_owned())
    }

    /// Smallest eigenvalue of the Gram; `+∞` when it is empty.
    pub fn psd_margin(&self) -> f64 {
        self.eigen.values.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn numerical_rank(&self) -> usize {
        let top = self.eigen.values.first().copied().unwrap_or(0.0);
        self.eigen
            .values
            .iter()
            .filter(|&&l| top > 0.0 && l > RANK_CUTOFF * top)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorBackend {
    Eigen,
    PivotedCholesky,
}

/// `R` with `RᴴR ≈ Gram`; column block `s` of `R` is `κₛ`.
#[derive(Debug, Clone)]
pub struct KolmogorovFactor {
    pub factor: CMat,
    pub backend: FactorBackend,
    /// Number of rows (numerical rank) of the factor.
    pub rank: usize,
    block: usize,
    points: Vec<LatticePoint>,
}

impl KolmogorovFactor {
    /// `κₛ : 𝓗_L → ℂᵖ`, or `None` outside the window.
    pub fn kappa(&self, s: &LatticePoint) -> Option<CMat> {
        let i = self.points.iter().position(|p| p == s)?;
        Some(self.factor.columns(i * self.block, self.block).into_owned())
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    /// `max |κₜᴴκₛ − K(t,s)|` over the window.
    pub fn residual(&self, window: &KernelWindow) -> f64 {
        max_abs(&(self.factor.adjoint() * &self.factor - window.gram()))
    }
}

/// Factors the window Gram. Fails when its smallest eigenvalue is below
/// `−psd_tol`: then no regular isometric dilation exists for the data.
pub fn kolmogorov(window: &KernelWindow, psd_tol: f64, backend: FactorBackend) -> Result<KolmogorovFactor> {
    let margin = window.psd_margin();
    if margin < -psd_tol {
        return Err(DilationError::NotPositiveDefinite {
            margin,
            tolerance: psd_tol,
        });
    }
    let factor = match backend {
        FactorBackend::Eigen => {
            let e = window.eigen();
            let n = window.gram().nrows();
            let p = window.numerical_rank();
            let mut r = linalg::zeros(p, n);
            for i in 0..p {
                let s = e.values[i].sqrt();
                for j in 0..n {
                    r[(i, j)] = e.vectors[(j, i)].conj() * s;
                }
            }
            r
        }
        FactorBackend::PivotedCholesky => pivoted_cholesky(window.gram(), RANK_CUTOFF).adjoint(),
    };
    Ok(KolmogorovFactor {
        rank: factor.nrows(),
        factor,
        backend,
        block: window.space().dim(),
        points: window.points().to_vec(),
    })
}

/// `L` (`n×r`) with `G ≈ L Lᴴ`, greedy diagonal pivoting, stopping once the
/// largest remaining diagonal entry is `≤ rel · max diag(G)`.
pub fn pivoted_cholesky(g: &CMat, rel: f64) -> CMat {
    let n = g.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| g[(i, i)].re).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    let mut cols: Vec<linalg::CVec> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let Some((piv, &dmax)) = diag
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        else {
            break;
        };
        if top <= 0.0 || dmax <= rel * top {
            break;
        }
        used[piv] = true;
        let mut col = g.column(piv).into_owned();
        for l in &cols {
            let c = l[piv].conj();
            col.axpy(-c, l, linalg::re(1.0));
        }
        let scale = 1.0 / dmax.sqrt();
        col *= linalg::re(scale);
        col[piv] = linalg::re(dmax.sqrt());
        for i in 0..n {
            if !used[i] {
                diag[i] -= col[i].norm_sqr();
            }
        }
        diag[piv] = 0.0;
        for (i, u) in used.iter().enumerate() {
            if *u && i != piv {
                col[i] = linalg::re(0.0);
            }
        }
        cols.push(col);
    }
    let mut out = linalg::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}
