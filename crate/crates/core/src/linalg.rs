//! Dense complex linear-algebra helpers shared by every module.
//!
//! Everything works on `DMatrix<Complex64>`. All helpers tolerate empty
//! (zero-row or zero-column) matrices, which show up whenever a fiber or a
//! localized space has rank zero.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `(m + mᴴ)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

// nalgebra's default convergence threshold leaves relative errors near
// 1e-10 on some clustered spectra; iterate to a tighter threshold with a cap
// and fall back to the default if the cap is hit.
const SOLVER_EPS: f64 = 1e-17;

fn solver_cap(m: &CMat) -> usize {
    2000 * m.nrows().max(m.ncols()).max(1)
}

pub fn svd(m: &CMat, compute_u: bool, compute_v: bool) -> nalgebra::SVD<C64, nalgebra::Dyn, nalgebra::Dyn> {
    m.clone()
        .try_svd(compute_u, compute_v, SOLVER_EPS, solver_cap(m))
        .unwrap_or_else(|| m.clone().svd(compute_u, compute_v))
}

/// Largest singular value; zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.iter().all(|z| z.norm_sqr() == 0.0) {
        return 0.0;
    }
    svd(m, false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted in
/// descending order (ties keep the solver's order, so the result is
/// deterministic for a fixed input).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigen needs a square matrix");
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: zeros(0, 0),
        };
    }
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h.clone(), SOLVER_EPS, solver_cap(&h)).unwrap_or_else(|| SymmetricEigen::new(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// Smallest eigenvalue of the Hermitian part; `+∞` for an empty matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m)
        .values
        .last()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Factorization `G = Fᴴ F` of a positive semidefinite matrix obtained by
/// discarding eigenvalues `≤ cutoff`.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    /// `p × n`, rows `√λ vᴴ` for the kept eigenpairs.
    pub factor: CMat,
    /// `n × p` right inverse of `factor` on its row space: `V diag(1/√λ)`.
    pub lift: CMat,
    /// `n × (n−p)` orthonormal basis of the discarded eigenspace.
    pub kernel: CMat,
    pub eigenvalues: Vec<f64>,
}

impl PsdFactor {
    pub fn rank(&self) -> usize {
        self.factor.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::INFINITY)
    }
}

pub fn psd_factor(g: &CMat, cutoff: f64) -> PsdFactor {
    let n = g.nrows();
    let eig = hermitian_eigen(g);
    let p = eig.values.iter().filter(|&&l| l > cutoff).count();
    let mut factor = zeros(p, n);
    let mut lift = zeros(n, p);
    for i in 0..p {
        let s = eig.values[i].sqrt();
        let v = eig.vectors.column(i);
        for j in 0..n {
            factor[(i, j)] = v[j].conj() * s;
            lift[(j, i)] = v[j] / s;
        }
    }
    let kernel = eig.vectors.columns(p, n - p).into_owned();
    PsdFactor {
        factor,
        lift,
        kernel,
        eigenvalues: eig.values,
    }
}

/// Inverse of a square matrix. Monomial matrices (one nonzero per row and
/// column, e.g. permutations) are inverted exactly without an LU.
pub fn inverse(m: &CMat) -> Option<CMat> {
    if !m.is_square() {
        return None;
    }
    let n = m.nrows();
    let mut col_of_row = vec![usize::MAX; n];
    let mut monomial = true;
    'rows: for i in 0..n {
        for j in 0..n {
            if m[(i, j)].norm_sqr() != 0.0 {
                if col_of_row[i] != usize::MAX {
                    monomial = false;
                    break 'rows;
                }
                col_of_row[i] = j;
            }
        }
    }
    if monomial {
        let mut seen = vec![false; n];
        for &j in &col_of_row {
            if j == usize::MAX || std::mem::replace(&mut seen[j], true) {
                monomial = false;
                break;
            }
        }
    }
    if !monomial {
        return m.clone().try_inverse();
    }
    let mut inv = zeros(n, n);
    for (i, &j) in col_of_row.iter().enumerate() {
        inv[(j, i)] = m[(i, j)].inv();
    }
    Some(inv)
}

/// Cholesky factorization that fails unless `g` is numerically positive
/// definite. nalgebra takes complex square roots of the pivots, so a
/// negative pivot shows up as a non-real diagonal rather than a failure.
pub fn definite_cholesky(g: &CMat) -> Option<nalgebra::Cholesky<C64, nalgebra::Dyn>> {
    let ch = g.clone().cholesky()?;
    let l = ch.l_dirty();
    (0..g.nrows())
        .all(|i| {
            let z = l[(i, i)];
            z.re > 0.0 && z.re.is_finite() && z.im.abs() <= 1e-14 * z.re
        })
        .then_some(ch)
}

/// Moore–Penrose pseudo-inverse discarding singular values
/// `≤ rel · σ_max`.
pub fn pinv(m: &CMat, rel: f64) -> CMat {
    let (r, cdim) = m.shape();
    if r == 0 || cdim == 0 {
        return zeros(cdim, r);
    }
    let svd = svd(m, true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut out = zeros(cdim, r);
    if smax == 0.0 {
        return out;
    }
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > rel * smax {
            out += vt.row(i).adjoint() * u.column(i).adjoint() * re(1.0 / s);
        }
    }
    out
}

/// Orthonormal basis (as columns) of the numerical column space.
pub fn range_basis(m: &CMat, rel: f64) -> CMat {
    let (r, cdim) = m.shape();
    if r == 0 || cdim == 0 {
        return zeros(r, 0);
    }
    let svd = svd(m, true, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let u = svd.u.expect("svd u");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel * smax)
        .collect();
    let mut out = zeros(r, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        out.set_column(dst, &u.column(src));
    }
    out
}

pub fn numerical_rank(m: &CMat, rel: f64) -> usize {
    range_basis(m, rel).ncols()
}

/// Horizontal concatenation; all blocks must share the row count `rows`.
pub fn hstack(rows: usize, blocks: &[CMat]) -> CMat {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows);
        out.columns_mut(off, b.ncols()).copy_from(b);
        off += b.ncols();
    }
    out
}

/// `a·b`; large products go through four real products, which nalgebra
/// hands to an optimized kernel (complex products use a naive loop).
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    if m * k * n < 1 << 18 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re_part = &ar * &br - &ai * &bi;
    let im_part = &ar * &bi + &ai * &br;
    CMat::from_fn(m, n, |i, j| c(re_part[(i, j)], im_part[(i, j)]))
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Column vector `kron(x, I_d)`: the raw coordinates of `x ⊗ h` as a map
/// `h ↦ x ⊗ h`.
pub fn tensor_with_identity(x: &CVec, d: usize) -> CMat {
    let xm = CMat::from_column_slice(x.len(), 1, x.as_slice());
    kron(&xm, &identity(d))
}
