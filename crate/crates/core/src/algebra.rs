//! Finite-dimensional C*-algebras as direct sums of full matrix blocks.
//!
//! The canonical basis is the list of matrix units, block-major then
//! row-major. Elements are coordinate vectors in that basis; `embed` is the
//! faithful block-diagonal representation on `ℂⁿ`, `n = Σ nᵢ`.

use std::sync::Arc;

use crate::error::{DilationError, Result};
use crate::linalg::{self, c, CMat, C64};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CStarAlgebra {
    blocks: Arc<[usize]>,
}

/// Location of a matrix unit `e_{row,col}` inside block `block`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixUnit {
    pub block: usize,
    pub row: usize,
    pub col: usize,
}

impl CStarAlgebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(DilationError::invalid("algebra needs at least one block"));
        }
        if block_sizes.iter().any(|&n| n == 0) {
            return Err(DilationError::invalid("block sizes must be positive"));
        }
        Ok(CStarAlgebra {
            blocks: block_sizes.into(),
        })
    }

    /// The complex numbers, `blocks = [1]`.
    pub fn scalars() -> Self {
        CStarAlgebra::new(vec![1]).unwrap()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.blocks
    }

    /// Linear dimension `Σ nᵢ²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Dimension of the faithful representation, `Σ nᵢ`.
    pub fn rep_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    fn basis_offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|n| n * n).sum()
    }

    fn rep_offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().sum()
    }

    pub fn unit_index(&self, u: MatrixUnit) -> usize {
        let n = self.blocks[u.block];
        self.basis_offset(u.block) + u.row * n + u.col
    }

    pub fn matrix_unit(&self, index: usize) -> MatrixUnit {
        let mut off = 0;
        for (block, &n) in self.blocks.iter().enumerate() {
            if index < off + n * n {
                let local = index - off;
                return MatrixUnit {
                    block,
                    row: local / n,
                    col: local % n,
                };
            }
            off += n * n;
        }
        panic!("basis index {index} out of range for algebra of dimension {}", self.dim());
    }

    /// `f_p f_q` as a basis index, or `None` when the product vanishes.
    pub fn basis_product(&self, p: usize, q: usize) -> Option<usize> {
        let a = self.matrix_unit(p);
        let b = self.matrix_unit(q);
        (a.block == b.block && a.col == b.row).then(|| {
            self.unit_index(MatrixUnit {
                block: a.block,
                row: a.row,
                col: b.col,
            })
        })
    }

    pub fn basis_adjoint(&self, p: usize) -> usize {
        let a = self.matrix_unit(p);
        self.unit_index(MatrixUnit {
            block: a.block,
            row: a.col,
            col: a.row,
        })
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            coords: vec![C64::new(0.0, 0.0); self.dim()],
        }
    }

    pub fn unit(&self) -> AlgebraElement {
        let mut z = self.zero();
        for (block, &n) in self.blocks.iter().enumerate() {
            for i in 0..n {
                z.coords[self.unit_index(MatrixUnit { block, row: i, col: i })] = c(1.0, 0.0);
            }
        }
        z
    }

    pub fn basis_element(&self, p: usize) -> AlgebraElement {
        let mut z = self.zero();
        z.coords[p] = c(1.0, 0.0);
        z
    }

    pub fn element(&self, coords: Vec<C64>) -> Result<AlgebraElement> {
        if coords.len() != self.dim() {
            return Err(DilationError::invalid(format!(
                "element has {} coordinates, algebra dimension is {}",
                coords.len(),
                self.dim()
            )));
        }
        Ok(AlgebraElement {
            algebra: self.clone(),
            coords,
        })
    }

    /// Builds an element from one square matrix per block.
    pub fn from_blocks(&self, blocks: &[CMat]) -> Result<AlgebraElement> {
        if blocks.len() != self.blocks.len() {
            return Err(DilationError::invalid("wrong number of blocks"));
        }
        let mut z = self.zero();
        for (b, (m, &n)) in blocks.iter().zip(self.blocks.iter()).enumerate() {
            if m.shape() != (n, n) {
                return Err(DilationError::invalid(format!("block {b} must be {n}×{n}")));
            }
            let off = self.basis_offset(b);
            for i in 0..n {
                for j in 0..n {
                    z.coords[off + i * n + j] = m[(i, j)];
                }
            }
        }
        Ok(z)
    }

    /// Block-diagonal embedding of a coordinate vector.
    pub fn embed_coords(&self, coords: &[C64]) -> CMat {
        let n = self.rep_dim();
        let mut out = linalg::zeros(n, n);
        let mut off = 0;
        for (b, &nb) in self.blocks.iter().enumerate() {
            let r0 = self.rep_offset(b);
            for i in 0..nb {
                for j in 0..nb {
                    out[(r0 + i, r0 + j)] = coords[off + i * nb + j];
                }
            }
            off += nb * nb;
        }
        out
    }

    /// Inverse of `embed_coords` on block-diagonal matrices (off-block
    /// entries are ignored).
    pub fn coords_of_embedded(&self, m: &CMat) -> Vec<C64> {
        let mut coords = Vec::with_capacity(self.dim());
        for (b, &nb) in self.blocks.iter().enumerate() {
            let r0 = self.rep_offset(b);
            for i in 0..nb {
                for j in 0..nb {
                    coords.push(m[(r0 + i, r0 + j)]);
                }
            }
        }
        coords
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    algebra: CStarAlgebra,
    coords: Vec<C64>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.coords
    }

    fn same_algebra(&self, other: &AlgebraElement) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(DilationError::invalid("algebra mismatch"));
        }
        Ok(())
    }

    /// One matrix per block.
    pub fn blocks(&self) -> Vec<CMat> {
        let mut off = 0;
        self.algebra
            .block_sizes()
            .iter()
            .map(|&n| {
                let m = CMat::from_fn(n, n, |i, j| self.coords[off + i * n + j]);
                off += n * n;
                m
            })
            .collect()
    }

    pub fn mul(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.same_algebra(other)?;
        let prods: Vec<CMat> = self
            .blocks()
            .iter()
            .zip(other.blocks().iter())
            .map(|(a, b)| a * b)
            .collect();
        self.algebra.from_blocks(&prods)
    }

    pub fn adjoint(&self) -> AlgebraElement {
        let adj: Vec<CMat> = self.blocks().iter().map(|b| b.adjoint()).collect();
        self.algebra.from_blocks(&adj).expect("same shape")
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.same_algebra(other)?;
        Ok(AlgebraElement {
            algebra: self.algebra.clone(),
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> AlgebraElement {
        AlgebraElement {
            algebra: self.algebra.clone(),
            coords: self.coords.iter().map(|a| a * z).collect(),
        }
    }

    pub fn embed(&self) -> CMat {
        self.algebra.embed_coords(&self.coords)
    }

    /// C*-norm, the operator norm of the faithful embedding.
    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.embed())
    }

    /// Hermitian within `tol` and minimum eigenvalue `≥ −tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        let m = self.embed();
        if linalg::max_abs(&(&m - m.adjoint())) > tol {
            return false;
        }
        linalg::min_eigenvalue(&m) >= -tol
    }
}
