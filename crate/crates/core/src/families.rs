//! Seeded generators for instance families.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::CStarAlgebra;
use crate::correspondence::Correspondence;
use crate::error::{DilationError, Result};
use crate::instance::Instance;
use crate::linalg::{self, c, kron, op_norm, re, CMat};
use crate::representation::AlgebraRepresentation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ScalarCommuting,
    ScalarDoublyCommuting,
    DiagonalDoublyCommuting,
    MultiplicationIsometric,
    RandomContractive,
    NilpotentCounterexample,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::ScalarCommuting,
        Family::ScalarDoublyCommuting,
        Family::DiagonalDoublyCommuting,
        Family::MultiplicationIsometric,
        Family::RandomContractive,
        Family::NilpotentCounterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ScalarCommuting => "scalar-commuting",
            Family::ScalarDoublyCommuting => "scalar-doubly-commuting",
            Family::DiagonalDoublyCommuting => "diagonal-doubly-commuting",
            Family::MultiplicationIsometric => "multiplication-isometric",
            Family::RandomContractive => "random-contractive",
            Family::NilpotentCounterexample => "nilpotent-counterexample",
        }
    }

    /// Whether every member is doubly commuting by construction.
    pub fn doubly_commuting(self) -> bool {
        !matches!(self, Family::RandomContractive | Family::NilpotentCounterexample)
    }
}

impl FromStr for Family {
    type Err = DilationError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| DilationError::invalid(format!("unknown family {s:?}")))
    }
}

/// Generation knobs. `gen_dim` only matters for the diagonal family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenOptions {
    pub k: usize,
    pub gen_dim: usize,
    pub h_dim: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            k: 2,
            gen_dim: 2,
            h_dim: 2,
        }
    }
}

impl GenOptions {
    /// `--dims`: one number is the Hilbert space dimension, two are
    /// `gen_dim,h_dim`.
    pub fn with_dims(mut self, dims: &[usize]) -> Result<Self> {
        match dims {
            [] => {}
            [h] => self.h_dim = *h,
            [g, h] => {
                self.gen_dim = *g;
                self.h_dim = *h;
            }
            _ => return Err(DilationError::invalid("--dims takes one or two numbers")),
        }
        if self.h_dim == 0 || self.gen_dim == 0 {
            return Err(DilationError::invalid("dimensions must be positive"));
        }
        Ok(self)
    }
}

fn random_complex(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
    CMat::from_fn(r, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    random_complex(rng, d, d).qr().q()
}

fn random_disk_point(rng: &mut ChaCha8Rng, radius: f64) -> linalg::C64 {
    let r = radius * rng.gen_range(0.0f64..1.0).sqrt();
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    c(r * t.cos(), r * t.sin())
}

fn scalar_system(k: usize) -> (CStarAlgebra, Vec<Correspondence>, BTreeMap<(usize, usize), CMat>) {
    let mut flips = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            flips.insert((i, j), linalg::identity(1));
        }
    }
    (CStarAlgebra::scalars(), vec![Correspondence::standard(1); k], flips)
}

/// The swap `Eᵢ⊗Eⱼ → Eⱼ⊗Eᵢ` on raw coordinates.
pub fn swap_matrix(mi: usize, mj: usize) -> CMat {
    let mut p = linalg::zeros(mj * mi, mi * mj);
    for a in 0..mi {
        for b in 0..mj {
            p[(b * mi + a, a * mj + b)] = re(1.0);
        }
    }
    p
}

pub fn generate(family: Family, seed: u64, opts: GenOptions) -> Result<Instance> {
    if opts.k == 0 {
        return Err(DilationError::invalid("k must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, d) = (opts.k, opts.h_dim);
    Ok(match family {
        Family::ScalarCommuting | Family::ScalarDoublyCommuting => {
            // commuting normal contractions
            let u = random_unitary(&mut rng, d);
            let maps = (0..k)
                .map(|_| {
                    let diag = CMat::from_diagonal(&linalg::CVec::from_fn(d, |_, _| random_disk_point(&mut rng, 0.95)));
                    vec![&u * diag * u.adjoint()]
                })
                .collect();
            let (algebra, generators, flips) = scalar_system(k);
            Instance {
                algebra,
                generators,
                flips,
                sigma: AlgebraRepresentation::scalar(d),
                maps,
            }
        }
        Family::DiagonalDoublyCommuting => {
            let m = opts.gen_dim;
            let mut maps = Vec::with_capacity(k);
            for _ in 0..k {
                let mut ops = vec![linalg::zeros(d, d); m];
                for r in 0..d {
                    let v: Vec<_> = (0..m).map(|_| random_disk_point(&mut rng, 1.0)).collect();
                    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
                    let rho = rng.gen_range(0.3..0.95);
                    for (a, z) in v.into_iter().enumerate() {
                        ops[a][(r, r)] = z * re(rho / norm);
                    }
                }
                maps.push(ops);
            }
            let mut flips = BTreeMap::new();
            for i in 0..k {
                for j in i + 1..k {
                    flips.insert((i, j), swap_matrix(m, m));
                }
            }
            Instance {
                algebra: CStarAlgebra::scalars(),
                generators: vec![Correspondence::standard(m); k],
                flips,
                sigma: AlgebraRepresentation::scalar(d),
                maps,
            }
        }
        Family::MultiplicationIsometric => {
            if d % 2 != 0 {
                return Err(DilationError::invalid("multiplication-isometric needs an even Hilbert space dimension"));
            }
            let r = d / 2;
            let a = CStarAlgebra::new(vec![2])?;
            let u = random_unitary(&mut rng, r);
            let maps = (0..k)
                .map(|_| {
                    let phases = linalg::CVec::from_fn(r, |_, _| {
                        let t = rng.gen_range(0.0..std::f64::consts::TAU);
                        c(t.cos(), t.sin())
                    });
                    let w = &u * CMat::from_diagonal(&phases) * u.adjoint();
                    (0..a.dim()).map(|p| kron(&a.basis_element(p).embed(), &w)).collect()
                })
                .collect();
            let flip = multiplication_flip(&a);
            let mut flips = BTreeMap::new();
            for i in 0..k {
                for j in i + 1..k {
                    flips.insert((i, j), flip.clone());
                }
            }
            Instance {
                algebra: a.clone(),
                generators: vec![Correspondence::algebra_itself(&a); k],
                flips,
                sigma: AlgebraRepresentation::amplified(&a, r),
                maps,
            }
        }
        Family::RandomContractive => {
            let z = random_complex(&mut rng, d, d);
            let mut maps = Vec::with_capacity(k);
            let mut power = linalg::identity(d);
            let mut poly = linalg::zeros(d, d);
            for _ in 0..k {
                power = &power * &z;
                poly += &power * random_disk_point(&mut rng, 1.0);
                let n = op_norm(&poly).max(1e-12);
                let rho = rng.gen_range(0.4..0.95);
                maps.push(vec![&poly * re(rho / n)]);
            }
            let (algebra, generators, flips) = scalar_system(k);
            Instance {
                algebra,
                generators,
                flips,
                sigma: AlgebraRepresentation::scalar(d),
                maps,
            }
        }
        Family::NilpotentCounterexample => {
            let mut e12 = linalg::zeros(2, 2);
            e12[(0, 1)] = re(1.0);
            let (algebra, generators, flips) = scalar_system(k);
            Instance {
                algebra,
                generators,
                flips,
                sigma: AlgebraRepresentation::scalar(2),
                maps: vec![vec![e12]; k],
            }
        }
    })
}

/// `x⊗y ↦ xy⊗1` on raw coordinates of `A⊗A` for `A` viewed as a
/// correspondence over itself.
pub fn multiplication_flip(a: &CStarAlgebra) -> CMat {
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
