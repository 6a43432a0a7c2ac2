//! Points of ℕᵏ and differences in ℤᵏ.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<usize>);

impl LatticePoint {
    pub fn new(coords: Vec<usize>) -> Self {
        LatticePoint(coords)
    }

    pub fn zero(k: usize) -> Self {
        LatticePoint(vec![0; k])
    }

    /// `eᵢ(n)`: `n` in coordinate `i`, zero elsewhere.
    pub fn axis(k: usize, i: usize, n: usize) -> Self {
        let mut v = vec![0; k];
        v[i] = n;
        LatticePoint(v)
    }

    pub fn unit(k: usize, i: usize) -> Self {
        Self::axis(k, i, 1)
    }

    pub fn uniform(k: usize, n: usize) -> Self {
        LatticePoint(vec![n; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.k()).filter(|&i| self.0[i] > 0).collect()
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        assert_eq!(self.k(), other.k(), "lattice rank mismatch");
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other` when `other ≤ self`.
    pub fn checked_sub(&self, other: &LatticePoint) -> Option<LatticePoint> {
        assert_eq!(self.k(), other.k(), "lattice rank mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(LatticePoint)
    }

    pub fn le(&self, other: &LatticePoint) -> bool {
        self.k() == other.k() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Coordinatewise minimum.
    pub fn meet(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    /// `s[u]`: keep the coordinates in `u`, zero the rest.
    pub fn restrict(&self, u: &[usize]) -> LatticePoint {
        let mut v = vec![0; self.k()];
        for &i in u {
            v[i] = self.0[i];
        }
        LatticePoint(v)
    }

    /// Coordinatewise `self − g`, clamped at zero.
    pub fn saturating_sub_scalar(&self, g: usize) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| a.saturating_sub(g)).collect())
    }

    /// Generator letters in normal order: `s₁` copies of 0, then `s₂`
    /// copies of 1, and so on.
    pub fn word(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, n))
            .collect()
    }

    /// Index of the last nonzero coordinate.
    pub fn last_nonzero(&self) -> Option<usize> {
        (0..self.k()).rev().find(|&i| self.0[i] > 0)
    }

    /// All points `0 ≤ s ≤ self` in graded-lexicographic order.
    pub fn box_points(&self) -> Vec<LatticePoint> {
        let mut out = vec![Vec::new()];
        for &b in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    (0..=b).map(move |x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        let mut pts: Vec<LatticePoint> = out.into_iter().map(LatticePoint).collect();
        pts.sort_by(graded_lex);
        pts
    }

    pub fn parse(text: &str) -> Result<LatticePoint> {
        text.split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(LatticePoint)
            .map_err(|e| DilationError::invalid(format!("bad lattice point {text:?}: {e}")))
    }
}

/// Total degree first, then lexicographic.
pub fn graded_lex(a: &LatticePoint, b: &LatticePoint) -> Ordering {
    a.degree().cmp(&b.degree()).then_with(|| a.0.cmp(&b.0))
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// A point of ℤᵏ, split as `s = s₊ − s₋`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Displacement(Vec<i64>);

impl Displacement {
    pub fn new(coords: Vec<i64>) -> Self {
        Displacement(coords)
    }

    /// `to − from`.
    pub fn between(from: &LatticePoint, to: &LatticePoint) -> Self {
        Displacement(
            to.coords()
                .iter()
                .zip(from.coords())
                .map(|(a, b)| *a as i64 - *b as i64)
                .collect(),
        )
    }

    pub fn positive(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|&x| x.max(0) as usize).collect())
    }

    pub fn negative(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|&x| (-x).max(0) as usize).collect())
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

/// All subsets of `v`, each listed in increasing order; the empty set first.
pub fn subsets(v: &[usize]) -> Vec<Vec<usize>> {
    (0..1usize << v.len())
        .map(|mask| {
            v.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect()
}
