//! Instance files: JSON with complex numbers as `[re, im]` and matrices as
//! row-major nested lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::CStarAlgebra;
use crate::correspondence::Correspondence;
use crate::error::{DilationError, Result};
use crate::lattice::LatticePoint;
use crate::linalg::{c, CMat};
use crate::representation::AlgebraRepresentation;

pub type Complex = [f64; 2];
pub type Matrix = Vec<Vec<Complex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceJson {
    pub dim: usize,
    /// `dim × dim` algebra elements.
    pub gram: Vec<Vec<Vec<Complex>>>,
    pub right_action: Vec<Matrix>,
    pub left_action: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationJson {
    #[serde(rename = "H_dim")]
    pub h_dim: usize,
    pub sigma: Vec<Matrix>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<Matrix>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub validation: f64,
    pub psd: f64,
    pub well_defined: f64,
    pub weak: f64,
    pub adjoint: f64,
    pub exact: f64,
    pub uniqueness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = crate::dilation::DilationTolerances::default();
        Tolerances {
            validation: crate::correspondence::DEFAULT_TOL,
            psd: d.psd,
            well_defined: d.well_defined,
            weak: d.weak,
            adjoint: d.adjoint,
            exact: d.exact,
            uniqueness: d.uniqueness,
        }
    }
}

impl Tolerances {
    pub fn dilation(&self) -> crate::dilation::DilationTolerances {
        crate::dilation::DilationTolerances {
            psd: self.psd,
            well_defined: self.well_defined,
            weak: self.weak,
            adjoint: self.adjoint,
            exact: self.exact,
            uniqueness: self.uniqueness,
        }
    }
}

/// Optional run parameters stored with an instance. `probes` is the box
/// over which the Brehmer and doubly-commuting hypotheses are checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersJson {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<LatticePoint>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<LatticePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<LatticePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub algebra: AlgebraJson,
    pub k: usize,
    pub generators: Vec<CorrespondenceJson>,
    /// Keys `"i,j"` with `1 ≤ i < j ≤ k`.
    #[serde(default)]
    pub flips: BTreeMap<String, Matrix>,
    pub representation: RepresentationJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<ParametersJson>,
}

/// Library objects decoded from an instance file.
#[derive(Debug, Clone)]
pub struct Instance {
    pub algebra: CStarAlgebra,
    pub generators: Vec<Correspondence>,
    /// 0-based `(i, j)`, `i < j`.
    pub flips: BTreeMap<(usize, usize), CMat>,
    pub sigma: AlgebraRepresentation,
    pub maps: Vec<Vec<CMat>>,
}

fn schema(msg: impl Into<String>) -> DilationError {
    DilationError::Instance(msg.into())
}

pub fn matrix_from_json(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<CMat> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(schema(format!("{what} must be {rows}×{cols}")));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| c(m[i][j][0], m[i][j][1])))
}

pub fn matrix_to_json(m: &CMat) -> Matrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn flip_key(i: usize, j: usize) -> String {
    format!("{},{}", i + 1, j + 1)
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| schema(format!("malformed instance: {e}")))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// SHA-256 of the compact serialization; field order is fixed by the
    /// struct layout and flip keys are sorted, so equal instances hash
    /// equally regardless of input formatting.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let alg = &inst.algebra;
        let generators = inst
            .generators
            .iter()
            .map(|e| CorrespondenceJson {
                dim: e.dim(),
                gram: (0..e.dim())
                    .map(|i| {
                        (0..e.dim())
                            .map(|j| e.gram(i, j).coords().iter().map(|z| [z.re, z.im]).collect())
                            .collect()
                    })
                    .collect(),
                right_action: e.right_action().iter().map(matrix_to_json).collect(),
                left_action: e.left_action().iter().map(matrix_to_json).collect(),
            })
            .collect();
        InstanceFile {
            algebra: AlgebraJson {
                blocks: alg.block_sizes().to_vec(),
            },
            k: inst.generators.len(),
            generators,
            flips: inst
                .flips
                .iter()
                .map(|(&(i, j), m)| (flip_key(i, j), matrix_to_json(m)))
                .collect(),
            representation: RepresentationJson {
                h_dim: inst.sigma.dim(),
                sigma: inst.sigma.images().iter().map(matrix_to_json).collect(),
                t: inst
                    .maps
                    .iter()
                    .map(|ms| ms.iter().map(matrix_to_json).collect())
                    .collect(),
            },
            parameters: None,
        }
    }

    /// Decodes into library objects. Every shape mismatch is reported as an
    /// instance (schema) error; mathematical validity is not checked here.
    pub fn decode(&self) -> Result<Instance> {
        let algebra = CStarAlgebra::new(self.algebra.blocks.clone()).map_err(|e| schema(e.to_string()))?;
        let n = algebra.dim();
        if self.k == 0 || self.generators.len() != self.k {
            return Err(schema(format!("k = {} but {} generators given", self.k, self.generators.len())));
        }
        let mut generators = Vec::with_capacity(self.k);
        for (g, e) in self.generators.iter().enumerate() {
            let m = e.dim;
            let what = |s: &str| format!("generator {}: {s}", g + 1);
            if e.gram.len() != m || e.gram.iter().any(|r| r.len() != m) {
                return Err(schema(what("gram must be dim×dim")));
            }
            let mut slices = vec![CMat::zeros(m, m); n];
            for (i, row) in e.gram.iter().enumerate() {
                for (j, el) in row.iter().enumerate() {
                    if el.len() != n {
                        return Err(schema(what(&format!("gram entries need {n} coordinates"))));
                    }
                    for (p, z) in el.iter().enumerate() {
                        slices[p][(i, j)] = c(z[0], z[1]);
                    }
                }
            }
            if e.right_action.len() != n || e.left_action.len() != n {
                return Err(schema(what(&format!("need {n} right and {n} left action matrices"))));
            }
            let right = e
                .right_action
                .iter()
                .map(|x| matrix_from_json(x, m, m, &what("right action")))
                .collect::<Result<Vec<_>>>()?;
            let left = e
                .left_action
                .iter()
                .map(|x| matrix_from_json(x, m, m, &what("left action")))
                .collect::<Result<Vec<_>>>()?;
            generators.push(
                Correspondence::new(algebra.clone(), m, slices, right, left).map_err(|e| schema(e.to_string()))?,
            );
        }

        let mut flips = BTreeMap::new();
        for (key, m) in &self.flips {
            let parts: Vec<&str> = key.split(',').map(str::trim).collect();
            let (i, j) = match parts.as_slice() {
                [a, b] => match (a.parse::<usize>(), b.parse::<usize>()) {
                    (Ok(i), Ok(j)) if 1 <= i && i < j && j <= self.k => (i - 1, j - 1),
                    _ => return Err(schema(format!("bad flip key {key:?}"))),
                },
                _ => return Err(schema(format!("bad flip key {key:?}"))),
            };
            let dim = generators[i].dim() * generators[j].dim();
            flips.insert((i, j), matrix_from_json(m, dim, dim, &format!("flip {key}"))?);
        }
        for i in 0..self.k {
            for j in i + 1..self.k {
                if !flips.contains_key(&(i, j)) {
                    return Err(schema(format!("missing flip {}", flip_key(i, j))));
                }
            }
        }

        let r = &self.representation;
        let d = r.h_dim;
        if r.sigma.len() != n {
            return Err(schema(format!("sigma needs {n} matrices")));
        }
        let sigma_images = r
            .sigma
            .iter()
            .map(|x| matrix_from_json(x, d, d, "sigma"))
            .collect::<Result<Vec<_>>>()?;
        let sigma = AlgebraRepresentation::new(algebra.clone(), d, sigma_images).map_err(|e| schema(e.to_string()))?;
        if r.t.len() != self.k {
            return Err(schema(format!("T needs operators for {} generators", self.k)));
        }
        let mut maps = Vec::with_capacity(self.k);
        for (g, (ts, e)) in r.t.iter().zip(&generators).enumerate() {
            if ts.len() != e.dim() {
                return Err(schema(format!("T for generator {} needs {} operators", g + 1, e.dim())));
            }
            maps.push(
                ts.iter()
                    .map(|x| matrix_from_json(x, d, d, &format!("T for generator {}", g + 1)))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Instance {
            algebra,
            generators,
            flips,
            sigma,
            maps,
        })
    }
}
