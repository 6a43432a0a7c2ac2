//! Completely contractive representations of product systems of
//! finite-dimensional C*-correspondences over ℕᵏ, their contractive
//! semigroup models on a truncated block space, and regular isometric
//! dilations built from positive Toeplitz kernels.

pub mod algebra;
pub mod correspondence;
pub mod dilation;
pub mod error;
pub mod families;
pub mod hat;
pub mod instance;
pub mod kernel;
pub mod lattice;
pub mod linalg;
pub mod pipeline;
pub mod prodsys;
pub mod report;
pub mod representation;

pub use algebra::{AlgebraElement, CStarAlgebra};
pub use correspondence::{descend_map, Correspondence, LocalizedSpace};
pub use error::{DilationError, Result};
pub use lattice::{Displacement, LatticePoint};
pub use prodsys::ProductSystem;
pub use report::{Check, Report};
pub use representation::{AlgebraRepresentation, CCRepresentation};
pub use hat::{HatOperator, TruncatedFock};
