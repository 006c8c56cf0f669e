//! Exact integer and Z[U]-module linear algebra underlying every homology
//! computation in the workspace.

pub mod chain;
pub mod matrix;
pub mod module;
pub mod snf;
pub mod sparse;

pub use chain::{homology, homology_with_basis, induced_map, AlgebraError, ChainComplex, DegreeHomology};
pub use matrix::IntMatrix;
pub use module::{
    check_exact, localize_u, map_is_iso, map_is_iso_at, tables_isomorphic, tables_isomorphic_shifted,
    validate_map, Component, ExactnessReport, GradedZUModule, Localization, ModuleError, ModuleMap,
};
pub use snf::{kernel_basis, smith_normal_form, solve, SmithDecomposition};
pub use sparse::{ReducedHomology, SparseChain, SparseComplex};
