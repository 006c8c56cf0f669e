//! Conley index machinery on cubical grids: outer approximations of the time-h
//! flow map, certified index pairs, relative (and circle-equivariant) index
//! homology, attractor-repeller sequences and flow-reversal duality.

pub mod ar;
pub mod duality;
pub mod grid;
pub mod homology;
pub mod outer;
pub mod pair;

pub use ar::{attractor_repeller, attractor_repeller_of_pair, attractor_repeller_on_grid, AttractorRepeller, LevelSplit};
pub use duality::{reverse_flow_dual, DualityReport};
pub use grid::{faces_of_cube, CubicalGrid, FaceKey, FaceTable, GridError};
pub use homology::{
    build_cell_model, build_theory_complex, cohomology_table, conley_homology, connecting_map,
    format_table, induced_theory_map, module_of_table, relative_pair, table_is_zero,
    tables_equal_shifted, theory_homology, validate_cell_model, CellModel, ConleyIndex,
    RelativePair, TheoryComplex, TheoryHomology, TorusType,
};
pub use outer::{build_outer_map, estimate_lipschitz, flow_map, local_log_norm, local_log_norm_rows, FnFlow, OuterMap, OuterMapConfig, VectorFlow};
pub use pair::{build_index_pair, build_index_pair_from_outer, check_pair_conditions, ConleyError, IndexPair, PairCertificate};
