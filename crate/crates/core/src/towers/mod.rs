//! Towers of graded Z[U]-modules realizing the homology-level co- and
//! pro-limits of the index construction, plus the scenario pipeline that
//! assembles them from the model flow.

pub mod limits;
pub mod scenario;
pub mod swf;

pub use limits::{
    colimit, compose, inverse_limit, subgroup_structure, Direction, InverseOutcome, ModuleTower,
    TowerError, TowerPeriodicity,
};
pub use scenario::{CutFamily, QuotientFlow, Regime, Scenario, WindowComputation};
pub use swf::{assemble_swf, compare_j, cut_invariance, stabilization_check, SwfReport};
