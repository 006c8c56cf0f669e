//! floerforge-core: exact-arithmetic Conley index machinery, a finite
//! dimensional model of the Chern-Simons-Dirac gradient flow, S^1-equivariant
//! homology over Z[U], module towers with co/pro-limits, and the triple cup
//! product obstruction calculator.

pub mod algebra;
pub mod conley;
pub mod equivariant;
pub mod flow;
pub mod obstruction;
pub mod towers;
