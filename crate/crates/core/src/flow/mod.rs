//! Finite-dimensional surrogate of the Coulomb-slice configuration space:
//! spectral model, functional, gradient dynamics, residual gauge translation,
//! smoothed projections, transverse cut functions and spectral flow.

pub mod dynamics;
pub mod model;
pub mod spectral;
pub mod transverse;

pub use dynamics::{
    apply_t, apply_t_inverse, csd_value, find_critical_points, flatten, gradient, hessian,
    integrate_trajectory, linear_part, nonlinear_part, project, projected_negative_gradient,
    projection_factor, solve_dense, symmetric_eigenvalues, unflatten, CriticalPoint,
    CriticalPointReport, FlowError, SearchBox, Trajectory, TrajectorySample,
};
pub use model::{
    translate_point_ideal, DesuspensionLedger, ModelError, Point, Region, SpectralModel,
    ToyCsdParams, T_EXACT_COUPLING,
};
pub use spectral::{spectral_flow, spectral_flow_sampled};
pub use transverse::{
    build_transverse_function, transport_transverse_function, RampProfile, TransverseCertificate,
    TransverseFunction, TransverseSampling, TransverseSign,
};
