//! Long-time asymptotics of the viscous Burgers equation
//! `f_t + f f_x - f_xx = 0` with slowly decaying power-law initial data.
//!
//! The crate evaluates the exact solution through the Hopf–Cole formula in
//! self-similar variables, computes the discontinuous limit profile and its
//! critical point, extracts the next-order corrections at the discontinuity,
//! and cross-checks everything against a direct finite-difference solver.

pub mod asymptotics;
pub mod critical;
pub mod error;
pub mod initial_data;
pub mod landscape;
pub mod pde_oracle;
pub mod hopf_cole;
pub mod quadrature;
pub mod roots;

pub use asymptotics::{
    extrapolate, nested_partial_sum, nested_residual, q_estimate, rate_fit, Extrapolation, RateFit,
    Tolerances, ZoomFrame,
};
pub use critical::{
    find_zc, finite_t_maxima, h_infinity, p_correction, profile_p, y_star, y_star_prime, Branch,
    CriticalStructure, LeadingTail,
};
pub use error::{Error, Result};
pub use hopf_cole::{
    laplace_approximation, physical_solution, rescaled_solution, QuadratureOptions, SolutionSample,
};
pub use initial_data::{Channel, FamilyKind, FamilySpec, PowerTail, TailFamily};
pub use landscape::{
    ht_eval, max_gap, scan_landscape, CriticalPoint, Frame, LandscapeReport, PhaseChannel,
    PointKind,
};
pub use pde_oracle::{compare, integrate, OracleGrid};
