//! The degenerate elliptic problem on the strip `Ω = ℝ × (0, π/2)`.

mod derivatives;
mod field;
mod grid;
pub mod manufactured;
mod profile;
mod solver;

pub use derivatives::{fd_weights, fit_decay_constant, DecayFit, FieldInterpolant, StripJet};
pub use field::{ExtendedField, StripField, NEUMANN_REFLECT_TOL};
pub use grid::{StripGrid, DEFAULT_HALF_WIDTH, DEFAULT_N_R, DEFAULT_N_S};
pub use profile::BoundaryProfile;
pub use solver::{
    apply_operator, solve_bvp, solve_bvp_with_comparison, solve_dirichlet, BoundaryData, SolveStats, StripCoefficients,
    SOLVE_TOL,
};
