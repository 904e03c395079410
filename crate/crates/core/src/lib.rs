//! Constrained plasma problem on the unit-volume ball.
//!
//! Solves `-Δψ = [α + λψ]₊^p` in the ball `B_{R_N}` of volume one, with
//! `ψ = 0` on the boundary and the unit-mass constraint `∫[α + λψ]₊^p = 1`.
//! The ball branch is explicit through the Lane-Emden profile `u₀`; an
//! independent bordered Newton solver, a weighted spectral module and the
//! map to the Gelfand problem `-Δv = μ(1 + v)^p` cross-check it.

pub mod ball_branch;
pub mod error;
pub mod gelfand;
pub mod lane_emden;
pub mod radial_core;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use ball_branch::{BallBranch, BranchPoint, Regime};
pub use error::{Error, Result};
pub use gelfand::{
    bell_curve, lambda_grid, to_gelfand, BellCurve, BellRow, GelfandPoint, TurningRecord,
};
pub use lane_emden::{build_lane_emden, LaneEmdenTable};
pub use radial_core::{
    ball_integral, find_root_bracketed, make_grid, solve_tridiagonal, BallGeometry, RadialField,
    RadialGrid,
};
pub use solver::{
    continue_branch, derivative_fields, entropy_identity_defect, solve_along, solve_plasma,
    DerivativeFields, SolverSolution,
};
pub use spectral::{
    eigen_l, energy_inequality_slack, fourier_coefficients, fourier_relation_defect,
    sobolev_lambda, sobolev_lambda_oracle, stability_certificate, thresholds, ModeSpectrum,
    SobolevConstants, SpectralReport, StabilityCertificate,
};
pub use verify::{run_suite, Check, VerifyConfig};

/// Default node count for every grid in the crate.
pub const DEFAULT_GRID_N: usize = 2049;

/// Critical exponent `p_N = N/(N-2)`, infinite for `N = 2`.
pub fn critical_exponent(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        dim as f64 / (dim as f64 - 2.0)
    }
}

/// Rejects exponents outside the branch range `1 < p < p_N`.
pub fn check_branch_exponent(dim: usize, p: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
    }
    if !(p.is_finite() && p > 1.0 && p < critical_exponent(dim)) {
        return Err(Error::InvalidInput(format!(
            "exponent p = {p} outside (1, p_N) for N = {dim}"
        )));
    }
    Ok(())
}
