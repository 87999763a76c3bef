//! Radially symmetric self-similar blowing-up profiles of the critical
//! degenerate Patlak-Keller-Segel (Smoluchowski-Poisson) system.
//!
//! The crate solves the associated shooting problem
//! `u'' + (d-1)/r u' + |u|^{p-1} u - 1 = 0`, `u(0) = a`, `u'(0) = 0` with
//! `p = d/(d-2)`, locates the critical shooting height separating globally
//! positive profiles from compactly supported ones, tabulates the admissible
//! mass window, and reconstructs the physical space-time solution together
//! with its verification diagnostics (energy law, sensitivity structure,
//! first-integral constancy).

pub mod error;
pub mod lane_emden;
pub mod mass_curve;
pub mod ode;
pub mod params;
pub mod profile;
pub mod quad;
pub mod shooting;
pub mod verify;

pub use error::{Error, Result};
pub use lane_emden::{lane_emden, LaneEmdenResult};
pub use mass_curve::{mass_of, scan, thresholds, MassCurve, MassCurvePoint};
pub use ode::{
    energy, integrate, integrate_forced, Event, EventKind, IntegratorControls, ShootState,
    StopRule, Trajectory,
};
pub use params::ModelParams;
pub use profile::{
    build_profile, check_j, evaluate_solution, GridSpec, ProfileTable, SolutionEvaluator,
    SolutionSample,
};
pub use shooting::{
    classify, default_bracket, dr_da, find_critical, first_zero, positivity_components,
    theta_zero, Classification, CriticalResult,
};
pub use verify::{run_suite, CheckReport};
