//! Reliability analysis for RAID storage arrays.
//!
//! An array of N data drives and M check drives survives any M concurrent
//! drive failures and loses data on the (M+1)-th. This crate models the
//! failure/repair process as a continuous-time Markov chain with one
//! absorbing FAIL state and computes, for six model variants:
//!
//! - PDL_t, the probability that data has been lost by deployment time t
//!   (the mass in FAIL), and
//! - MTTDL, the mean time to data loss (the mean absorption time),
//!
//! by three mutually checking routes: closed forms where they exist
//! ([`closed_form`]), a uniformization-based transient solver plus
//! resolvent-style moment solves ([`solver`]), and discrete-event Monte
//! Carlo ([`sim`]). Delayed-repair variants, which are not Markov, get a
//! method-of-steps integrator for the governing delay differential
//! equation, an age-structured rebuild solver, and characteristic roots via
//! the Lambert W function ([`delay`], [`lambert`]).
//!
//! Conventions used throughout: generators follow the column convention
//! dq/dt = A q (columns sum to zero; see [`generator`]), and all rates are
//! per year with 1 year = 8760 hours = 365 days.

pub mod closed_form;
pub mod config;
pub mod delay;
pub mod error;
pub mod generator;
pub mod lambert;
pub mod model;
pub mod sector;
pub mod sim;
pub mod solver;

pub use closed_form::{
    beta_transform_params, delay_naive_mttdl, model_pdl_at_horizon, no_repair_mttdl,
    no_repair_mttdl_approx, no_repair_pdl, no_repair_pdl_eigen, normal_approx_pdl,
    pde_rebuild_mttdl, raid5_moments, silent_corruption_pdl, BetaParams,
};
pub use config::{RaidConfig, DAYS_PER_YEAR, HOURS_PER_YEAR};
pub use delay::{
    build_raid5_delay, count_extrema, dde_integrate, dde_mttdl, pde_rebuild_integrate,
    DelaySystem,
};
pub use error::{Error, Result};
pub use generator::{Generator, StateSpace, StateSpace1D};
pub use lambert::{lambert_characteristic_roots, lambert_w};
pub use model::{build_generator, ModelKind};
pub use sector::SectorStateSpace;
pub use sim::{beta_ks_check, beta_ks_check_with, simulate, SimResult};
pub use solver::{
    evolve, evolve_from, moments_via_resolvent, mttdl_via_reliability_integral, pdl_curve,
    MomentReport, Trajectory,
};
