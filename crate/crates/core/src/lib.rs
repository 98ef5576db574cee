//! Joint transmit/receive antenna-port selection for fluid-MIMO links.
//!
//! The crate generates spatially correlated fluid-antenna channels, evaluates
//! Shannon capacity of port selections, solves the joint convex (LP)
//! relaxation of the selection problem with an in-repo interior-point method,
//! and implements five selection strategies:
//!
//! * exhaustive search (the exact optimum),
//! * relaxation + reduced exhaustive search over the best-scored ports,
//! * relaxation + alternating per-antenna optimization,
//! * best of random selections, and the first-port "conventional MIMO" baseline.
//!
//! [`harness`] runs paired Monte Carlo sweeps and writes CSV results; the
//! `fluid-mimo` binary wraps all of it.

pub mod bessel;
pub mod capacity;
pub mod channel;
pub mod cli;
pub mod error;
pub mod harness;
pub mod jcr;
pub mod selection;

pub use capacity::{
    capacity, capacity_q_form, capacity_upper_bound, extract_effective, surrogate_u, CapacityWorkspace,
    EffectiveChannel, PortSelection,
};
pub use channel::{
    correlation_profile, generate_channel, load_channel, save_channel, CorrelationProfile, Dims,
    FluidMimoConfig, OverallChannel,
};
pub use error::{Error, Result};
pub use jcr::{build_lp, solve_jcr, LpProblem, RelaxedSolution, SolverStats};
pub use selection::{
    ao_round, conventional_mimo, exhaustive_search, jcr_ao, jcr_res, random_selection, Algorithm,
    SelectionResult,
};
