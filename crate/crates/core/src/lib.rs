//! Probabilistically near-optimal PRM* / k-PRM*.
//!
//! The planner uses a connection constant large enough that, at every finite
//! sample count, closed-form bounds describe how close the returned path is
//! to the optimum and how likely that is:
//!
//! * [`geometry`]: ball volumes, sine-power integrals, ball sampling and the
//!   segment/path moment approximations,
//! * [`cspace`]: box-bounded scenes with box and ball obstacles,
//! * [`planner`]: roadmap growth, queries and the greedy spanner,
//! * [`analysis`]: coverage, Chebyshev factor, near-optimality bound,
//!   `delta_n` and the stopping iteration,
//! * [`oracles`]: Monte Carlo and grid estimators used as references.

pub mod analysis;
pub mod cspace;
pub mod error;
pub mod geometry;
pub mod oracles;
pub mod planner;
pub mod rng;

pub use analysis::{BallTiling, PnoBound, PnoReport, StoppingResult, StoppingSpec};
pub use cspace::{Bounds, Configuration, Obstacle, Scene};
pub use error::{PnoError, Result};
pub use geometry::MomentInputs;
pub use oracles::McEstimate;
pub use planner::{ConnectionMode, PlannerParams, QueryResult, Roadmap};
