//! Finite-volume simulation of ant foraging with pheromone trails.
//!
//! Foraging ants `u` leave the nest, diffuse and climb pheromone gradients.
//! On meeting food `c` they turn into returning ants `w`, which head home
//! along a prescribed homing field while laying pheromone `v`. Pheromone
//! evaporates and diffuses; food is eaten away. All four fields live on a
//! uniform square grid with zero-flux boundaries and advance by explicit
//! Euler steps with donor-cell upwinding for the drift terms.
//!
//! Modules, bottom up: [`grid`] (storage and stencils), [`model`]
//! (coefficients and state), [`fluxes`] and [`reactions`] (right-hand
//! sides), [`stepper`] (time integration), [`scenario`] (config and initial
//! data), [`diagnostics`] (ledgers and trail events), [`output`] (files)
//! and [`cli`].

pub mod cli;
pub mod diagnostics;
pub mod fluxes;
pub mod grid;
pub mod model;
pub mod output;
pub mod reactions;
pub mod scenario;
pub mod stepper;

pub use diagnostics::{detect_events, trail_strength, EventLog, EventTime, TimeSeriesRow};
pub use grid::{Field2D, FaceFluxes, Grid, GridError, Point};
pub use model::{ModelParams, SimState, StepLimits, Topography};
pub use scenario::{build_initial_state, parse_config, validate, Scenario};
pub use stepper::{cfl_limits, run, step, RunReport, StepError, Termination};
