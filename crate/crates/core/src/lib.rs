//! Simulation and analysis toolkit for directed polymers in random environment.
//!
//! The crate computes exact quenched endpoint distributions and free energies
//! per sampled disorder via the one-step transfer recursion, and provides the
//! partitioned-subprobability-measure machinery used to study their limits:
//! the quotient space with its isometry metric, constructive profile
//! extraction, the one-step update map with its energy functional, and
//! Wasserstein distances between empirical measures of endpoint snapshots.
//!
//! Module map:
//! - [`disorder`]: disorder laws, log moment generating functions, counter-based sampling
//! - [`lattice`]: dense endpoint recursion on the parity diamond, per-step diagnostics
//! - [`pspm`]: partitioned subprobability measures and their functionals
//! - [`metric`]: isometries, the metric `d`, and the test-function metric `D`
//! - [`profiles`]: profile extraction from snapshot sequences (concentration compactness at finite scale)
//! - [`dynamics`]: the update map as a sampler and the energy functional `R`
//! - [`empirical`]: empirical measures of snapshots and assignment-based Wasserstein distance

pub mod assignment;
pub mod disorder;
pub mod dynamics;
pub mod empirical;
pub mod error;
pub mod field;
pub mod lattice;
pub mod metric;
pub mod profiles;
pub mod pspm;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
