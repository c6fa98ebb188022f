//! Interacting urn models with generalized reinforcement weights.
//!
//! * [`weights`]: weight sequences `u·∞^v` and the draw kernel
//! * [`state`]: urn counts, pair reduction, two-urn configuration classes
//! * [`simulate`]: seeded Monte Carlo of the interacting dynamics
//! * [`analytic`]: closed-form fixation probabilities
//! * [`oracle`]: truncated linear solves and exact enumeration
//! * [`cli`]: the `giurn` command-line front end

pub mod analytic;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod simulate;
pub mod state;
pub mod weights;

pub use error::{Error, Result};
pub use simulate::{ModelParams, RngStream};
pub use state::{classify, reduce_pair, ConfigClass, SystemState};
pub use weights::{draw_prob, WeightSequence, WeightTerm};
