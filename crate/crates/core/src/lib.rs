//! Model-free sequential design for expensive black-box functions with
//! Gaussian output noise.
//!
//! New evaluation points are chosen by combining two per-point scores over
//! the current design:
//!
//! * **exploration** ([`voronoi`]): the Monte-Carlo estimated volume of each
//!   point's Voronoi cell;
//! * **exploitation** ([`lola`]): how far the responses around each point
//!   deviate from a least-squares local linear fit.
//!
//! The [`sampler`] ranks points on the sum of both (normalized) scores and
//! places the next evaluation by maximin inside the winning cell. [`noise`]
//! holds the analysis of how output noise inflates the exploitation score,
//! and [`testbed`] the reference functions and design metrics.
//!
//! ```
//! use flola::{run, DesignSpace, FnEvaluator, SamplerConfig, testbed::peaks};
//!
//! let config = SamplerConfig::new(DesignSpace::cube(2, -3.0, 3.0).unwrap(), 12, 42);
//! let outcome = run(config, &mut FnEvaluator(|x: &[f64]| peaks(x[0], x[1]))).unwrap();
//! assert_eq!(outcome.design.len(), 12);
//! ```

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod design;
pub mod error;
pub mod exec;
pub mod lola;
pub mod noise;
pub mod sampler;
pub mod seed;
pub mod testbed;
pub mod voronoi;

pub use design::{
    initial_design, min_distance, Design, DesignSpace, EvaluatedPoint, InitialScheme,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use lola::{GradientEstimate, Neighborhood};
pub use noise::{NoiseSumSimulation, NoiseSumStats};
pub use sampler::{
    aggregate_scores, propose_next, rank, run, run_with, EvalFailure, Evaluator, FnEvaluator,
    Proposal, RunOutcome, RunState, SamplerConfig, ScoreTable, Strategy,
};
pub use voronoi::{ExplorationScores, MonteCarloPool};
