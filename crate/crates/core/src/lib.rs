//! Genetic algorithm with upper-bound (bandit) parent selection, five
//! classical selection baselines, and two benchmark problems: the Team
//! Orienteering Problem and the Quadratic Assignment Problem.
//!
//! ```
//! use std::time::Duration;
//! use ubsga::{run_ga, GaParams, QapInstance, StrategyId};
//!
//! let flow = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]];
//! let dist = vec![vec![0.0, 5.0, 1.0], vec![5.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]];
//! let inst = QapInstance::from_rows(&flow, &dist).unwrap();
//! let params = GaParams {
//!     population_size: 10,
//!     elite_fraction: 0.2,
//!     max_generations: Some(5),
//!     time_limit: Duration::from_secs(5),
//!     ..GaParams::default()
//! };
//! let result = run_ga(&inst, &params, StrategyId::Ubs).unwrap();
//! assert!(result.best.genotype.is_permutation());
//! ```

pub mod bench_io;
pub mod error;
pub mod ga;
pub mod harness;
pub mod metrics;
pub mod problem;
pub mod qap;
pub mod selection;
pub mod top;

pub use error::{Error, Result};
pub use ga::{
    run_ga, run_ga_with, Chromosome, Clock, GaParams, GenerationObserver, Population, RunResult, TracePoint,
    VirtualClock, WallClock,
};
pub use problem::{Direction, Problem};
pub use qap::{QapInstance, QapSolution};
pub use selection::ubs::UbsState;
pub use selection::{SimilarityMatrix, StrategyId};
pub use top::{TopInstance, TopSolution, Vertex};
