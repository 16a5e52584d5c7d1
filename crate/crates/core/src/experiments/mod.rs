//! Random-game batches, metric tables and Pareto fronts.

mod batch;
mod generator;
pub mod pareto;
pub mod report;

pub use batch::{run_batch, Algorithm, BatchConfig, BatchReport, Failure, GameRecord, MetricRow, PolicyMetrics, Stat};
pub use generator::{generate_game, GeneratorSpec, XiMode};
pub use pareto::{pareto_front, ParetoPoint};
