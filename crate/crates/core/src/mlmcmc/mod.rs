//! Multilevel Markov chain Monte Carlo.

pub mod aterms;
pub mod estimator;
pub mod model;
pub mod schedule;

pub use aterms::{a_terms, indicator, ATerms, BlockMeans};
pub use estimator::{estimate, reference, single_level, EstimatorOptions, MlEstimate};
pub use model::{AtomModel, Evaluation, LevelSpec, MultilevelModel, PdeModel, Qoi};
pub use schedule::{Depth, DirectionWeights, LevelSchedule, ScheduleParams, WeightParams, WeightRegime};
