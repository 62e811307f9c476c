//! Metalearning and multitask learning of halfspaces over shared linear
//! representations: exact separability oracles, non-realizability
//! certificates, few-samples-per-task metalearners, the meta/multitask
//! reductions, and Monte-Carlo checks of the quantitative bounds.

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod learners;
pub mod realizability;
pub mod reductions;
pub mod rng;
pub mod task_model;
pub mod theory_lab;

pub use error::{Error, Result};
pub use geometry::{Dataset, Halfspace, Label, LabeledPoint, LinearRep, RepDataset, TaskDataset};
pub use realizability::{Family, Verdict};
pub use learners::{MultitaskModel, SearchConfig, SearchOutcome};
pub use task_model::{MetaSample, SyntheticMeta};
