//! Exact auditing of calibration and multicalibration distances on finite domains.
//!
//! Everything is computed over [`rational::Rational`]; the only floating point
//! in the crate lives in report renderings and the estimator sample counts.

pub mod budget;
pub mod distances;
pub mod domain;
pub mod enumerate;
pub mod error;
pub mod estimators;
pub mod instances;
pub mod io;
pub mod landscape;
pub mod lp;
pub mod multiaccuracy;
pub mod rational;

pub use budget::Budget;
pub use distances::{DistanceResult, GeneratedPartition};
pub use domain::{
    conditional_l1, group_mass, l1_distance, validate, FiniteDomain, Instance, InstanceData,
    Marginal, PredictorVec, Subgroup, SubgroupCollection, ValidationReport, Violation,
};
pub use enumerate::{CalibratedSet, MulticalibratedSet, SetPartition};
pub use error::{Error, Result};
pub use rational::Rational;
