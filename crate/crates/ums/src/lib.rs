//! Scheduling of resource-consuming jobs on uniformly related machines.
//!
//! Jobs consume a non-renewable resource that is replenished at given
//! dates; the objective is a convex combination of the makespan and the sum
//! of the φ-th powers of the machine loads. This crate provides:
//!
//! * an approximation scheme built from geometric rounding, guessing of the
//!   approximate makespan, a configuration MILP solved by LP relaxation
//!   plus branch-and-bound, and a rounding-based extraction step;
//! * an exact rational feasibility verifier and objective evaluator;
//! * an exact brute-force oracle and a greedy baseline for tiny instances;
//! * an instance generator and a benchmark harness.
//!
//! All feasibility decisions are made in exact rational arithmetic.

pub mod cli;
pub mod config;
pub mod extract;
pub mod generate;
pub mod guess;
pub mod lp;
pub mod milp;
pub mod model;
pub mod normalize;
pub mod oracle;
pub mod pipeline;
pub mod rational;
pub mod rounding;

pub use model::{Instance, ObjectiveValue, Schedule, SchemeParams};
pub use rational::Rat;
