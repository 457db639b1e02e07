//! Cost-aware scheduling for serverless functions.
//!
//! The pipeline has three stages:
//!
//! 1. [`minisl`] parses function sources and checks that they are well formed.
//! 2. [`inference`] derives a guarded [`program::CostProgram`] from a function,
//!    and [`solver`] turns it into a closed-form [`cost::CostExpr`], evaluates
//!    it concretely, or exports it for external cost analysers.
//! 3. [`capp`] parses cAPP scheduling scripts and [`scheduler`] executes them
//!    over a fleet of workers, one request at a time or as a discrete-event
//!    simulation.
//!
//! See the crate's `examples/` directory for one runnable program per stage.

pub mod capp;
pub mod cost;
pub mod diagnostic;
pub mod inference;
pub mod minisl;
pub mod poly;
pub mod presburger;
pub mod program;
pub mod rational;
pub mod scheduler;
pub mod solver;
pub mod span;

mod syntax;

pub use diagnostic::{Diagnostic, Severity};
pub use rational::Rational;
