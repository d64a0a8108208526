//! Numerical toolkit for real-interpolation weight calculus on logarithmic
//! grids: bounded-oscillation weights and their Hardy averages, J-method
//! norms computed by convex minimization, commutators of couple operators
//! with weighted integral transforms, and ensemble verification harnesses
//! for the associated boundedness estimates.

pub mod cli;
pub mod commutators;
pub mod config;
pub mod error;
pub mod grid;
pub mod harness;
pub mod jmethod;
pub mod pairs;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
