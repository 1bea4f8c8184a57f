//! Power-weighted Euclidean functionals on point sets in a cube: minimal
//! matching, minimal spanning tree and traveling-salesman tour, their
//! boundary-rooted duals, and Monte Carlo experiments on their growth.

pub mod audit;
pub mod boundary;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Result};
