//! Exact and heuristic solvers for the continuous multifacility monotone
//! ordered median problem: place `p` facilities in ℝᵈ so that a monotone
//! ordered weighted sum of closest-facility distances is minimal.
//!
//! The exact method is a branch-and-price over a set-partitioning master
//! problem ([`bnp`]). Columns are priced by a certified spatial
//! branch-and-bound over the facility position together with fast sign-rule
//! and independent-set heuristics ([`pricer`]). The matheuristics in
//! [`matheur`] reuse the same machinery, and [`oracle`] contains brute-force
//! reference solvers for tiny instances.

pub mod bnp;
pub mod branching;
pub mod error;
pub mod master;
pub mod matheur;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod pricer;
pub mod simplex;

pub use error::{Error, Result};
pub use model::{Instance, LambdaKind, LambdaVector, NormSpec, Point, Solution};
