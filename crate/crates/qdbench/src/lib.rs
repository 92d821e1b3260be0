//! Benchmark library for comparing lexicase selection over subaggregated
//! objectives against MAP-Elites on deceptive and illumination domains.
//!
//! The library is organized around a small data flow: a [`domain::Domain`]
//! evaluates a genome into a [`subagg::Trajectory`], `subagg` turns the
//! trajectory's per-step rewards into an objective vector, `selection`
//! and `archive` consume those to drive the two search algorithms, and
//! `runner` orchestrates replicated experiments and writes metrics.

pub mod archive;
pub mod config;
pub mod domain;
pub mod error;
pub mod evo;
pub mod knights;
pub mod maze;
pub mod rng;
pub mod runner;
pub mod selection;
pub mod subagg;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
