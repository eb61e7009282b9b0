//! Core algorithms for studying adaptation in genetic algorithms with
//! uniform crossover.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides:
//!
//! * [`population`]: packed bit populations and chromosome views,
//! * [`rng`]: the seeded, splittable [`RandomStream`](rng::RandomStream),
//! * [`staircase`]: staircase fitness functions and their analytic signals,
//! * [`schema`]: schema models, effects and fitness signals,
//! * [`hyperclimb`]: an explicit decimation loop (the reference heuristic),
//! * [`uga`]: the uniform-crossover GA with sigma scaling, SUS and clamping,
//! * [`problems`]: MAX-3SAT and Sherrington-Kirkpatrick backends,
//! * [`refractal`]: refractal addressing and grid rendering.
//!
//! Loci are 0-based throughout the Rust API. Text formats in the companion
//! crate use 1-based indices.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod fitness;
pub mod hyperclimb;
pub mod population;
pub mod problems;
pub mod refractal;
pub mod rng;
pub mod schema;
pub mod staircase;
pub mod uga;

pub use error::{Error, Result};
pub use fitness::Fitness;
pub use population::{BitString, Bits, Population};
pub use rng::RandomStream;
