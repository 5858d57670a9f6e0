//! Burke's output theorem for the M/M/1 queue as a measure-preserving map.
//!
//! The crate implements the discrete transform `T` on `{-1, +1}` spin
//! sequences, its coding by queue lengths at the origin (and the decoder that
//! inverts it), exact enumeration checks, continuous-time and Brownian
//! counterparts, and the iterated-random-function generalisation, together
//! with the statistical suites that verify them.

pub mod coding;
pub mod continuum;
pub mod error;
pub mod irf;
pub mod oracle;
pub mod stats;
pub mod transform;
pub mod walk;

pub use error::{Error, Result};
pub use transform::{inverse_t, iterate_t, reverse_r, transform_t, SeedPolicy, TransformResult};
pub use walk::{ModelParams, Spin, SpinWindow};
