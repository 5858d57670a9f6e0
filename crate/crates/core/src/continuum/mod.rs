//! Continuous-time counterparts of the discrete transform: the M/M/1 queue
//! with its departure and residual processes, and drifted Brownian motion
//! reflected at its running maximum.

pub mod brownian;
pub mod mm1;

pub use brownian::{
    brownian_burke_transform, brownian_checks, simulate_two_sided_bm, BrownianConfig, BrownianGrid,
};
pub use mm1::{
    burke_checks_mm1, extract_embedded_walk, run_queue, simulate_mm1, Event, EventStream, Mark,
    Mm1Params, Mm1Sample, PointProcess, QueueTrajectory, Role,
};
