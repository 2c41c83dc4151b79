//! Drift-plus-penalty scheduling for Markov-modulated queueing networks.
//!
//! The crate simulates networks whose controllable Markov state `z(t)` (here the
//! buffer levels of finite, delay-constrained queues) renews either naturally or
//! through random forced resets. At every renewal the queue backlogs are frozen
//! and a weighted stochastic shortest path problem over the coming frame is
//! solved, exactly or with sampled Robbins-Monro iterations, and its greedy
//! policy is played until the next renewal.
//!
//! Module map:
//! - [`model`]: instance description, action sets, slot dynamics and penalties
//! - [`tables`]: flat precomputed tables used by the solvers
//! - [`queues`]: queue updates, Lyapunov function, drift constants, FIFO delays
//! - [`ssp`]: stage costs, the frame operator, exact and sampled solvers
//! - [`scheduler`]: renewal detection, frame loop, history sampling
//! - [`auxiliary`] and [`convex`]: the convex-objective extension
//! - [`oracle`]: occupation-measure linear programs and performance bounds
//! - [`experiment`]: configuration files, replications and output files

pub mod auxiliary;
pub mod convex;
pub mod error;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod queues;
pub mod rng;
pub mod scheduler;
pub mod ssp;
pub mod tables;

pub use error::{Error, Result};
