//! State-constrained optimal control of a double integrator with an
//! `L^q` penalty on the acceleration.
//!
//! * [`auxpb`]: closed-form solution of the one-dimensional braking problem.
//! * [`valuefn1d`]: closed-form value functions on the half-line and on
//!   `[-1, 1]`, their derivatives and optimal trajectories.
//! * [`directopt`]: a direct discretized trajectory optimizer used as an
//!   independent oracle, in any dimension.
//! * [`geometry`]: convex constraint domains.
//! * [`mfg`]: fictitious play for the mean-field game on particle clouds.

pub mod auxpb;
pub mod config;
pub mod costs;
pub mod directopt;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mfg;
pub mod numeric;
pub mod oracle;
pub mod params;
pub mod trajectory;
pub mod valuefn1d;

pub use error::{Error, Result};
pub use params::ControlParams;
pub use trajectory::Trajectory;
