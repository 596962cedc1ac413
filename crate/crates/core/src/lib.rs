//! Simulation core for a desk-scale bimanual lid-twisting task.
//!
//! The stack, bottom to top:
//!
//! - [`body`] — quaternion rigid-body state and semi-implicit integration.
//! - [`brake`] — the brake joint: breakaway/kinetic stiction on the lid's
//!   continuous revolute joint, the piece that makes a screwed-on lid feel
//!   like a screwed-on lid.
//! - [`shape`] / [`contact`] — sphere-vs-cylinder collision and a penalty
//!   contact model with regularized Coulomb friction.
//! - [`bottle`] — the two-link articulated bottle assembly.
//! - [`hand`] — two kinematic 16-DoF hands with PD-filtered joint targets
//!   and EMA action smoothing.
//! - [`env`] / [`vec_env`] — the 10 Hz control-rate task environment with
//!   reward shaping, domain randomization, and batched stepping.
//!
//! Everything is `f64`, value-semantic, and deterministic: identical seeds
//! produce bit-identical trajectories, sequentially or in parallel.

pub mod body;
pub mod bottle;
pub mod brake;
pub mod config;
pub mod contact;
pub mod env;
pub mod hand;
pub mod log;
pub mod math;
pub mod obs;
pub mod reward;
pub mod rng;
pub mod shape;
pub mod vec_env;

pub use body::{MassProperties, RigidBodyState, Wrench};
pub use bottle::{AppliedContact, BottleAssembly, ObjectSpec};
pub use brake::BrakeModel;
pub use config::{DomainRandomizationConfig, EnvConfig, ObjectSet, RewardWeights};
pub use contact::ContactParams;
pub use env::{EnvState, TwistEnv};
pub use hand::{HandConfig, HandModel, HandState};
pub use log::{DoneReason, LogRecord, Transition, TrajectoryHeader};
pub use obs::{Observation, PrivilegedObservation};
pub use shape::{ContactPoint, Cylinder, Link};
pub use vec_env::{ExecMode, VectorEnv};

use thiserror::Error;

/// Errors surfaced by the simulation core.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("degenerate cylinder: radius={radius}, height={height}")]
    DegenerateCylinder { radius: f64, height: f64 },
    #[error("empty keypoint set: {0}")]
    EmptyKeypoints(&'static str),
    #[error("zero-length vector: {0}")]
    ZeroLength(&'static str),
    #[error("episode reset failed after {attempts} placement attempts")]
    ResetFailed { attempts: u32 },
    #[error("config error: {0}")]
    Config(String),
}

pub type SimResult<T> = Result<T, SimError>;
