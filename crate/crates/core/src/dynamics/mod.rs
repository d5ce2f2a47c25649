//! Deterministic fixed-timestep rigid-body simulation: free and articulated
//! bodies, contact generation, and impulse-based constraint solving with
//! Coulomb friction and restitution.
//!
//! A `World` is single-threaded; distinct worlds share no mutable state and
//! may run fully in parallel.

pub mod body;
pub mod contact;
pub mod joint;
pub mod shape;
pub mod solver;
pub mod world;

pub use body::{groups, Body, BodyId, BodyKind, Material};
pub use contact::{ContactPoint, CONTACT_MARGIN};
pub use joint::{HingeDof, Joint};
pub use shape::{CollisionShape, ConvexShape};
pub use solver::{StepStats, PENETRATION_SLOP, RESTITUTION_THRESHOLD};
pub use world::{
    is_settled, run_plain, run_until, FrameRecorder, SettleThresholds, Trajectory, World,
    WorldParams, DEFAULT_TIMESTEP, SETTLE_WINDOW,
};
