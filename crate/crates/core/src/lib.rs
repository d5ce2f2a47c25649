//! Sitting-affordance analysis for triangle meshes.
//!
//! Given an arbitrarily oriented 3D mesh, the library decides whether the
//! object can be sat on by a typical human and, if so, in which resting pose.
//! The decision is made by simulation rather than appearance: the object is
//! dropped on a flat plane to discover its stable poses, then a passive
//! articulated human body is dropped onto each stable pose and the resulting
//! postures are scored.
//!
//! Module map:
//! - [`se3`]: rotations, poses, Euler conventions, rotation metrics.
//! - [`geometry`]: mesh I/O, convex hull, oriented bounding boxes,
//!   approximate convex decomposition, mass properties.
//! - [`dynamics`]: deterministic fixed-timestep rigid-body simulation with
//!   contacts, Coulomb friction, restitution, and hinge joints.
//! - [`agent`]: the simplified human body, its scaling rule, and the
//!   posture scoring functions.
//! - [`imagination`]: the two-stage pipeline (stable poses, sitting trials)
//!   and the chair decision predicate.
//! - [`harness`]: configuration, reports, the procedural test corpus, and
//!   batch evaluation.

pub mod agent;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod imagination;
pub mod parallel;
pub mod se3;

pub use error::{Error, Result};
