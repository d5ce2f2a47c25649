//! The two-stage imagination pipeline: stable-pose discovery by dropping
//! the object, then functional-pose discovery by dropping the agent onto
//! each stable pose, with aggregation and the chair decision predicate.

pub mod evaluate;
pub mod stable;
pub mod trial;

use serde::{Deserialize, Serialize};

use crate::dynamics::Material;
use crate::error::{Error, Result};
use crate::geometry::{MassProps, OrientedBox, TriMesh};
use crate::parallel::Execution;
use crate::se3::{EquivalenceThresholds, RotationMetric};

pub use evaluate::{
    chair_predicate, classify, evaluate_stable_pose, select_candidate, sitting_quality,
    ChairDecision, PoseScore,
};
pub use stable::{imagine_stable_poses, StablePose};
pub use trial::{is_correct_sitting, sitting_trial, TrialResult};

/// Thresholds of the correct-sitting and chair decision predicates.
///
/// `quality` (m^2/rad) and `min_correct` gate the chair decision as
/// `(S > quality OR N >= min_correct) AND S > quality_per_correct * N`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetectionThresholds {
    pub joint_score: f64,
    pub link_score: f64,
    /// Open interval (height_min, height_max) on the sitting height, in
    /// meters at agent scale 1; the band stretches with the agent scale.
    pub height_min: f64,
    pub height_max: f64,
    /// Minimum total contact points across head, chest, and thighs.
    pub contact_total: usize,
    /// S threshold, m^2/rad.
    pub quality: f64,
    /// N threshold.
    pub min_correct: usize,
    /// s threshold, m^2/rad.
    pub quality_per_correct: f64,
}

impl DetectionThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.height_min < self.height_max) {
            return Err(Error::Config("height_min must be below height_max".into()));
        }
        let positive = [
            self.joint_score,
            self.link_score,
            self.height_min,
            self.height_max,
            self.quality,
            self.quality_per_correct,
        ];
        if positive.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("detection thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Simulation-side knobs of the pipeline (thresholds, grids, materials).
#[derive(Clone, Debug)]
pub struct ImaginationConfig {
    pub metric: RotationMetric,
    pub equivalence: EquivalenceThresholds,
    /// Settle sums over the 50-pose window (rotation in the chosen metric,
    /// translation in meters).
    pub settle_rot_sum: f64,
    pub settle_pos_sum: f64,
    pub detection: DetectionThresholds,

    /// Roll/pitch grid: `steps` samples of 2*pi/`steps` over the full turn.
    pub drop_grid_steps: usize,
    /// Restrict pitch to [0, pi] (half cover) for speed.
    pub half_beta_cover: bool,
    pub drop_steps: u64,
    pub drop_clearance: f64,

    pub yaw_steps: usize,
    pub slot_count: usize,
    pub l_sit_factor: f64,
    pub agent_drop_clearance: f64,
    pub trial_steps: u64,

    pub ground_friction: f64,
    pub ground_restitution: f64,
    pub object_friction: f64,
    pub object_restitution: f64,

    pub velocity_iterations: usize,
    pub position_iterations: usize,

    pub execution: Execution,
    /// Directory for per-step scene-state dumps (one file per drop/trial).
    pub dump_frames: Option<std::path::PathBuf>,
}

impl Default for ImaginationConfig {
    fn default() -> Self {
        ImaginationConfig {
            metric: RotationMetric::Frobenius,
            equivalence: EquivalenceThresholds {
                rot_threshold: 0.25,
                z_threshold: 0.02,
            },
            settle_rot_sum: 0.12,
            settle_pos_sum: 0.01,
            detection: DetectionThresholds {
                joint_score: 3.5,
                link_score: 1.2,
                height_min: 0.30,
                height_max: 0.70,
                contact_total: 3,
                quality: 5.0,
                min_correct: 4,
                quality_per_correct: 0.1,
            },
            drop_grid_steps: 20,
            half_beta_cover: false,
            drop_steps: 1000,
            drop_clearance: 0.05,
            yaw_steps: 18,
            slot_count: 3,
            l_sit_factor: 0.25,
            agent_drop_clearance: 0.15,
            trial_steps: 1000,
            ground_friction: 0.5,
            ground_restitution: 1.0,
            object_friction: 0.5,
            object_restitution: 0.1,
            velocity_iterations: 20,
            position_iterations: 10,
            execution: Execution::default(),
            dump_frames: None,
        }
    }
}

impl ImaginationConfig {
    pub fn ground_material(&self) -> Material {
        Material {
            friction: self.ground_friction,
            restitution: self.ground_restitution,
        }
    }

    pub fn object_material(&self) -> Material {
        Material {
            friction: self.object_friction,
            restitution: self.object_restitution,
        }
    }

    pub fn settle_thresholds(&self) -> crate::dynamics::SettleThresholds {
        crate::dynamics::SettleThresholds {
            rot_sum: self.settle_rot_sum,
            pos_sum: self.settle_pos_sum,
            metric: self.metric,
        }
    }

    pub fn world_params(&self) -> crate::dynamics::WorldParams {
        crate::dynamics::WorldParams {
            velocity_iterations: self.velocity_iterations,
            position_iterations: self.position_iterations,
            ..Default::default()
        }
    }
}

/// An object prepared for imagination: canonicalized, decomposed, weighed.
#[derive(Clone, Debug)]
pub struct PreparedObject {
    /// OBB-canonical mesh (the body reference frame).
    pub mesh: TriMesh,
    pub obb: OrientedBox,
    pub mass_props: MassProps,
    pub shape: crate::dynamics::CollisionShape,
    /// Mass properties came from the convex hull because the mesh is open.
    pub hull_mass_fallback: bool,
}
