//! Per-object reports. Serialization is deterministic for identical
//! (input, config, seed): struct field order is fixed and timings are
//! opt-in so default reports are byte-identical across runs and worker
//! counts.

use serde::{Deserialize, Serialize};

use crate::harness::config::PipelineConfig;
use crate::se3::Pose;

pub const REPORT_SCHEMA: &str = "report/v1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PoseRecord {
    /// Orientation quaternion (w, x, y, z).
    pub quaternion: [f64; 4],
    /// Body-frame (center of mass) position, meters.
    pub position: [f64; 3],
}

impl PoseRecord {
    pub fn from_pose(pose: &Pose) -> PoseRecord {
        let q = pose.rotation.to_quaternion();
        PoseRecord {
            quaternion: [q.w, q.i, q.j, q.k],
            position: [pose.translation.x, pose.translation.y, pose.translation.z],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StablePoseRecord {
    pub pose: PoseRecord,
    pub source_roll: f64,
    pub source_pitch: f64,
    pub correct_count: usize,
    pub mean_height: f64,
    pub mean_joint_score: f64,
    pub mean_link_score: f64,
    pub selection_key: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub yaw: f64,
    pub slot: usize,
    pub joint_score: f64,
    pub link_score: f64,
    pub sitting_height: f64,
    pub contacts: [usize; 4],
    pub correct: bool,
    pub failed: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ReportFlags {
    /// Mass properties fell back to the convex hull (open mesh).
    pub hull_mass_fallback: bool,
    /// Convex decomposition missed its coverage target; best attempt used.
    pub decomposition_incomplete: bool,
    /// Number of trials lost to diverged simulations.
    pub diverged_trials: usize,
    /// Euler extraction hit the gimbal-lock band somewhere.
    pub gimbal_lock_seen: bool,
    /// Sitting quality hit the perfect-match degeneracy.
    pub degenerate_quality: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: u64,
    pub geometry_ms: u64,
    pub stable_poses_ms: u64,
    pub trials_ms: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub object_id: String,
    /// "ok" or an error description; errors leave the decision empty.
    pub status: String,
    pub is_chair: Option<bool>,
    /// Sitting quality of the candidate pose, m^2/rad.
    pub quality: Option<f64>,
    pub correct_count: Option<usize>,
    /// Candidate functional pose (body frame) when classified a chair.
    pub functional_pose: Option<PoseRecord>,
    /// File-frame unit vector pointing up in the functional pose, for
    /// comparison against annotations.
    pub functional_up_file: Option<[f64; 3]>,
    /// Center-of-mass height in the functional pose, meters.
    pub functional_com_height: Option<f64>,
    /// The random orientation applied before the pipeline, if any.
    pub applied_orientation: Option<PoseRecord>,
    pub agent_scale: Option<f64>,
    pub stable_poses: Vec<StablePoseRecord>,
    /// Per-trial details, emitted only in verbose mode.
    pub trials: Option<Vec<Vec<TrialRecord>>>,
    pub flags: ReportFlags,
    /// Populated only when timing capture is requested.
    pub timings: Option<Timings>,
    pub config_hash: String,
    pub config: PipelineConfig,
}

impl Report {
    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> crate::Result<Report> {
        Ok(serde_json::from_str(text)?)
    }

    /// The embedded config must hash to the recorded value.
    pub fn verify_config_hash(&self) -> bool {
        self.config.hash() == self.config_hash
    }
}

/// Quality serialputs +inf through JSON; map the sentinel explicitly.
pub fn quality_for_report(s: f64) -> f64 {
    if s.is_infinite() {
        f64::MAX
    } else {
        s
    }
}
