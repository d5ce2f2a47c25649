//! Pipeline configuration: schema-validated, hashable, embedded verbatim in
//! every report. Worker count and other run-time options live outside the
//! config so that reports stay byte-identical across execution modes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imagination::{DetectionThresholds, ImaginationConfig};
use crate::parallel::Execution;
use crate::se3::{EquivalenceThresholds, RotationMetric};

pub const CONFIG_SCHEMA: &str = "pipeline/v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema: String,
    pub metric: RotationMetric,

    /// Equivalently-stable thresholds, one rotation value per metric.
    pub equivalence_rot_frobenius: f64,
    pub equivalence_rot_geodesic: f64,
    pub equivalence_z: f64,

    /// Settle sums over the 50-pose window, one rotation value per metric.
    pub settle_rot_sum_frobenius: f64,
    pub settle_rot_sum_geodesic: f64,
    pub settle_pos_sum: f64,

    pub detection: DetectionThresholds,

    /// Object density, kg/m^3.
    pub density: f64,
    /// Maximum convex pieces for collision decomposition.
    pub decompose_budget: usize,
    /// Uniform pre-scale applied to every loaded mesh.
    pub pre_scale: f64,
    /// Apply a seeded uniform random orientation before the pipeline.
    pub random_orientation: bool,

    pub drop_grid_steps: usize,
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

    /// Path to an agent description file; empty uses the built-in body.
    pub agent_file: Option<String>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let im = ImaginationConfig::default();
        PipelineConfig {
            schema: CONFIG_SCHEMA.into(),
            metric: RotationMetric::Frobenius,
            equivalence_rot_frobenius: 0.25,
            // Chord/arc identity: theta = 2 asin(f / (2 sqrt(2))).
            equivalence_rot_geodesic: 2.0 * (0.25f64 / (2.0 * 2.0f64.sqrt())).asin(),
            equivalence_z: 0.02,
            settle_rot_sum_frobenius: 0.12,
            settle_rot_sum_geodesic: 0.12 / 2.0f64.sqrt(),
            settle_pos_sum: 0.01,
            detection: im.detection,
            density: 600.0,
            decompose_budget: 32,
            pre_scale: 1.0,
            random_orientation: true,
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
            agent_file: None,
            seed: 7,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &std::path::Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported config schema '{}', expected '{CONFIG_SCHEMA}'",
                self.schema
            )));
        }
        self.detection.validate()?;
        EquivalenceThresholds::new(self.equivalence_rot_frobenius, self.equivalence_z)?;
        EquivalenceThresholds::new(self.equivalence_rot_geodesic, self.equivalence_z)?;
        let positive = [
            self.settle_rot_sum_frobenius,
            self.settle_rot_sum_geodesic,
            self.settle_pos_sum,
            self.density,
            self.pre_scale,
            self.drop_clearance,
            self.l_sit_factor,
            self.agent_drop_clearance,
        ];
        if positive.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("lengths and densities must be positive".into()));
        }
        if self.drop_grid_steps == 0
            || self.yaw_steps == 0
            || self.slot_count == 0
            || self.decompose_budget == 0
            || self.drop_steps < 50
            || self.trial_steps < 50
        {
            return Err(Error::Config("grid sizes and step counts are too small".into()));
        }
        Ok(())
    }

    /// The rotation threshold pair for the configured metric.
    pub fn equivalence(&self) -> EquivalenceThresholds {
        let rot = match self.metric {
            RotationMetric::Frobenius => self.equivalence_rot_frobenius,
            RotationMetric::Geodesic => self.equivalence_rot_geodesic,
        };
        EquivalenceThresholds {
            rot_threshold: rot,
            z_threshold: self.equivalence_z,
        }
    }

    pub fn settle_rot_sum(&self) -> f64 {
        match self.metric {
            RotationMetric::Frobenius => self.settle_rot_sum_frobenius,
            RotationMetric::Geodesic => self.settle_rot_sum_geodesic,
        }
    }

    pub fn imagination(&self, execution: Execution) -> ImaginationConfig {
        ImaginationConfig {
            metric: self.metric,
            equivalence: self.equivalence(),
            settle_rot_sum: self.settle_rot_sum(),
            settle_pos_sum: self.settle_pos_sum,
            detection: self.detection,
            drop_grid_steps: self.drop_grid_steps,
            half_beta_cover: self.half_beta_cover,
            drop_steps: self.drop_steps,
            drop_clearance: self.drop_clearance,
            yaw_steps: self.yaw_steps,
            slot_count: self.slot_count,
            l_sit_factor: self.l_sit_factor,
            agent_drop_clearance: self.agent_drop_clearance,
            trial_steps: self.trial_steps,
            ground_friction: self.ground_friction,
            ground_restitution: self.ground_restitution,
            object_friction: self.object_friction,
            object_restitution: self.object_restitution,
            velocity_iterations: self.velocity_iterations,
            position_iterations: self.position_iterations,
            execution,
            dump_frames: None,
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
