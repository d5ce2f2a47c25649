//! The simplified articulated human body: canonical configurations, the
//! scaling rule, and the posture scoring functions.

pub mod model;
pub mod scoring;
pub mod spec;

pub use model::{
    base_pose_for_pelvis, build_agent, build_agent_with_scale, forward_kinematics,
    measure_configuration, measure_theta, spawn_agent, AgentConfiguration, AgentModel,
    SpawnedAgent,
};
pub use scoring::{
    contact_profile, joint_angle_score, link_rotation_score, sitting_height, ContactProfile,
};
pub use spec::{AgentSpec, JointGroup, LinkShape, ScaleRule, ScoreWeights, DOF_COUNT, LINK_COUNT};
