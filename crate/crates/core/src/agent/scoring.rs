//! Posture scoring: weighted L1 joint-angle distance, link rotation score,
//! sitting height, and per-link contact counts.
//!
//! All functions are pure; they read no simulation state beyond their
//! arguments. Weights escalate (default threefold) when a component's
//! deviation exceeds its escalation threshold.

use crate::agent::model::{AgentConfiguration, AgentModel, SpawnedAgent};
use crate::agent::spec::ScoreWeights;
use crate::dynamics::{BodyId, World};
use crate::error::{Error, Result};

/// Weighted L1 distance between joint angle vectors; the weight of a DoF
/// triples once its deviation exceeds the escalation threshold.
pub fn joint_angle_score(theta_res: &[f64], theta_key: &[f64], w: &ScoreWeights) -> Result<f64> {
    if theta_res.len() != theta_key.len() || theta_res.len() != w.joint.len() {
        return Err(Error::invalid("joint score vector lengths must match"));
    }
    if !theta_res.iter().chain(theta_key).all(|x| x.is_finite()) {
        return Err(Error::invalid("joint score inputs must be finite"));
    }
    let mut score = 0.0;
    for i in 0..theta_res.len() {
        let dev = (theta_res[i] - theta_key[i]).abs();
        let mut weight = w.joint[i];
        if dev > w.joint_escalation[i] {
            weight *= w.escalation_factor;
        }
        score += weight * dev;
    }
    Ok(score)
}

/// Link rotation score: sum of weighted z-axis dot deficits between the
/// resultant and key configurations, with threefold escalation.
pub fn link_rotation_score(
    c_res: &AgentConfiguration,
    c_key: &AgentConfiguration,
    w: &ScoreWeights,
) -> Result<f64> {
    if c_res.link_frames.len() != c_key.link_frames.len()
        || c_res.link_frames.len() != w.link.len()
    {
        return Err(Error::invalid("link score lengths must match"));
    }
    let mut score = 0.0;
    for i in 0..w.link.len() {
        let z_res = c_res.link_frames[i].rotation.column(2);
        let z_key = c_key.link_frames[i].rotation.column(2);
        let deficit = 1.0 - z_res.dot(&z_key);
        let mut weight = w.link[i];
        if deficit > w.link_escalation[i] {
            weight *= w.escalation_factor;
        }
        score += weight * deficit;
    }
    Ok(score)
}

/// Height of the pelvis link-frame origin above the ground.
pub fn sitting_height(c_res: &AgentConfiguration, model: &AgentModel, ground_z: f64) -> f64 {
    c_res.link_frames[model.pelvis].translation.z - ground_z
}

/// Contact point counts of head, chest, and the two thighs against the
/// object only (ground and other contacts excluded).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContactProfile {
    pub head: usize,
    pub chest: usize,
    pub thigh_l: usize,
    pub thigh_r: usize,
}

impl ContactProfile {
    pub fn total(&self) -> usize {
        self.head + self.chest + self.thigh_l + self.thigh_r
    }

    /// The back-and-seat clause: some head-or-chest contact and both thighs
    /// supported.
    pub fn back_and_thighs(&self) -> bool {
        (self.head + self.chest) * self.thigh_l * self.thigh_r > 0
    }
}

pub fn contact_profile(
    world: &World,
    model: &AgentModel,
    spawned: &SpawnedAgent,
    object: BodyId,
) -> ContactProfile {
    let count = |link: usize| world.contact_count_between(spawned.links[link], object);
    ContactProfile {
        head: count(model.head),
        chest: count(model.chest),
        thigh_l: count(model.thigh_l),
        thigh_r: count(model.thigh_r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::model::{build_agent_with_scale, forward_kinematics};
    use crate::agent::spec::{AgentSpec, DOF_COUNT};
    use crate::se3::Pose;

    fn weights() -> ScoreWeights {
        AgentSpec::default_human().weights
    }

    #[test]
    fn zero_deviation_scores_zero() {
        let w = weights();
        let theta = vec![0.3; DOF_COUNT];
        assert_eq!(joint_angle_score(&theta, &theta, &w).unwrap(), 0.0);
    }

    #[test]
    fn single_weighted_joint_below_escalation() {
        // One DoF with weight 2 deviating 0.5 rad below threshold: J = 1.0.
        let mut w = weights();
        w.joint = vec![0.0; DOF_COUNT];
        w.joint[10] = 2.0;
        w.joint_escalation = vec![0.8; DOF_COUNT];
        let key = vec![0.0; DOF_COUNT];
        let mut res = vec![0.0; DOF_COUNT];
        res[10] = 0.5;
        assert!((joint_angle_score(&res, &key, &w).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn escalation_triples_the_weight() {
        // Same joint deviating 1.0 rad with threshold 0.8: J = 2 * 3 * 1.0.
        let mut w = weights();
        w.joint = vec![0.0; DOF_COUNT];
        w.joint[10] = 2.0;
        w.joint_escalation = vec![0.8; DOF_COUNT];
        let key = vec![0.0; DOF_COUNT];
        let mut res = vec![0.0; DOF_COUNT];
        res[10] = 1.0;
        assert!((joint_angle_score(&res, &key, &w).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_joints_do_not_affect_score() {
        let w = weights();
        let key = vec![0.0; DOF_COUNT];
        let mut res = vec![0.0; DOF_COUNT];
        res[6] = 0.3; // neck_lower x carries zero weight
        res[9] = -0.2; // neck_upper y
        assert_eq!(joint_angle_score(&res, &key, &w).unwrap(), 0.0);
    }

    #[test]
    fn escalation_is_monotone() {
        let w = weights();
        let key = vec![0.0; DOF_COUNT];
        let mut prev = 0.0;
        for k in 0..40 {
            let mut res = vec![0.0; DOF_COUNT];
            res[10] = 0.05 * k as f64;
            let j = joint_angle_score(&res, &key, &w).unwrap();
            assert!(j >= prev - 1e-12, "J must not decrease as deviation grows");
            prev = j;
        }
    }

    #[test]
    fn link_score_hand_cases() {
        let model = build_agent_with_scale(&AgentSpec::default_human(), 1.0).unwrap();
        let key = forward_kinematics(&model, &vec![0.0; DOF_COUNT], &Pose::identity()).unwrap();

        // Chest z orthogonal to key: contribution = w * (1 - 0) = 1.
        let mut w = model.spec.weights.clone();
        w.link = vec![0.0; 9];
        w.link[model.chest] = 1.0;
        w.link_escalation = vec![1.5; 9];
        let mut tipped = key.clone();
        tipped.link_frames[model.chest] = Pose {
            rotation: crate::se3::Rotation::about_x(std::f64::consts::FRAC_PI_2)
                * key.link_frames[model.chest].rotation,
            translation: key.link_frames[model.chest].translation,
        };
        let l = link_rotation_score(&tipped, &key, &w).unwrap();
        assert!((l - 1.0).abs() < 1e-9, "orthogonal chest: {l}");

        // Antiparallel chest (deficit 2) with threshold 1.5 escalates: 3 * 2.
        let mut flipped = key.clone();
        flipped.link_frames[model.chest] = Pose {
            rotation: crate::se3::Rotation::about_x(std::f64::consts::PI)
                * key.link_frames[model.chest].rotation,
            translation: key.link_frames[model.chest].translation,
        };
        let l = link_rotation_score(&flipped, &key, &w).unwrap();
        assert!((l - 6.0).abs() < 1e-9, "antiparallel chest: {l}");
    }

    #[test]
    fn sitting_height_is_pelvis_origin_height() {
        let model = build_agent_with_scale(&AgentSpec::default_human(), 1.0).unwrap();
        let base = Pose::from_translation(nalgebra::Vector3::new(0.0, 0.0, 0.45));
        let c = forward_kinematics(&model, &vec![0.0; DOF_COUNT], &base).unwrap();
        assert!((sitting_height(&c, &model, 0.0) - 0.45).abs() < 1e-12);
    }
}
