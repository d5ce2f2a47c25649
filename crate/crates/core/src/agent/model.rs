//! Scaled agent instances: forward kinematics and world spawning.

use nalgebra::Vector3;

use crate::agent::spec::{vec3, AgentSpec, DofSpec, LinkShape, DOF_COUNT, LINK_COUNT};
use crate::dynamics::{groups, Body, BodyId, CollisionShape, ConvexShape, HingeDof, Joint, Material, World};
use crate::error::{Error, Result};
use crate::geometry::{box_mass_props, capsule_mass_props, MassProps, OrientedBox};
use crate::se3::{euler_to_matrix, Pose, Rotation};

/// One scaled link ready for spawning.
#[derive(Clone, Debug)]
pub struct BuiltLink {
    pub name: String,
    pub shape: CollisionShape,
    pub mass_props: MassProps,
    /// Link frame pose in the reference posture (scaled).
    pub ref_pose: Pose,
    pub scored: bool,
}

#[derive(Clone, Debug)]
pub struct BuiltJoint {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    /// Reference-posture world anchor (scaled).
    pub anchor_world: Vector3<f64>,
    pub dofs: Vec<DofSpec>,
}

/// A scaled instance of the agent. Link masses scale with the cube of the
/// factor; joint limits are unchanged; joint damping and dry friction scale
/// with the fourth power (torque ~ mass x lever).
#[derive(Clone, Debug)]
pub struct AgentModel {
    pub spec: AgentSpec,
    pub scale: f64,
    pub links: Vec<BuiltLink>,
    pub joints: Vec<BuiltJoint>,
    pub pelvis: usize,
    pub chest: usize,
    pub head: usize,
    pub thigh_l: usize,
    pub thigh_r: usize,
}

/// Joint angles plus the world frames they imply.
#[derive(Clone, Debug)]
pub struct AgentConfiguration {
    pub theta: Vec<f64>,
    pub base_pose: Pose,
    pub link_frames: Vec<Pose>,
}

/// Scales the agent to the object: factor
/// `clamp(k * obb_max_extent / nominal_height, min, max)`.
pub fn build_agent(object_obb: &OrientedBox, spec: &AgentSpec) -> Result<AgentModel> {
    if object_obb.half_extents.min() <= 0.0 {
        return Err(Error::invalid("OBB extents must be positive"));
    }
    let rule = spec.scale_rule;
    let s = (rule.factor * object_obb.max_extent() / spec.nominal_height).clamp(rule.min, rule.max);
    build_agent_with_scale(spec, s)
}

pub fn build_agent_with_scale(spec: &AgentSpec, s: f64) -> Result<AgentModel> {
    spec.validate()?;
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid("agent scale must be positive"));
    }
    let density_scale = s * s * s;
    let mut links = Vec::with_capacity(LINK_COUNT);
    for l in &spec.links {
        let (shape, mut mp) = match l.shape {
            LinkShape::Box { half_extents } => {
                let half = vec3(&half_extents) * s;
                (
                    CollisionShape::Convex(ConvexShape::cuboid(half)),
                    box_mass_props(half, 1.0),
                )
            }
            LinkShape::Capsule { radius, half_height } => (
                CollisionShape::Capsule {
                    radius: radius * s,
                    half_height: half_height * s,
                },
                capsule_mass_props(radius * s, half_height * s, 1.0),
            ),
        };
        // Rescale to the spec mass (the unit-density props fix the shape
        // ratios; mass scales with s^3).
        let target_mass = l.mass * density_scale;
        let ratio = target_mass / mp.mass;
        mp.mass = target_mass;
        mp.inertia *= ratio;
        let ref_e = l.ref_euler;
        links.push(BuiltLink {
            name: l.name.clone(),
            shape,
            mass_props: mp,
            ref_pose: Pose {
                rotation: euler_to_matrix(ref_e[0], ref_e[1], ref_e[2])?,
                translation: vec3(&l.ref_position) * s,
            },
            scored: l.scored,
        });
    }

    let torque_scale = s * s * s * s;
    let mut joints = Vec::with_capacity(spec.joints.len());
    for j in &spec.joints {
        joints.push(BuiltJoint {
            name: j.name.clone(),
            parent: spec.link_index(&j.parent).unwrap(),
            child: spec.link_index(&j.child).unwrap(),
            anchor_world: vec3(&j.anchor) * s,
            dofs: j
                .dofs
                .iter()
                .map(|d| DofSpec {
                    axis: d.axis,
                    limits: d.limits,
                    damping: d.damping * torque_scale,
                    dry_friction: d.dry_friction * torque_scale,
                })
                .collect(),
        });
    }

    let idx = |name: &str| spec.link_index(name).unwrap();
    Ok(AgentModel {
        pelvis: idx("pelvis"),
        chest: idx("chest"),
        head: idx("head"),
        thigh_l: idx("thigh_l"),
        thigh_r: idx("thigh_r"),
        spec: spec.clone(),
        scale: s,
        links,
        joints,
    })
}

impl AgentModel {
    /// Splits a flattened 18-vector into per-joint angle triples (indexed by
    /// joint-frame axis).
    fn joint_angle_vectors(&self, theta: &[f64]) -> Result<Vec<Vector3<f64>>> {
        if theta.len() != DOF_COUNT {
            return Err(Error::invalid(format!(
                "theta must have {DOF_COUNT} entries, got {}",
                theta.len()
            )));
        }
        if !theta.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("theta has non-finite entries"));
        }
        let mut out = Vec::with_capacity(self.joints.len());
        let mut i = 0;
        for j in &self.joints {
            let mut v = Vector3::zeros();
            for d in &j.dofs {
                v[d.axis] = theta[i];
                i += 1;
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Rebuilds the flattened vector from per-joint triples.
    pub fn flatten_joint_angles(&self, per_joint: &[Vector3<f64>]) -> Vec<f64> {
        let mut out = Vec::with_capacity(DOF_COUNT);
        for (j, v) in self.joints.iter().zip(per_joint) {
            for d in &j.dofs {
                out.push(v[d.axis]);
            }
        }
        out
    }

    pub fn dof_names(&self) -> Vec<String> {
        let axis_name = ["x", "y", "z"];
        let mut out = Vec::with_capacity(DOF_COUNT);
        for j in &self.joints {
            for d in &j.dofs {
                out.push(format!("{}_{}", j.name, axis_name[d.axis]));
            }
        }
        out
    }
}

/// Link frames from chaining hinge rotations out of the pelvis root.
///
/// Joint frames coincide with the world axes in the reference posture, so a
/// joint's relative rotation for angles (ax, ay, az) is the x-y-z extrinsic
/// composition in that shared frame.
pub fn forward_kinematics(
    model: &AgentModel,
    theta: &[f64],
    base: &Pose,
) -> Result<AgentConfiguration> {
    let per_joint = model.joint_angle_vectors(theta)?;
    let mut frames: Vec<Option<Pose>> = vec![None; model.links.len()];
    // The base pose moves the pelvis link frame.
    frames[model.pelvis] = Some(base.compose(&model.links[model.pelvis].ref_pose));

    // Joints are authored parent-first, so one pass resolves the tree.
    for (ji, j) in model.joints.iter().enumerate() {
        let parent_frame = frames[j.parent]
            .as_ref()
            .expect("joints must be ordered parent-first")
            .clone();
        let angles = per_joint[ji];
        let rel = euler_to_matrix(angles.x, angles.y, angles.z)?;

        // Reference joint frame in parent link coords.
        let parent_ref = &model.links[j.parent].ref_pose;
        let child_ref = &model.links[j.child].ref_pose;
        let frame_parent = parent_ref.rotation.transpose(); // joint frame = world at reference
        let anchor_parent = parent_ref.rotation.transpose().apply(&(j.anchor_world - parent_ref.translation));
        let frame_child = child_ref.rotation.transpose();
        let anchor_child = child_ref.rotation.transpose().apply(&(j.anchor_world - child_ref.translation));

        let child_rot = parent_frame.rotation * frame_parent * rel * frame_child.transpose();
        let anchor_w = parent_frame.apply(&anchor_parent);
        let child_pos = anchor_w - child_rot.apply(&anchor_child);
        frames[j.child] = Some(Pose {
            rotation: child_rot,
            translation: child_pos,
        });
    }

    Ok(AgentConfiguration {
        theta: theta.to_vec(),
        base_pose: *base,
        link_frames: frames
            .into_iter()
            .map(|f| f.expect("all links connected"))
            .collect(),
    })
}

/// The agent's bodies and joints inside a world.
pub struct SpawnedAgent {
    pub links: Vec<BodyId>,
    /// World joint indices aligned with `AgentModel::joints`.
    pub joints: Vec<usize>,
}

/// Spawns the agent at a configuration. Links carry zero restitution and do
/// not collide with each other.
pub fn spawn_agent(
    world: &mut World,
    model: &AgentModel,
    config: &AgentConfiguration,
) -> Result<SpawnedAgent> {
    let mut link_ids = Vec::with_capacity(model.links.len());
    for (li, link) in model.links.iter().enumerate() {
        let frame = &config.link_frames[li];
        let body = Body::new_dynamic(
            link.shape.clone(),
            &link.mass_props,
            Material {
                friction: model.spec.friction,
                restitution: 0.0,
            },
            frame,
        )
        .with_groups(groups::AGENT, groups::ALL & !groups::AGENT);
        link_ids.push(world.add_body(body));
    }

    let mut joint_ids = Vec::with_capacity(model.joints.len());
    for j in &model.joints {
        let parent_ref = &model.links[j.parent].ref_pose;
        let child_ref = &model.links[j.child].ref_pose;
        // COM coincides with the link frame origin for the primitive shapes.
        let joint = Joint {
            parent: link_ids[j.parent],
            child: link_ids[j.child],
            anchor_parent: parent_ref
                .rotation
                .transpose()
                .apply(&(j.anchor_world - parent_ref.translation)),
            anchor_child: child_ref
                .rotation
                .transpose()
                .apply(&(j.anchor_world - child_ref.translation)),
            frame_parent: parent_ref.rotation.transpose(),
            frame_child: child_ref.rotation.transpose(),
            dofs: j
                .dofs
                .iter()
                .map(|d| HingeDof {
                    axis: d.axis,
                    limits: d.limits,
                    damping: d.damping,
                    dry_friction: d.dry_friction,
                })
                .collect(),
        };
        let idx = world.joints().len();
        world.add_joint(joint)?;
        joint_ids.push(idx);
    }

    Ok(SpawnedAgent {
        links: link_ids,
        joints: joint_ids,
    })
}

/// Reads the flattened angle vector back from the simulated joints.
pub fn measure_theta(world: &World, model: &AgentModel, spawned: &SpawnedAgent) -> Vec<f64> {
    let per_joint: Vec<Vector3<f64>> = spawned
        .joints
        .iter()
        .map(|&ji| world.joint_angles(ji))
        .collect();
    model.flatten_joint_angles(&per_joint)
}

/// Current world frames of all links.
pub fn measure_configuration(
    world: &World,
    model: &AgentModel,
    spawned: &SpawnedAgent,
) -> AgentConfiguration {
    let link_frames: Vec<Pose> = spawned
        .links
        .iter()
        .map(|&id| world.body(id).ref_pose())
        .collect();
    AgentConfiguration {
        theta: measure_theta(world, model, spawned),
        base_pose: link_frames[model.pelvis],
        link_frames,
    }
}

/// Places the pelvis frame origin at `pelvis_position` with the agent
/// yawed by `yaw` about z (zero yaw faces +x).
pub fn base_pose_for_pelvis(
    model: &AgentModel,
    pelvis_position: &Vector3<f64>,
    yaw: f64,
) -> Pose {
    let rot = Rotation::about_z(yaw);
    // The pelvis ref pose sits at the origin, so the base is the pelvis pose.
    let pelvis_ref = &model.links[model.pelvis].ref_pose;
    Pose {
        rotation: rot,
        translation: pelvis_position - rot.apply(&pelvis_ref.translation),
    }
}
