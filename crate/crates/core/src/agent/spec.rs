//! Agent description: links, hinge degrees of freedom, canonical postures,
//! and scoring weights. Serializable so the whole body can be swapped out
//! from a file; `AgentSpec::default_human` is the built-in.
//!
//! The default body has 9 links and 18 hinge DoF. The zero-angle reference
//! posture is the seated shape facing +x: torso stacked vertically above
//! the pelvis, thighs horizontal along +x, calves hanging down. Canonical
//! postures and joint limits are authored around that zero.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AGENT_SCHEMA: &str = "agent/v1";
pub const LINK_COUNT: usize = 9;
pub const DOF_COUNT: usize = 18;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum LinkShape {
    Box { half_extents: [f64; 3] },
    Capsule { radius: f64, half_height: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    pub shape: LinkShape,
    /// kg at scale 1.
    pub mass: f64,
    /// Link frame origin in the reference posture (world coords, scale 1).
    pub ref_position: [f64; 3],
    /// Link frame rotation in the reference posture, x-y-z extrinsic Euler.
    pub ref_euler: [f64; 3],
    /// Whether the link participates in the rotation score.
    pub scored: bool,
}

/// Anatomical group of a joint; only the first three may carry positive
/// joint-angle weights.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum JointGroup {
    ChestPelvis,
    PelvisThigh,
    ThighCalf,
    Other,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DofSpec {
    /// Joint-frame axis: 0 = x, 1 = y, 2 = z.
    pub axis: usize,
    /// Radians, around the seated zero.
    pub limits: [f64; 2],
    /// N m s / rad at scale 1.
    pub damping: f64,
    /// N m at scale 1.
    pub dry_friction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub parent: String,
    pub child: String,
    /// Anchor point in reference-posture world coords (scale 1).
    pub anchor: [f64; 3],
    pub group: JointGroup,
    pub dofs: Vec<DofSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoreWeights {
    /// Per-DoF weights, ordered like the flattened joint DoF vector.
    pub joint: Vec<f64>,
    /// Per-link weights.
    pub link: Vec<f64>,
    /// Escalation thresholds: radians per DoF, dot-deficit per link.
    pub joint_escalation: Vec<f64>,
    pub link_escalation: Vec<f64>,
    /// Weight multiplier applied beyond the escalation threshold.
    pub escalation_factor: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScaleRule {
    /// Scale = clamp(factor * obb_max_extent / nominal_height, min, max).
    pub factor: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgentSpec {
    pub schema: String,
    /// Standing-equivalent height, meters, at scale 1.
    pub nominal_height: f64,
    pub friction: f64,
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
    /// Pre-drop posture, radians, flattened DoF order.
    pub c_pre: Vec<f64>,
    /// Reference seated posture the trials are scored against.
    pub c_key: Vec<f64>,
    pub weights: ScoreWeights,
    pub scale_rule: ScaleRule,
}

impl AgentSpec {
    pub fn from_json(text: &str) -> Result<AgentSpec> {
        let spec: AgentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn dof_count(&self) -> usize {
        self.joints.iter().map(|j| j.dofs.len()).sum()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != AGENT_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported agent schema '{}', expected '{AGENT_SCHEMA}'",
                self.schema
            )));
        }
        if self.links.len() != LINK_COUNT {
            return Err(Error::Config(format!(
                "agent must have exactly {LINK_COUNT} links, got {}",
                self.links.len()
            )));
        }
        if self.dof_count() != DOF_COUNT {
            return Err(Error::Config(format!(
                "agent must have exactly {DOF_COUNT} hinge DoF, got {}",
                self.dof_count()
            )));
        }
        for j in &self.joints {
            if self.link_index(&j.parent).is_none() || self.link_index(&j.child).is_none() {
                return Err(Error::Config(format!(
                    "joint '{}' references unknown links",
                    j.name
                )));
            }
            for d in &j.dofs {
                if d.axis > 2 || d.limits[0] > d.limits[1] {
                    return Err(Error::Config(format!("joint '{}' has a bad DoF", j.name)));
                }
            }
        }
        for (angles, what) in [(&self.c_pre, "c_pre"), (&self.c_key, "c_key")] {
            if angles.len() != DOF_COUNT {
                return Err(Error::Config(format!("{what} must have {DOF_COUNT} entries")));
            }
            let mut i = 0;
            for j in &self.joints {
                for d in &j.dofs {
                    if angles[i] < d.limits[0] - 1e-9 || angles[i] > d.limits[1] + 1e-9 {
                        return Err(Error::Config(format!(
                            "{what}[{i}] = {} outside limits of joint '{}'",
                            angles[i], j.name
                        )));
                    }
                    i += 1;
                }
            }
        }
        let w = &self.weights;
        if w.joint.len() != DOF_COUNT
            || w.joint_escalation.len() != DOF_COUNT
            || w.link.len() != LINK_COUNT
            || w.link_escalation.len() != LINK_COUNT
        {
            return Err(Error::Config("weight vector lengths must match".into()));
        }
        if w.joint.iter().chain(&w.link).any(|&x| x < 0.0) {
            return Err(Error::Config("weights must be non-negative".into()));
        }
        // Positive joint weights are restricted to the three scored groups,
        // and positive link weights to scored links.
        let mut i = 0;
        for j in &self.joints {
            for _ in &j.dofs {
                if w.joint[i] > 0.0 && j.group == JointGroup::Other {
                    return Err(Error::Config(format!(
                        "joint weight {i} is positive on unscored joint '{}'",
                        j.name
                    )));
                }
                i += 1;
            }
        }
        for (li, l) in self.links.iter().enumerate() {
            if w.link[li] > 0.0 && !l.scored {
                return Err(Error::Config(format!(
                    "link weight {li} is positive on unscored link '{}'",
                    l.name
                )));
            }
        }
        if !(self.scale_rule.min > 0.0 && self.scale_rule.max >= self.scale_rule.min) {
            return Err(Error::Config("bad scale rule".into()));
        }
        Ok(())
    }

    /// The built-in 1.7 m / ~60 kg body with mass distributed by standard
    /// segment ratios.
    pub fn default_human() -> AgentSpec {
        let boxl = |name: &str,
                    half: [f64; 3],
                    mass: f64,
                    pos: [f64; 3],
                    euler: [f64; 3],
                    scored: bool| LinkSpec {
            name: name.into(),
            shape: LinkShape::Box { half_extents: half },
            mass,
            ref_position: pos,
            ref_euler: euler,
            scored,
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        let pi = std::f64::consts::PI;
        // Long axis is local z; thighs point +x and calves point down in the
        // seated reference, expressed by the reference rotations.
        let links = vec![
            boxl("pelvis", [0.16, 0.11, 0.065], 10.2, [0.0, 0.0, 0.0], [0.0; 3], true),
            boxl("waist", [0.13, 0.10, 0.06], 5.4, [0.0, 0.0, 0.125], [0.0; 3], false),
            boxl("chest", [0.15, 0.10, 0.15], 17.3, [0.0, 0.0, 0.335], [0.0; 3], true),
            boxl("neck", [0.05, 0.05, 0.045], 1.2, [0.0, 0.0, 0.53], [0.0; 3], false),
            boxl("head", [0.075, 0.09, 0.105], 4.5, [0.0, 0.0, 0.68], [0.0; 3], false),
            boxl("thigh_l", [0.06, 0.06, 0.21], 7.1, [0.21, 0.08, -0.03], [0.0, half_pi, 0.0], true),
            boxl("thigh_r", [0.06, 0.06, 0.21], 7.1, [0.21, -0.08, -0.03], [0.0, half_pi, 0.0], true),
            boxl("calf_l", [0.05, 0.05, 0.20], 3.2, [0.42, 0.08, -0.23], [0.0, pi, 0.0], false),
            boxl("calf_r", [0.05, 0.05, 0.20], 3.2, [0.42, -0.08, -0.23], [0.0, pi, 0.0], false),
        ];

        let dof = |axis: usize, lo: f64, hi: f64, damping: f64, dry: f64| DofSpec {
            axis,
            limits: [lo, hi],
            damping,
            dry_friction: dry,
        };
        let joints = vec![
            JointSpec {
                name: "waist_lower".into(),
                parent: "pelvis".into(),
                child: "waist".into(),
                anchor: [0.0, 0.0, 0.0675],
                group: JointGroup::ChestPelvis,
                dofs: vec![
                    dof(0, -0.30, 0.30, 8.0, 25.0),
                    dof(1, -0.35, 0.55, 8.0, 25.0),
                    dof(2, -0.40, 0.40, 8.0, 25.0),
                ],
            },
            JointSpec {
                name: "waist_upper".into(),
                parent: "waist".into(),
                child: "chest".into(),
                anchor: [0.0, 0.0, 0.1875],
                group: JointGroup::ChestPelvis,
                dofs: vec![
                    dof(0, -0.25, 0.25, 8.0, 25.0),
                    dof(1, -0.30, 0.45, 8.0, 25.0),
                    dof(2, -0.35, 0.35, 8.0, 25.0),
                ],
            },
            JointSpec {
                name: "neck_lower".into(),
                parent: "chest".into(),
                child: "neck".into(),
                anchor: [0.0, 0.0, 0.487],
                group: JointGroup::Other,
                dofs: vec![
                    dof(0, -0.30, 0.30, 2.0, 5.0),
                    dof(1, -0.35, 0.35, 2.0, 5.0),
                    dof(2, -0.45, 0.45, 2.0, 5.0),
                ],
            },
            JointSpec {
                name: "neck_upper".into(),
                parent: "neck".into(),
                child: "head".into(),
                anchor: [0.0, 0.0, 0.576],
                group: JointGroup::Other,
                dofs: vec![dof(1, -0.35, 0.35, 2.0, 5.0)],
            },
            JointSpec {
                name: "hip_l".into(),
                parent: "pelvis".into(),
                child: "thigh_l".into(),
                anchor: [0.0, 0.08, -0.03],
                group: JointGroup::PelvisThigh,
                dofs: vec![
                    dof(0, -0.40, 0.40, 6.0, 12.0),
                    dof(1, -0.45, 1.75, 6.0, 12.0),
                    dof(2, -0.35, 0.35, 6.0, 12.0),
                ],
            },
            JointSpec {
                name: "hip_r".into(),
                parent: "pelvis".into(),
                child: "thigh_r".into(),
                anchor: [0.0, -0.08, -0.03],
                group: JointGroup::PelvisThigh,
                dofs: vec![
                    dof(0, -0.40, 0.40, 6.0, 12.0),
                    dof(1, -0.45, 1.75, 6.0, 12.0),
                    dof(2, -0.35, 0.35, 6.0, 12.0),
                ],
            },
            JointSpec {
                name: "knee_l".into(),
                parent: "thigh_l".into(),
                child: "calf_l".into(),
                anchor: [0.42, 0.08, -0.03],
                group: JointGroup::ThighCalf,
                dofs: vec![dof(1, -1.55, 0.75, 4.0, 8.0)],
            },
            JointSpec {
                name: "knee_r".into(),
                parent: "thigh_r".into(),
                child: "calf_r".into(),
                anchor: [0.42, -0.08, -0.03],
                group: JointGroup::ThighCalf,
                dofs: vec![dof(1, -1.55, 0.75, 4.0, 8.0)],
            },
        ];

        // Flattened DoF order:
        //  0..3  waist_lower xyz   3..6 waist_upper xyz   6..9 neck_lower xyz
        //  9     neck_upper y     10..13 hip_l xyz       13..16 hip_r xyz
        // 16     knee_l y         17 knee_r y
        let joint_weights = vec![
            1.0, 1.0, 1.0, // waist_lower
            1.0, 1.0, 1.0, // waist_upper
            0.0, 0.0, 0.0, // neck_lower
            0.0, // neck_upper
            1.0, 1.0, 1.0, // hip_l
            1.0, 1.0, 1.0, // hip_r
            1.0, // knee_l
            1.0, // knee_r
        ];
        let link_weights = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];

        AgentSpec {
            schema: AGENT_SCHEMA.into(),
            nominal_height: 1.7,
            friction: 0.5,
            links,
            joints,
            c_pre: {
                let mut v = vec![0.0; DOF_COUNT];
                v[1] = -0.14; // waist_lower pitch: lean back
                v[4] = -0.08; // waist_upper pitch
                v
            },
            c_key: vec![0.0; DOF_COUNT],
            weights: ScoreWeights {
                joint: joint_weights,
                link: link_weights,
                joint_escalation: vec![0.5; DOF_COUNT],
                link_escalation: vec![0.25; LINK_COUNT],
                escalation_factor: 3.0,
            },
            scale_rule: ScaleRule {
                factor: 1.9,
                min: 0.35,
                max: 3.0,
            },
        }
    }
}

pub(crate) fn vec3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}
