//! Hinge joints between body pairs.
//!
//! A joint carries one to three hinge degrees of freedom about distinct
//! axes of a shared joint frame. The anchor coincidence is a 3-row linear
//! constraint; rotation about axes not listed as degrees of freedom is
//! locked. Per-DoF angles are measured by decomposing the relative joint
//! frame rotation with the x-y-z extrinsic Euler convention, which is exact
//! for a single hinge and well-behaved elsewhere because locked angles are
//! held near zero.

use nalgebra::Vector3;

use crate::dynamics::body::{Body, BodyId};
use crate::se3::{matrix_to_euler, Rotation};

/// One hinge degree of freedom about a joint-frame axis.
#[derive(Clone, Copy, Debug)]
pub struct HingeDof {
    /// Joint-frame axis index: 0 = x, 1 = y, 2 = z.
    pub axis: usize,
    /// [lo, hi] in radians, lo <= hi.
    pub limits: [f64; 2],
    /// Viscous damping, N m s/rad.
    pub damping: f64,
    /// Dry friction torque, N m.
    pub dry_friction: f64,
}

#[derive(Clone, Debug)]
pub struct Joint {
    pub parent: BodyId,
    pub child: BodyId,
    /// Anchor in each body's COM frame.
    pub anchor_parent: Vector3<f64>,
    pub anchor_child: Vector3<f64>,
    /// Joint frame in each body's COM frame; the frames coincide in world
    /// space when every angle is zero.
    pub frame_parent: Rotation,
    pub frame_child: Rotation,
    /// 1..=3 entries with distinct axes.
    pub dofs: Vec<HingeDof>,
}

impl Joint {
    /// Angles about the joint-frame x, y, z axes.
    pub fn angles(&self, parent: &Body, child: &Body) -> Vector3<f64> {
        let jp = parent.rotation() * self.frame_parent;
        let jc = child.rotation() * self.frame_child;
        let rel = jp.transpose() * jc;
        let e = matrix_to_euler(&rel);
        Vector3::new(e.roll, e.pitch, e.yaw)
    }

    /// World directions of the joint-frame axes, taken from the parent side.
    pub fn axes_world(&self, parent: &Body) -> [Vector3<f64>; 3] {
        let jp = parent.rotation() * self.frame_parent;
        [jp.column(0), jp.column(1), jp.column(2)]
    }

    pub fn locked_axes(&self) -> Vec<usize> {
        (0..3)
            .filter(|ax| !self.dofs.iter().any(|d| d.axis == *ax))
            .collect()
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.dofs.is_empty() || self.dofs.len() > 3 {
            return Err(crate::Error::invalid("joint needs 1..=3 hinge DoF"));
        }
        let mut seen = [false; 3];
        for d in &self.dofs {
            if d.axis > 2 {
                return Err(crate::Error::invalid("joint axis index out of range"));
            }
            if seen[d.axis] {
                return Err(crate::Error::invalid("duplicate joint axis"));
            }
            seen[d.axis] = true;
            if d.limits[0] > d.limits[1] {
                return Err(crate::Error::invalid("joint limits must satisfy lo <= hi"));
            }
            if d.damping < 0.0 || d.dry_friction < 0.0 {
                return Err(crate::Error::invalid(
                    "joint damping and dry friction must be non-negative",
                ));
            }
        }
        Ok(())
    }
}
