//! Rigid bodies in maximal coordinates.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::dynamics::shape::CollisionShape;
use crate::geometry::MassProps;
use crate::se3::{Pose, Rotation};

/// Collision filter groups; bodies collide when each one's group intersects
/// the other's mask.
pub mod groups {
    pub const GROUND: u32 = 1 << 0;
    pub const OBJECT: u32 = 1 << 1;
    pub const AGENT: u32 = 1 << 2;
    pub const ALL: u32 = !0;
}

#[derive(Clone, Copy, Debug)]
pub struct Material {
    /// Coulomb friction coefficient; pairs combine by geometric mean.
    pub friction: f64,
    /// Restitution; pairs combine by product, so a zero-restitution body
    /// kills all bounce against anything.
    pub restitution: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BodyKind {
    Dynamic,
    Static,
}

pub type BodyId = usize;

/// State lives in the center-of-mass frame: `position` is the world COM and
/// the collision shape is stored COM-relative. `com_in_ref` remembers where
/// the COM sat in the caller's reference frame so reference poses can be
/// recovered.
#[derive(Clone, Debug)]
pub struct Body {
    pub kind: BodyKind,
    pub shape: CollisionShape,
    pub material: Material,
    pub group: u32,
    pub mask: u32,

    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,

    pub mass: f64,
    pub inv_mass: f64,
    pub inertia_local: Matrix3<f64>,
    pub inv_inertia_local: Matrix3<f64>,
    com_in_ref: Vector3<f64>,
}

impl Body {
    /// Dynamic body whose shape and mass properties are given in a common
    /// reference frame placed at `ref_pose` in the world.
    pub fn new_dynamic(
        shape: CollisionShape,
        mass_props: &MassProps,
        material: Material,
        ref_pose: &Pose,
    ) -> Body {
        let com = mass_props.com;
        let shape = translate_shape(shape, &-com);
        let inv_inertia = mass_props
            .inertia
            .try_inverse()
            .expect("inertia must be invertible for a dynamic body");
        Body {
            kind: BodyKind::Dynamic,
            shape,
            material,
            group: groups::ALL,
            mask: groups::ALL,
            position: ref_pose.apply(&com),
            orientation: UnitQuaternion::from_matrix(ref_pose.rotation.matrix()),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            mass: mass_props.mass,
            inv_mass: 1.0 / mass_props.mass,
            inertia_local: mass_props.inertia,
            inv_inertia_local: inv_inertia,
            com_in_ref: com,
        }
    }

    pub fn new_static(shape: CollisionShape, material: Material, pose: &Pose) -> Body {
        Body {
            kind: BodyKind::Static,
            shape,
            material,
            group: groups::ALL,
            mask: groups::ALL,
            position: pose.translation,
            orientation: UnitQuaternion::from_matrix(pose.rotation.matrix()),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            mass: 0.0,
            inv_mass: 0.0,
            inertia_local: Matrix3::zeros(),
            inv_inertia_local: Matrix3::zeros(),
            com_in_ref: Vector3::zeros(),
        }
    }

    pub fn with_groups(mut self, group: u32, mask: u32) -> Body {
        self.group = group;
        self.mask = mask;
        self
    }

    pub fn is_dynamic(&self) -> bool {
        self.kind == BodyKind::Dynamic
    }

    pub fn rotation(&self) -> Rotation {
        Rotation::from_quaternion(&self.orientation)
    }

    /// COM-frame pose (the body frame).
    pub fn pose(&self) -> Pose {
        Pose {
            rotation: self.rotation(),
            translation: self.position,
        }
    }

    /// Pose of the reference frame the body was built in.
    pub fn ref_pose(&self) -> Pose {
        let r = self.rotation();
        Pose {
            rotation: r,
            translation: self.position - r.apply(&self.com_in_ref),
        }
    }

    pub fn inv_inertia_world(&self) -> Matrix3<f64> {
        if !self.is_dynamic() {
            return Matrix3::zeros();
        }
        let r = self.orientation.to_rotation_matrix();
        r * self.inv_inertia_local * r.transpose()
    }

    pub fn velocity_at(&self, world_point: &Vector3<f64>) -> Vector3<f64> {
        self.linear_velocity + self.angular_velocity.cross(&(world_point - self.position))
    }

    pub fn kinetic_energy(&self) -> f64 {
        if !self.is_dynamic() {
            return 0.0;
        }
        let r = self.orientation.to_rotation_matrix();
        let i_world = r * self.inertia_local * r.transpose();
        0.5 * self.mass * self.linear_velocity.norm_squared()
            + 0.5 * self.angular_velocity.dot(&(i_world * self.angular_velocity))
    }
}

fn translate_shape(shape: CollisionShape, offset: &Vector3<f64>) -> CollisionShape {
    if offset.norm() == 0.0 {
        return shape;
    }
    match shape {
        CollisionShape::Convex(mut c) => {
            for p in c.points.iter_mut() {
                *p += offset;
            }
            CollisionShape::Convex(c)
        }
        CollisionShape::Compound(mut cs) => {
            for c in cs.iter_mut() {
                for p in c.points.iter_mut() {
                    *p += offset;
                }
            }
            CollisionShape::Compound(cs)
        }
        // Symmetric primitives keep their COM at the local origin.
        other => other,
    }
}
