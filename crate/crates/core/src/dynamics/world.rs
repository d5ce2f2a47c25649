//! The simulation world: fixed-timestep deterministic stepping.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::Vector3;

use crate::dynamics::body::{Body, BodyId};
use crate::dynamics::contact::ContactPoint;
use crate::dynamics::joint::Joint;
use crate::dynamics::solver::{self, SolverParams, StepStats};
use crate::error::{Error, Result};
use crate::se3::{Pose, RotationMetric};

pub const DEFAULT_TIMESTEP: f64 = 1.0 / 240.0;

#[derive(Clone, Copy, Debug)]
pub struct WorldParams {
    pub gravity: Vector3<f64>,
    pub timestep: f64,
    pub velocity_iterations: usize,
    pub position_iterations: usize,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            gravity: Vector3::new(0.0, 0.0, -9.81),
            timestep: DEFAULT_TIMESTEP,
            velocity_iterations: 20,
            position_iterations: 10,
        }
    }
}

/// Stepping is deterministic: identical construction and step counts give
/// bitwise-identical state on the same build. The timestep is fixed for the
/// world's lifetime. Sleeping is deliberately absent; stillness is judged
/// only by the settle predicate over pose windows.
pub struct World {
    params: WorldParams,
    bodies: Vec<Body>,
    joints: Vec<Joint>,
    exclusions: BTreeSet<(usize, usize)>,
    contacts: Vec<ContactPoint>,
    step_count: u64,
    last_stats: StepStats,
}

impl World {
    pub fn new(params: WorldParams) -> World {
        World {
            params,
            bodies: Vec::new(),
            joints: Vec::new(),
            exclusions: BTreeSet::new(),
            contacts: Vec::new(),
            step_count: 0,
            last_stats: StepStats::default(),
        }
    }

    pub fn params(&self) -> &WorldParams {
        &self.params
    }

    pub fn timestep(&self) -> f64 {
        self.params.timestep
    }

    pub fn add_body(&mut self, body: Body) -> BodyId {
        self.bodies.push(body);
        self.bodies.len() - 1
    }

    /// Jointed pairs are excluded from collision detection.
    pub fn add_joint(&mut self, joint: Joint) -> Result<()> {
        joint.validate()?;
        if joint.parent >= self.bodies.len() || joint.child >= self.bodies.len() {
            return Err(Error::invalid("joint references an unknown body"));
        }
        let pair = (
            joint.parent.min(joint.child),
            joint.parent.max(joint.child),
        );
        self.exclusions.insert(pair);
        self.joints.push(joint);
        Ok(())
    }

    pub fn body(&self, id: BodyId) -> &Body {
        &self.bodies[id]
    }

    pub fn body_mut(&mut self, id: BodyId) -> &mut Body {
        &mut self.bodies[id]
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint_angles(&self, joint_index: usize) -> Vector3<f64> {
        let j = &self.joints[joint_index];
        j.angles(&self.bodies[j.parent], &self.bodies[j.child])
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn last_stats(&self) -> &StepStats {
        &self.last_stats
    }

    /// One fixed-timestep update.
    pub fn step(&mut self) -> Result<()> {
        let params = SolverParams {
            dt: self.params.timestep,
            gravity: self.params.gravity,
            velocity_iterations: self.params.velocity_iterations,
            position_iterations: self.params.position_iterations,
        };
        let (contacts, stats) = solver::step(
            &mut self.bodies,
            &self.joints,
            &self.exclusions,
            &params,
            self.step_count,
        )?;
        self.contacts = contacts;
        self.last_stats = stats;
        self.step_count += 1;
        Ok(())
    }

    /// Manifold points from the last step.
    pub fn contacts(&self) -> &[ContactPoint] {
        &self.contacts
    }

    /// Number of manifold points involving `body` (against anything).
    pub fn contact_count(&self, body: BodyId) -> Result<usize> {
        if body >= self.bodies.len() {
            return Err(Error::invalid(format!("unknown body {body}")));
        }
        Ok(self
            .contacts
            .iter()
            .filter(|c| c.body_a == body || c.body_b == body)
            .count())
    }

    /// Manifold points between a specific pair.
    pub fn contact_count_between(&self, a: BodyId, b: BodyId) -> usize {
        self.contacts
            .iter()
            .filter(|c| (c.body_a == a && c.body_b == b) || (c.body_a == b && c.body_b == a))
            .count()
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies.iter().map(|b| b.kinetic_energy()).sum()
    }

    pub fn potential_energy(&self) -> f64 {
        let g = self.params.gravity.norm();
        self.bodies
            .iter()
            .filter(|b| b.is_dynamic())
            .map(|b| b.mass * g * b.position.z)
            .sum()
    }

    pub fn linear_momentum(&self) -> Vector3<f64> {
        self.bodies
            .iter()
            .filter(|b| b.is_dynamic())
            .map(|b| b.linear_velocity * b.mass)
            .sum()
    }
}

/// Settle thresholds for the pose-window predicate.
#[derive(Clone, Copy, Debug)]
pub struct SettleThresholds {
    /// Bound on the summed consecutive rotation distances over the window.
    pub rot_sum: f64,
    /// Bound on the summed consecutive translation distances, meters.
    pub pos_sum: f64,
    pub metric: RotationMetric,
}

pub const SETTLE_WINDOW: usize = 50;

/// True when the pose window shows no residual motion: the summed
/// step-to-step rotation and translation distances both stay within their
/// thresholds. The window must hold exactly [`SETTLE_WINDOW`] poses.
pub fn is_settled(window: &[Pose], thr: &SettleThresholds) -> Result<bool> {
    if window.len() != SETTLE_WINDOW {
        return Err(Error::invalid(format!(
            "settle window must hold exactly {SETTLE_WINDOW} poses, got {}",
            window.len()
        )));
    }
    let mut rot_sum = 0.0;
    let mut pos_sum = 0.0;
    for w in window.windows(2) {
        rot_sum += thr.metric.distance(&w[0].rotation, &w[1].rotation);
        pos_sum += (w[1].translation - w[0].translation).norm();
    }
    Ok(rot_sum <= thr.rot_sum && pos_sum <= thr.pos_sum)
}

/// Writes one line per body per step: step index, body id, orientation
/// quaternion (w x y z), position (x y z).
pub struct FrameRecorder<W: Write> {
    out: W,
}

impl<W: Write> FrameRecorder<W> {
    pub fn new(out: W) -> Self {
        FrameRecorder { out }
    }

    pub fn record(&mut self, step: u64, world: &World) -> Result<()> {
        for (id, body) in world.bodies().iter().enumerate() {
            let q = body.orientation.as_ref();
            let p = body.position;
            writeln!(
                self.out,
                "{step} {id} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}",
                q.w, q.i, q.j, q.k, p.x, p.y, p.z
            )?;
        }
        Ok(())
    }
}

/// Pose history of one watched body.
pub struct Trajectory {
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn last_window(&self) -> Option<&[Pose]> {
        if self.poses.len() < SETTLE_WINDOW {
            return None;
        }
        Some(&self.poses[self.poses.len() - SETTLE_WINDOW..])
    }
}

/// Steps the world `max_steps` times recording the watched body's pose
/// after every step (plus the initial pose at index 0).
pub fn run_until<W: Write>(
    world: &mut World,
    watched: BodyId,
    max_steps: u64,
    mut frames: Option<&mut FrameRecorder<W>>,
) -> Result<Trajectory> {
    let mut poses = Vec::with_capacity(max_steps as usize + 1);
    poses.push(world.body(watched).pose());
    for step in 0..max_steps {
        world.step()?;
        poses.push(world.body(watched).pose());
        if let Some(rec) = frames.as_deref_mut() {
            rec.record(step, world)?;
        }
    }
    Ok(Trajectory { poses })
}

/// `run_until` without frame dumping.
pub fn run_plain(world: &mut World, watched: BodyId, max_steps: u64) -> Result<Trajectory> {
    run_until::<std::io::Sink>(world, watched, max_steps, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::body::{Body, Material};
    use crate::dynamics::joint::{HingeDof, Joint};
    use crate::dynamics::shape::{CollisionShape, ConvexShape};
    use crate::geometry::{box_mass_props, capsule_mass_props};
    use crate::se3::Rotation;

    fn ground_material() -> Material {
        Material { friction: 0.5, restitution: 1.0 }
    }

    fn world_with_ground() -> (World, BodyId) {
        let mut w = World::new(WorldParams::default());
        let ground = w.add_body(Body::new_static(
            CollisionShape::Plane { height: 0.0 },
            ground_material(),
            &Pose::identity(),
        ));
        (w, ground)
    }

    fn dynamic_box(half: f64, density: f64, material: Material, pose: &Pose) -> Body {
        let mp = box_mass_props(Vector3::repeat(half), density);
        Body::new_dynamic(
            CollisionShape::Convex(ConvexShape::cuboid(Vector3::repeat(half))),
            &mp,
            material,
            pose,
        )
    }

    #[test]
    fn free_fall_velocity_increment_is_exact() {
        // Semi-implicit Euler: dv = g * dt per step, exactly.
        let mut w = World::new(WorldParams::default());
        let mp = box_mass_props(Vector3::repeat(0.1), 600.0);
        let b = w.add_body(Body::new_dynamic(
            CollisionShape::Convex(ConvexShape::cuboid(Vector3::repeat(0.1))),
            &mp,
            Material { friction: 0.5, restitution: 0.1 },
            &Pose::from_translation(Vector3::new(0.0, 0.0, 100.0)),
        ));
        let mut prev = w.body(b).linear_velocity.z;
        for _ in 0..10 {
            w.step().unwrap();
            let v = w.body(b).linear_velocity.z;
            assert!(((prev - v) - 9.81 / 240.0).abs() < 1e-9);
            prev = v;
        }
    }

    #[test]
    fn box_rests_quietly_on_plane() {
        let (mut w, _) = world_with_ground();
        let b = w.add_body(dynamic_box(
            0.1,
            600.0,
            Material { friction: 0.5, restitution: 0.1 },
            &Pose::from_translation(Vector3::new(0.0, 0.0, 0.1)),
        ));
        for _ in 0..240 {
            w.step().unwrap();
        }
        let body = w.body(b);
        let speed = body.linear_velocity.norm() + body.angular_velocity.norm() * 0.1;
        assert!(speed < 1e-3, "residual speed {speed}");
        let penetration = 0.1 - body.position.z;
        assert!(penetration <= 2e-3, "penetration {penetration}");
        assert!(w.contact_count(b).unwrap() >= 4);
    }

    #[test]
    fn rebound_ratio_matches_restitution_product() {
        let (mut w, _) = world_with_ground();
        let mp = capsule_mass_props(0.1, 0.0, 600.0);
        let b = w.add_body(Body::new_dynamic(
            CollisionShape::Capsule { radius: 0.1, half_height: 0.0 },
            &mp,
            Material { friction: 0.5, restitution: 0.1 },
            &Pose::from_translation(Vector3::new(0.0, 0.0, 0.9)),
        ));
        let mut impact: f64 = 0.0;
        let mut rebound: f64 = 0.0;
        for _ in 0..1000 {
            w.step().unwrap();
            let vz = w.body(b).linear_velocity.z;
            if vz < 0.0 && rebound == 0.0 {
                impact = impact.max(-vz);
            }
            if vz > 0.0 {
                rebound = rebound.max(vz);
            }
        }
        assert!(impact > 3.0, "ball never hit the plane (impact {impact})");
        let ratio = rebound / impact;
        assert!((ratio - 0.1).abs() <= 0.02, "rebound ratio {ratio}");
    }

    #[test]
    fn zero_gravity_preserves_velocity_exactly() {
        let mut params = WorldParams::default();
        params.gravity = Vector3::zeros();
        let mut w = World::new(params);
        let mp = box_mass_props(Vector3::repeat(0.1), 600.0);
        let b = w.add_body(Body::new_dynamic(
            CollisionShape::Convex(ConvexShape::cuboid(Vector3::repeat(0.1))),
            &mp,
            Material { friction: 0.5, restitution: 0.1 },
            &Pose::identity(),
        ));
        w.body_mut(b).linear_velocity = Vector3::new(0.3, -0.2, 0.1);
        let v0 = w.body_mut(b).linear_velocity;
        let traj = run_plain(&mut w, b, 500).unwrap();
        assert_eq!(traj.poses.len(), 501);
        assert!((w.body(b).linear_velocity - v0).norm() < 1e-12);
    }

    #[test]
    fn frictionless_collision_conserves_momentum() {
        let mut params = WorldParams::default();
        params.gravity = Vector3::zeros();
        let mut w = World::new(params);
        let mp = capsule_mass_props(0.1, 0.0, 600.0);
        let mat = Material { friction: 0.0, restitution: 0.5 };
        let a = w.add_body(Body::new_dynamic(
            CollisionShape::Capsule { radius: 0.1, half_height: 0.0 },
            &mp,
            mat,
            &Pose::from_translation(Vector3::new(-0.5, 0.0, 0.0)),
        ));
        let _b = w.add_body(Body::new_dynamic(
            CollisionShape::Capsule { radius: 0.1, half_height: 0.0 },
            &mp,
            mat,
            &Pose::from_translation(Vector3::new(0.5, 0.02, 0.0)),
        ));
        w.body_mut(a).linear_velocity = Vector3::new(2.0, 0.0, 0.0);
        let p0 = w.linear_momentum();
        for _ in 0..480 {
            w.step().unwrap();
            let p = w.linear_momentum();
            assert!(
                (p - p0).norm() <= 1e-6 * p0.norm(),
                "momentum drifted: {:?} vs {:?}",
                p,
                p0
            );
        }
        // The collision actually happened.
        assert!(w.body(a).linear_velocity.x < 2.0 - 1e-3);
    }

    #[test]
    fn no_energy_gain_beyond_correction_bound() {
        let (mut w, _) = world_with_ground();
        let b = w.add_body(dynamic_box(
            0.1,
            600.0,
            Material { friction: 0.5, restitution: 0.1 },
            &Pose {
                rotation: Rotation::about_x(0.4) * Rotation::about_y(0.3),
                translation: Vector3::new(0.0, 0.0, 0.8),
            },
        ));
        let _ = b;
        let mut prev = w.kinetic_energy() + w.potential_energy();
        for _ in 0..1000 {
            w.step().unwrap();
            let e = w.kinetic_energy() + w.potential_energy();
            let bound = w.last_stats().correction_lift_work + 1e-3;
            assert!(
                e <= prev + bound,
                "energy grew: {e} > {prev} + {bound} at step {}",
                w.step_count()
            );
            prev = e;
        }
    }

    #[test]
    fn hinge_pendulum_respects_limits() {
        let mut w = World::new(WorldParams::default());
        let anchor = w.add_body(Body::new_static(
            CollisionShape::Convex(ConvexShape::cuboid(Vector3::repeat(0.05))),
            ground_material(),
            &Pose::from_translation(Vector3::new(0.0, 0.0, 2.0)),
        ));
        let rod_half = Vector3::new(0.02, 0.02, 0.25);
        let mp = box_mass_props(rod_half, 600.0);
        let rod = w.add_body(Body::new_dynamic(
            CollisionShape::Convex(ConvexShape::cuboid(rod_half)),
            &mp,
            Material { friction: 0.5, restitution: 0.0 },
            &Pose::from_translation(Vector3::new(0.0, 0.0, 2.0 - 0.25)),
        ));
        let limits = [-0.4, 0.4];
        w.add_joint(Joint {
            parent: anchor,
            child: rod,
            anchor_parent: Vector3::zeros(),
            anchor_child: Vector3::new(0.0, 0.0, 0.25),
            frame_parent: Rotation::identity(),
            frame_child: Rotation::identity(),
            dofs: vec![HingeDof {
                axis: 1,
                limits,
                damping: 0.0,
                dry_friction: 0.0,
            }],
        })
        .unwrap();
        // Kick it hard enough to slam into both limits.
        w.body_mut(rod).angular_velocity = Vector3::new(0.0, 6.0, 0.0);
        for _ in 0..2000 {
            w.step().unwrap();
            let theta = w.joint_angles(0).y;
            assert!(
                theta >= limits[0] - 0.01 && theta <= limits[1] + 0.01,
                "hinge angle {theta} escaped limits"
            );
        }
        // The anchor must not drift.
        let top = w.body(rod).pose().apply(&Vector3::new(0.0, 0.0, 0.25));
        assert!((top - Vector3::new(0.0, 0.0, 2.0)).norm() < 5e-3, "anchor drifted to {top:?}");
    }

    #[test]
    fn static_bodies_never_move() {
        let (mut w, ground) = world_with_ground();
        let b = w.add_body(dynamic_box(
            0.2,
            600.0,
            Material { friction: 0.5, restitution: 0.1 },
            &Pose::from_translation(Vector3::new(0.0, 0.0, 0.6)),
        ));
        let _ = b;
        for _ in 0..500 {
            w.step().unwrap();
            assert_eq!(w.body(ground).position, Vector3::zeros());
            assert_eq!(w.body(ground).linear_velocity, Vector3::zeros());
        }
    }

    #[test]
    fn stepping_is_bitwise_deterministic() {
        let build = || {
            let (mut w, _) = world_with_ground();
            let b = w.add_body(dynamic_box(
                0.1,
                600.0,
                Material { friction: 0.5, restitution: 0.1 },
                &Pose {
                    rotation: Rotation::about_x(0.7),
                    translation: Vector3::new(0.0, 0.0, 0.6),
                },
            ));
            (w, b)
        };
        let (mut w1, b1) = build();
        let (mut w2, b2) = build();
        for _ in 0..600 {
            w1.step().unwrap();
            w2.step().unwrap();
        }
        let (p1, p2) = (w1.body(b1), w2.body(b2));
        assert_eq!(p1.position.x.to_bits(), p2.position.x.to_bits());
        assert_eq!(p1.position.z.to_bits(), p2.position.z.to_bits());
        assert_eq!(
            p1.orientation.as_ref().coords.x.to_bits(),
            p2.orientation.as_ref().coords.x.to_bits()
        );
    }

    #[test]
    fn settle_predicate_cases() {
        let thr = SettleThresholds {
            rot_sum: 0.05,
            pos_sum: 0.01,
            metric: RotationMetric::Frobenius,
        };
        let still = vec![Pose::identity(); SETTLE_WINDOW];
        assert!(is_settled(&still, &thr).unwrap());

        // 1 cm per step sums to 0.49 m over 49 gaps: far beyond threshold.
        let translating: Vec<Pose> = (0..SETTLE_WINDOW)
            .map(|i| Pose::from_translation(Vector3::new(0.01 * i as f64, 0.0, 0.0)))
            .collect();
        assert!(!is_settled(&translating, &thr).unwrap());

        // Slow creep summing to half the threshold passes.
        let creep: Vec<Pose> = (0..SETTLE_WINDOW)
            .map(|i| {
                Pose::from_translation(Vector3::new(
                    0.5 * thr.pos_sum * i as f64 / (SETTLE_WINDOW - 1) as f64,
                    0.0,
                    0.0,
                ))
            })
            .collect();
        assert!(is_settled(&creep, &thr).unwrap());

        assert!(is_settled(&still[..10], &thr).is_err());
    }

    #[test]
    fn run_until_records_expected_trajectory_length() {
        let (mut w, _) = world_with_ground();
        let b = w.add_body(dynamic_box(
            0.1,
            600.0,
            Material { friction: 0.5, restitution: 0.1 },
            &Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
        ));
        let traj = run_plain(&mut w, b, 1000).unwrap();
        assert_eq!(traj.poses.len(), 1001);
        assert!(traj.last_window().is_some());
    }
}
