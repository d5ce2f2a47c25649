//! Sequential-impulse constraint solver.
//!
//! Velocity pass: iterated per-row impulses with accumulator clamping.
//! Contact rows use Newton restitution (captured from pre-solve approach
//! velocity, combined as the product of the pair's coefficients) and a
//! Coulomb friction pyramid (two tangent rows clamped by mu times the
//! accumulated normal impulse, mu combined geometrically). Joint rows are
//! anchor blocks (3x3), angular locks, speculative limits, and a combined
//! dry-friction/damping row per hinge axis.
//!
//! Position pass: split-impulse style nonlinear Gauss-Seidel on the
//! integrated poses; it never touches velocities, so the correction cannot
//! inject kinetic energy. The work done lifting bodies during correction is
//! reported in the step stats as the admissible energy bound.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::dynamics::body::{Body, BodyKind};
use crate::dynamics::contact::{collide, ContactPoint, CONTACT_MARGIN};
use crate::dynamics::joint::Joint;
use crate::error::{Error, Result};

/// Relative normal speed below which restitution is ignored.
pub const RESTITUTION_THRESHOLD: f64 = 0.2;
/// Allowed resting penetration before position correction engages.
pub const PENETRATION_SLOP: f64 = 5e-4;
/// Fraction of the violation corrected per position iteration.
const CONTACT_BETA: f64 = 0.2;
const JOINT_BETA: f64 = 0.6;
/// Per-iteration correction caps (meters / radians).
const MAX_LINEAR_CORRECTION: f64 = 0.01;
const MAX_ANGULAR_CORRECTION: f64 = 0.05;
/// Speculative activation band for joint limits, radians.
const LIMIT_BAND: f64 = 0.08;

#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    /// Sum over dynamic bodies of m * g * max(0, dz) moved by the position
    /// pass this step: the bound on admissible potential-energy increase.
    pub correction_lift_work: f64,
    /// Deepest contact penetration seen at generation time.
    pub max_penetration: f64,
}

pub(crate) struct SolverParams {
    pub dt: f64,
    pub gravity: Vector3<f64>,
    pub velocity_iterations: usize,
    pub position_iterations: usize,
}

struct ContactRow {
    a: usize,
    b: usize,
    r_a: Vector3<f64>,
    r_b: Vector3<f64>,
    local_a: Vector3<f64>,
    local_b: Vector3<f64>,
    normal: Vector3<f64>,
    t1: Vector3<f64>,
    t2: Vector3<f64>,
    mass_n: f64,
    mass_t1: f64,
    mass_t2: f64,
    /// Minimum admissible post-solve normal velocity.
    target_vn: f64,
    friction: f64,
    penetration: f64,
    acc_n: f64,
    acc_t1: f64,
    acc_t2: f64,
}

struct LimitRow {
    axis: usize,
    /// +1: keeps the angle above the bound (lower limit); -1: below.
    side: f64,
    /// Minimum admissible approach velocity (negative while the angle is
    /// still inside the band: the hinge may close the remaining distance
    /// this step but no faster).
    target_min: f64,
    acc: f64,
}

struct MotorRow {
    axis: usize,
    max_impulse: f64,
    acc: f64,
}

struct JointRuntime {
    joint: usize,
    a: usize,
    b: usize,
    r_a: Vector3<f64>,
    r_b: Vector3<f64>,
    k_lin_inv: Matrix3<f64>,
    axes: [Vector3<f64>; 3],
    ang_mass: [f64; 3],
    locked: Vec<usize>,
    limits: Vec<LimitRow>,
    motors: Vec<MotorRow>,
}

pub(crate) fn step(
    bodies: &mut [Body],
    joints: &[Joint],
    exclusions: &std::collections::BTreeSet<(usize, usize)>,
    params: &SolverParams,
    step_index: u64,
) -> Result<(Vec<ContactPoint>, StepStats)> {
    let dt = params.dt;

    // Integrate velocities.
    for body in bodies.iter_mut() {
        if body.is_dynamic() {
            body.linear_velocity += params.gravity * dt;
        }
    }

    // Collision detection.
    let contacts = detect_contacts(bodies, exclusions, dt);

    // Constraint preparation.
    let mut stats = StepStats::default();
    let mut rows: Vec<ContactRow> = contacts
        .iter()
        .map(|c| {
            stats.max_penetration = stats.max_penetration.max(c.penetration);
            prep_contact(bodies, c, dt)
        })
        .collect();
    let mut jr: Vec<JointRuntime> = joints
        .iter()
        .enumerate()
        .map(|(ji, j)| prep_joint(bodies, j, ji, dt))
        .collect();

    // Velocity iterations.
    for _ in 0..params.velocity_iterations {
        for r in jr.iter_mut() {
            solve_joint_velocity(bodies, r);
        }
        for r in rows.iter_mut() {
            solve_contact_velocity(bodies, r);
        }
    }

    // Integrate poses.
    for body in bodies.iter_mut() {
        if !body.is_dynamic() {
            continue;
        }
        body.position += body.linear_velocity * dt;
        body.orientation = integrate_orientation(&body.orientation, &body.angular_velocity, dt);
    }

    // Position correction (pseudo impulses; velocities untouched).
    let pre_z: Vec<f64> = bodies.iter().map(|b| b.position.z).collect();
    for _ in 0..params.position_iterations {
        for r in jr.iter_mut() {
            solve_joint_position(bodies, joints, r);
        }
        for r in rows.iter_mut() {
            solve_contact_position(bodies, r);
        }
    }
    for (i, body) in bodies.iter().enumerate() {
        if body.is_dynamic() {
            let dz = body.position.z - pre_z[i];
            if dz > 0.0 {
                stats.correction_lift_work += body.mass * params.gravity.norm() * dz;
            }
        }
    }

    // Divergence check.
    for (i, body) in bodies.iter().enumerate() {
        let finite = body.position.iter().all(|x| x.is_finite())
            && body.linear_velocity.iter().all(|x| x.is_finite())
            && body.angular_velocity.iter().all(|x| x.is_finite())
            && body.orientation.as_ref().coords.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::SimulationDiverged {
                body: i,
                step: step_index,
            });
        }
    }

    Ok((contacts, stats))
}

fn integrate_orientation(
    q: &UnitQuaternion<f64>,
    omega: &Vector3<f64>,
    dt: f64,
) -> UnitQuaternion<f64> {
    let w = Quaternion::new(0.0, omega.x, omega.y, omega.z);
    let dq = w * q.as_ref() * (0.5 * dt);
    UnitQuaternion::new_normalize(q.as_ref() + dq)
}

fn detect_contacts(
    bodies: &[Body],
    exclusions: &std::collections::BTreeSet<(usize, usize)>,
    dt: f64,
) -> Vec<ContactPoint> {
    let aabbs: Vec<_> = bodies
        .iter()
        .map(|b| {
            let mut bb = b.shape.aabb(&b.pose());
            let expand = CONTACT_MARGIN + b.linear_velocity.norm() * dt;
            bb.min -= Vector3::repeat(expand);
            bb.max += Vector3::repeat(expand);
            bb
        })
        .collect();

    let mut out = Vec::new();
    for i in 0..bodies.len() {
        for j in (i + 1)..bodies.len() {
            let (bi, bj) = (&bodies[i], &bodies[j]);
            if bi.kind == BodyKind::Static && bj.kind == BodyKind::Static {
                continue;
            }
            if (bi.group & bj.mask) == 0 || (bj.group & bi.mask) == 0 {
                continue;
            }
            if exclusions.contains(&(i, j)) {
                continue;
            }
            let (a, b) = (&aabbs[i], &aabbs[j]);
            if (0..3).any(|k| a.min[k] > b.max[k] || b.min[k] > a.max[k]) {
                continue;
            }
            for raw in collide(&bi.shape, &bi.pose(), &bj.shape, &bj.pose()) {
                out.push(ContactPoint {
                    body_a: i,
                    body_b: j,
                    position: raw.position,
                    normal: raw.normal,
                    penetration: raw.penetration,
                    gap: raw.gap,
                });
            }
        }
    }
    out
}

fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = {
        let t = helper.cross(n);
        t / t.norm()
    };
    let t2 = n.cross(&t1);
    (t1, t2)
}

fn effective_mass(bodies: &[Body], a: usize, b: usize, r_a: &Vector3<f64>, r_b: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
    let (ba, bb) = (&bodies[a], &bodies[b]);
    let ra_x_d = r_a.cross(dir);
    let rb_x_d = r_b.cross(dir);
    let k = ba.inv_mass
        + bb.inv_mass
        + ra_x_d.dot(&(ba.inv_inertia_world() * ra_x_d))
        + rb_x_d.dot(&(bb.inv_inertia_world() * rb_x_d));
    if k > 0.0 {
        1.0 / k
    } else {
        0.0
    }
}

fn prep_contact(bodies: &[Body], c: &ContactPoint, dt: f64) -> ContactRow {
    let (a, b) = (c.body_a, c.body_b);
    let r_a = c.position - bodies[a].position;
    let r_b = c.position - bodies[b].position;
    let (t1, t2) = tangent_basis(&c.normal);

    let v_rel = bodies[a].velocity_at(&c.position) - bodies[b].velocity_at(&c.position);
    let vn0 = v_rel.dot(&c.normal);
    let e = bodies[a].material.restitution * bodies[b].material.restitution;
    let restitution_target = if -vn0 > RESTITUTION_THRESHOLD {
        e * (-vn0)
    } else {
        0.0
    };
    // Separated contacts may close their gap this step but no faster.
    let approach_allowance = -c.gap / dt;
    let target_vn = restitution_target.max(approach_allowance);

    let friction = (bodies[a].material.friction * bodies[b].material.friction)
        .max(0.0)
        .sqrt();

    let local_a = bodies[a].rotation().transpose().apply(&r_a);
    let local_b = bodies[b].rotation().transpose().apply(&r_b);

    ContactRow {
        a,
        b,
        r_a,
        r_b,
        local_a,
        local_b,
        normal: c.normal,
        t1,
        t2,
        mass_n: effective_mass(bodies, a, b, &r_a, &r_b, &c.normal),
        mass_t1: effective_mass(bodies, a, b, &r_a, &r_b, &t1),
        mass_t2: effective_mass(bodies, a, b, &r_a, &r_b, &t2),
        target_vn,
        friction,
        penetration: c.penetration,
        acc_n: 0.0,
        acc_t1: 0.0,
        acc_t2: 0.0,
    }
}

fn apply_impulse(bodies: &mut [Body], i: usize, impulse: &Vector3<f64>, r: &Vector3<f64>) {
    let body = &mut bodies[i];
    if !body.is_dynamic() {
        return;
    }
    body.linear_velocity += impulse * body.inv_mass;
    let inv_i = body.inv_inertia_world();
    body.angular_velocity += inv_i * r.cross(impulse);
}

fn solve_contact_velocity(bodies: &mut [Body], row: &mut ContactRow) {
    // Normal row.
    let v_rel = bodies[row.a].velocity_at(&(bodies[row.a].position + row.r_a))
        - bodies[row.b].velocity_at(&(bodies[row.b].position + row.r_b));
    let vn = v_rel.dot(&row.normal);
    let lambda = -(vn - row.target_vn) * row.mass_n;
    let new_acc = (row.acc_n + lambda).max(0.0);
    let delta = new_acc - row.acc_n;
    row.acc_n = new_acc;
    let imp = row.normal * delta;
    apply_impulse(bodies, row.a, &imp, &row.r_a);
    apply_impulse(bodies, row.b, &-imp, &row.r_b);

    // Friction pyramid.
    let max_f = row.friction * row.acc_n;
    for (dir, mass, acc) in [
        (row.t1, row.mass_t1, &mut row.acc_t1),
        (row.t2, row.mass_t2, &mut row.acc_t2),
    ] {
        let v_rel = bodies[row.a].velocity_at(&(bodies[row.a].position + row.r_a))
            - bodies[row.b].velocity_at(&(bodies[row.b].position + row.r_b));
        let vt = v_rel.dot(&dir);
        let lambda = -vt * mass;
        let new_acc = (*acc + lambda).clamp(-max_f, max_f);
        let delta = new_acc - *acc;
        *acc = new_acc;
        let imp = dir * delta;
        apply_impulse(bodies, row.a, &imp, &row.r_a);
        apply_impulse(bodies, row.b, &-imp, &row.r_b);
    }
}

fn prep_joint(bodies: &[Body], joint: &Joint, ji: usize, dt: f64) -> JointRuntime {
    let (a, b) = (joint.parent, joint.child);
    let r_a = bodies[a].rotation().apply(&joint.anchor_parent);
    let r_b = bodies[b].rotation().apply(&joint.anchor_child);

    let (ba, bb) = (&bodies[a], &bodies[b]);
    let skew = |v: &Vector3<f64>| {
        Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
    };
    let k = Matrix3::identity() * (ba.inv_mass + bb.inv_mass)
        - skew(&r_a) * ba.inv_inertia_world() * skew(&r_a)
        - skew(&r_b) * bb.inv_inertia_world() * skew(&r_b);
    let k_lin_inv = k.try_inverse().unwrap_or_else(Matrix3::zeros);

    let axes = joint.axes_world(&bodies[a]);
    let angles = joint.angles(&bodies[a], &bodies[b]);
    let inv_sum = ba.inv_inertia_world() + bb.inv_inertia_world();
    let ang_mass = [
        safe_inv(axes[0].dot(&(inv_sum * axes[0]))),
        safe_inv(axes[1].dot(&(inv_sum * axes[1]))),
        safe_inv(axes[2].dot(&(inv_sum * axes[2]))),
    ];

    let mut limits = Vec::new();
    let mut motors = Vec::new();
    for dof in &joint.dofs {
        let theta = angles[dof.axis];
        if theta < dof.limits[0] + LIMIT_BAND {
            let dist = (theta - dof.limits[0]).max(0.0);
            limits.push(LimitRow {
                axis: dof.axis,
                side: 1.0,
                target_min: -dist / dt,
                acc: 0.0,
            });
        }
        if theta > dof.limits[1] - LIMIT_BAND {
            let dist = (dof.limits[1] - theta).max(0.0);
            limits.push(LimitRow {
                axis: dof.axis,
                side: -1.0,
                target_min: -dist / dt,
                acc: 0.0,
            });
        }
        let omega_rel =
            (bodies[b].angular_velocity - bodies[a].angular_velocity).dot(&axes[dof.axis]);
        motors.push(MotorRow {
            axis: dof.axis,
            max_impulse: (dof.dry_friction + dof.damping * omega_rel.abs()) * dt,
            acc: 0.0,
        });
    }

    JointRuntime {
        joint: ji,
        a,
        b,
        r_a,
        r_b,
        k_lin_inv,
        axes,
        ang_mass,
        locked: joint.locked_axes(),
        limits,
        motors,
    }
}

fn safe_inv(x: f64) -> f64 {
    if x > 1e-12 {
        1.0 / x
    } else {
        0.0
    }
}

fn apply_angular_impulse(bodies: &mut [Body], i: usize, impulse: &Vector3<f64>) {
    let body = &mut bodies[i];
    if !body.is_dynamic() {
        return;
    }
    let inv_i = body.inv_inertia_world();
    body.angular_velocity += inv_i * impulse;
}

fn solve_joint_velocity(bodies: &mut [Body], r: &mut JointRuntime) {
    // Angular locks: drive relative angular velocity about locked axes to 0.
    for &ax in &r.locked {
        let u = r.axes[ax];
        let w_rel = (bodies[r.b].angular_velocity - bodies[r.a].angular_velocity).dot(&u);
        let lambda = -w_rel * r.ang_mass[ax];
        let imp = u * lambda;
        apply_angular_impulse(bodies, r.b, &imp);
        apply_angular_impulse(bodies, r.a, &-imp);
    }

    // Limits: one-sided rows keeping the hinge angle inside its range.
    for lim in r.limits.iter_mut() {
        let u = r.axes[lim.axis];
        let w_rel = (bodies[r.b].angular_velocity - bodies[r.a].angular_velocity).dot(&u);
        // Velocity away from the bound, which may not drop below target_min.
        let v = lim.side * w_rel;
        let lambda = -(v - lim.target_min) * r.ang_mass[lim.axis];
        let new_acc = (lim.acc + lambda).max(0.0);
        let delta = new_acc - lim.acc;
        lim.acc = new_acc;
        let imp = u * (lim.side * delta);
        apply_angular_impulse(bodies, r.b, &imp);
        apply_angular_impulse(bodies, r.a, &-imp);
    }

    // Dry friction + damping: oppose hinge motion up to a torque budget.
    for m in r.motors.iter_mut() {
        let u = r.axes[m.axis];
        let w_rel = (bodies[r.b].angular_velocity - bodies[r.a].angular_velocity).dot(&u);
        let lambda = -w_rel * r.ang_mass[m.axis];
        let new_acc = (m.acc + lambda).clamp(-m.max_impulse, m.max_impulse);
        let delta = new_acc - m.acc;
        m.acc = new_acc;
        let imp = u * delta;
        apply_angular_impulse(bodies, r.b, &imp);
        apply_angular_impulse(bodies, r.a, &-imp);
    }

    // Anchor coincidence: 3x3 block solve.
    let v_rel = bodies[r.b].velocity_at(&(bodies[r.b].position + r.r_b))
        - bodies[r.a].velocity_at(&(bodies[r.a].position + r.r_a));
    let p = r.k_lin_inv * (-v_rel);
    if bodies[r.b].is_dynamic() {
        let inv_i = bodies[r.b].inv_inertia_world();
        bodies[r.b].linear_velocity += p * bodies[r.b].inv_mass;
        bodies[r.b].angular_velocity += inv_i * r.r_b.cross(&p);
    }
    if bodies[r.a].is_dynamic() {
        let inv_i = bodies[r.a].inv_inertia_world();
        bodies[r.a].linear_velocity -= p * bodies[r.a].inv_mass;
        bodies[r.a].angular_velocity -= inv_i * r.r_a.cross(&p);
    }
}

/// Applies a positional (pseudo) linear impulse: moves positions and
/// orientations without changing velocities.
fn apply_pseudo_impulse(bodies: &mut [Body], i: usize, impulse: &Vector3<f64>, r: &Vector3<f64>) {
    let body = &mut bodies[i];
    if !body.is_dynamic() {
        return;
    }
    let dx = impulse * body.inv_mass;
    let dx = cap_norm(dx, MAX_LINEAR_CORRECTION);
    body.position += dx;
    let inv_i = body.inv_inertia_world();
    let dth = cap_norm(inv_i * r.cross(impulse), MAX_ANGULAR_CORRECTION);
    body.orientation = integrate_orientation(&body.orientation, &dth, 1.0);
}

fn apply_pseudo_angular(bodies: &mut [Body], i: usize, impulse: &Vector3<f64>) {
    let body = &mut bodies[i];
    if !body.is_dynamic() {
        return;
    }
    let inv_i = body.inv_inertia_world();
    let dth = cap_norm(inv_i * impulse, MAX_ANGULAR_CORRECTION);
    body.orientation = integrate_orientation(&body.orientation, &dth, 1.0);
}

fn cap_norm(v: Vector3<f64>, cap: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > cap {
        v * (cap / n)
    } else {
        v
    }
}

fn solve_contact_position(bodies: &mut [Body], row: &ContactRow) {
    // Current world positions of the contact material points.
    let pa = bodies[row.a].pose().apply(&row.local_a);
    let pb = bodies[row.b].pose().apply(&row.local_b);
    let separation_gain = row.normal.dot(&(pa - pb));
    let pen_now = row.penetration - separation_gain;
    let violation = pen_now - PENETRATION_SLOP;
    if violation <= 0.0 {
        return;
    }
    let lambda = CONTACT_BETA * violation * row.mass_n;
    let imp = row.normal * lambda;
    let r_a = pa - bodies[row.a].position;
    let r_b = pb - bodies[row.b].position;
    apply_pseudo_impulse(bodies, row.a, &imp, &r_a);
    apply_pseudo_impulse(bodies, row.b, &-imp, &r_b);
}

fn solve_joint_position(bodies: &mut [Body], joints: &[Joint], r: &JointRuntime) {
    let joint = &joints[r.joint];

    // Anchor drift.
    let pa = bodies[r.a].pose().apply(&joint.anchor_parent);
    let pb = bodies[r.b].pose().apply(&joint.anchor_child);
    let err = pb - pa;
    if err.norm() > 1e-12 {
        let p = r.k_lin_inv * (-err * JOINT_BETA);
        let r_a = pa - bodies[r.a].position;
        let r_b = pb - bodies[r.b].position;
        apply_pseudo_impulse(bodies, r.b, &p, &r_b);
        apply_pseudo_impulse(bodies, r.a, &-p, &r_a);
    }

    // Angular drift: locked axes back to zero, limit overshoot back inside.
    let angles = joint.angles(&bodies[r.a], &bodies[r.b]);
    let axes = joint.axes_world(&bodies[r.a]);
    for &ax in &r.locked {
        let err = angles[ax];
        if err.abs() > 1e-12 {
            let imp = axes[ax] * (-err * JOINT_BETA * r.ang_mass[ax]);
            apply_pseudo_angular(bodies, r.b, &imp);
            apply_pseudo_angular(bodies, r.a, &-imp);
        }
    }
    for dof in &joint.dofs {
        let theta = angles[dof.axis];
        let overshoot = if theta < dof.limits[0] {
            theta - dof.limits[0]
        } else if theta > dof.limits[1] {
            theta - dof.limits[1]
        } else {
            continue;
        };
        let imp = axes[dof.axis] * (-overshoot * JOINT_BETA * r.ang_mass[dof.axis]);
        apply_pseudo_angular(bodies, r.b, &imp);
        apply_pseudo_angular(bodies, r.a, &-imp);
    }
}
