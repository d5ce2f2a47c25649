//! Stable-pose discovery: drop the canonicalized object over a roll/pitch
//! grid and keep the settled, pairwise non-equivalent terminal poses.

use nalgebra::Vector3;

use crate::dynamics::{is_settled, run_plain, run_until, Body, FrameRecorder, World, SETTLE_WINDOW};
use crate::error::Result;
use crate::imagination::{ImaginationConfig, PreparedObject};
use crate::parallel::map_ordered;
use crate::se3::{equivalently_stable, euler_to_matrix, matrix_to_euler, Pose};

/// A settled, deduplicated resting pose.
#[derive(Clone, Debug)]
pub struct StablePose {
    /// Body-frame (center of mass) pose: the paper-facing g_s.
    pub pose: Pose,
    /// Pose of the canonical mesh frame, used to respawn the object.
    pub ref_pose: Pose,
    /// Roll/pitch of the drop that produced this pose.
    pub source_roll: f64,
    pub source_pitch: f64,
    /// Settle diagnostics: summed rotation/translation motion over the
    /// final window.
    pub settle_rot_sum: f64,
    pub settle_pos_sum: f64,
}

/// Drops the object over the (roll, pitch) grid with yaw zero and collects
/// settled terminal poses, deduplicated by the equivalently-stable
/// predicate with first-representative-wins.
///
/// An empty result is valid: the object never comes to rest (or every drop
/// diverges).
pub fn imagine_stable_poses(
    object: &PreparedObject,
    cfg: &ImaginationConfig,
) -> Result<Vec<StablePose>> {
    let steps = cfg.drop_grid_steps.max(1);
    let delta = 2.0 * std::f64::consts::PI / steps as f64;
    let beta_count = if cfg.half_beta_cover {
        steps / 2 + 1
    } else {
        steps
    };

    let mut grid = Vec::with_capacity(steps * beta_count);
    for ai in 0..steps {
        for bi in 0..beta_count {
            grid.push((ai as f64 * delta, bi as f64 * delta));
        }
    }

    let results = map_ordered(cfg.execution, grid, |(alpha, beta)| {
        drop_once(object, cfg, alpha, beta)
    });

    // Serial dedup in grid order keeps the outcome independent of the
    // execution mode.
    let mut kept: Vec<StablePose> = Vec::new();
    for candidate in results.into_iter().flatten() {
        let duplicate = kept.iter().any(|existing| {
            equivalently_stable(&existing.pose, &candidate.pose, &cfg.equivalence, cfg.metric)
        });
        if !duplicate {
            kept.push(candidate);
        }
    }
    Ok(kept)
}

/// One drop; `None` when the object fails to settle or the run diverges.
fn drop_once(
    object: &PreparedObject,
    cfg: &ImaginationConfig,
    alpha: f64,
    beta: f64,
) -> Option<StablePose> {
    let rotation = euler_to_matrix(alpha, beta, 0.0).ok()?;
    let height = object.obb.half_diagonal() + cfg.drop_clearance;

    let mut world = World::new(cfg.world_params());
    world.add_body(Body::new_static(
        crate::dynamics::CollisionShape::Plane { height: 0.0 },
        cfg.ground_material(),
        &Pose::identity(),
    ));
    let body = world.add_body(Body::new_dynamic(
        object.shape.clone(),
        &object.mass_props,
        cfg.object_material(),
        &Pose {
            rotation,
            translation: Vector3::new(0.0, 0.0, height),
        },
    ));

    let traj = match &cfg.dump_frames {
        Some(dir) => {
            let name = format!("drop_a{alpha:.2}_b{beta:.2}.frames");
            let file = std::fs::File::create(dir.join(name)).ok()?;
            let mut rec = FrameRecorder::new(std::io::BufWriter::new(file));
            run_until(&mut world, body, cfg.drop_steps, Some(&mut rec)).ok()?
        }
        None => run_plain(&mut world, body, cfg.drop_steps).ok()?,
    };
    let window = traj.last_window()?;
    let thr = cfg.settle_thresholds();
    if !is_settled(window, &thr).ok()? {
        return None;
    }

    let mut rot_sum = 0.0;
    let mut pos_sum = 0.0;
    for w in window.windows(2) {
        rot_sum += cfg.metric.distance(&w[0].rotation, &w[1].rotation);
        pos_sum += (w[1].translation - w[0].translation).norm();
    }
    debug_assert_eq!(window.len(), SETTLE_WINDOW);

    Some(StablePose {
        pose: world.body(body).pose(),
        ref_pose: world.body(body).ref_pose(),
        source_roll: alpha,
        source_pitch: beta,
        settle_rot_sum: rot_sum,
        settle_pos_sum: pos_sum,
    })
}

impl StablePose {
    /// The object's ref-frame placement for a sitting trial: same roll and
    /// pitch, requested absolute yaw, OBB center on the z-axis, original
    /// resting height.
    pub fn trial_ref_pose(&self, yaw: f64) -> Pose {
        let e = matrix_to_euler(&self.pose.rotation);
        let target_rot = euler_to_matrix(e.roll, e.pitch, yaw)
            .expect("euler angles from a valid rotation are finite");
        // Keep the body-frame height: the ref origin (OBB center) goes on
        // the z-axis and the COM keeps z_s.
        let rel = target_rot * self.pose.rotation.transpose();
        let com_offset = self.pose.translation - self.ref_pose.translation;
        let rotated_offset = rel.apply(&com_offset);
        Pose {
            rotation: rel * self.ref_pose.rotation,
            translation: Vector3::new(0.0, 0.0, self.pose.translation.z - rotated_offset.z),
        }
    }
}
