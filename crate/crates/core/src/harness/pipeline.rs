//! The end-to-end pipeline for one object: load, scale, orient,
//! canonicalize, decompose, weigh, imagine stable poses, run the sitting
//! sweep, classify, and report.

use std::time::Instant;

use crate::agent::{build_agent, AgentModel, AgentSpec};
use crate::dynamics::CollisionShape;
use crate::error::{Error, Result};
use crate::geometry::{
    convex_decompose, convex_hull, load_mesh, mass_properties, obb_transform, TriMesh,
};
use crate::harness::config::PipelineConfig;
use crate::harness::orientation::{object_seed, random_orientation};
use crate::harness::report::{
    quality_for_report, PoseRecord, Report, ReportFlags, StablePoseRecord, Timings, TrialRecord,
    REPORT_SCHEMA,
};
use crate::imagination::{
    classify, evaluate_stable_pose, imagine_stable_poses, PoseScore,
    PreparedObject,
};
use crate::parallel::Execution;
use crate::se3::{matrix_to_euler, Pose, Rotation};

/// Run-time options that do not participate in report identity.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Include per-trial records.
    pub verbose_trials: bool,
    /// Capture wall-clock timings (makes reports non-reproducible).
    pub timings: bool,
    /// Dump per-step scene states under this directory.
    pub dump_frames: Option<std::path::PathBuf>,
}

/// Loads the agent description, either the built-in default or a file.
pub fn load_agent_spec(cfg: &PipelineConfig) -> Result<AgentSpec> {
    match &cfg.agent_file {
        None => Ok(AgentSpec::default_human()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{path}: {e}")))?;
            AgentSpec::from_json(&text)
        }
    }
}

/// Runs the pipeline on a mesh file.
pub fn run_pipeline(
    mesh_path: &std::path::Path,
    object_id: &str,
    cfg: &PipelineConfig,
    options: &RunOptions,
) -> Report {
    match load_mesh(mesh_path) {
        Ok(mesh) => run_pipeline_on_mesh(&mesh, object_id, cfg, options),
        Err(e) => error_report(object_id, cfg, format!("load failed: {e}")),
    }
}

/// Runs the pipeline on an already-loaded mesh (file-frame coordinates).
pub fn run_pipeline_on_mesh(
    mesh: &TriMesh,
    object_id: &str,
    cfg: &PipelineConfig,
    options: &RunOptions,
) -> Report {
    match pipeline_inner(mesh, object_id, cfg, options) {
        Ok(report) => report,
        Err(e) => error_report(object_id, cfg, e.to_string()),
    }
}

fn error_report(object_id: &str, cfg: &PipelineConfig, message: String) -> Report {
    Report {
        schema: REPORT_SCHEMA.into(),
        object_id: object_id.into(),
        status: format!("error: {message}"),
        is_chair: None,
        quality: None,
        correct_count: None,
        functional_pose: None,
        functional_up_file: None,
        functional_com_height: None,
        applied_orientation: None,
        agent_scale: None,
        stable_poses: Vec::new(),
        trials: None,
        flags: ReportFlags::default(),
        timings: None,
        config_hash: cfg.hash(),
        config: cfg.clone(),
    }
}

fn pipeline_inner(
    file_mesh: &TriMesh,
    object_id: &str,
    cfg: &PipelineConfig,
    options: &RunOptions,
) -> Result<Report> {
    cfg.validate()?;
    let t_start = Instant::now();
    let mut flags = ReportFlags::default();

    // Scale and randomly orient.
    let mesh = file_mesh.scaled(cfg.pre_scale)?;
    let applied = if cfg.random_orientation {
        Some(random_orientation(object_seed(cfg.seed, object_id)))
    } else {
        None
    };
    let oriented = match &applied {
        Some(r) => mesh.transformed(&Pose {
            rotation: *r,
            translation: nalgebra::Vector3::zeros(),
        }),
        None => mesh,
    };

    // Canonicalize, weigh, decompose.
    let obb_out = obb_transform(&oriented)?;
    let canonical = obb_out.mesh;
    let mass_props = if canonical.is_watertight() {
        mass_properties(&canonical, cfg.density)?
    } else {
        flags.hull_mass_fallback = true;
        mass_properties(&convex_hull(&canonical)?, cfg.density)?
    };
    let pieces = match convex_decompose(&canonical, cfg.decompose_budget) {
        Ok(set) => set,
        Err(Error::Decomposition { best, .. }) => {
            flags.decomposition_incomplete = true;
            best
        }
        Err(e) => return Err(e),
    };
    let prepared = PreparedObject {
        obb: obb_out.obb,
        mass_props,
        shape: CollisionShape::from_pieces(&pieces),
        hull_mass_fallback: flags.hull_mass_fallback,
        mesh: canonical,
    };
    let t_geometry = Instant::now();

    // Stable poses.
    let mut imagination = cfg.imagination(options.execution);
    imagination.dump_frames = options.dump_frames.clone();
    let stable_poses = imagine_stable_poses(&prepared, &imagination)?;
    let t_stable = Instant::now();

    // Sitting sweep per stable pose.
    let agent_spec = load_agent_spec(cfg)?;
    let agent: AgentModel = build_agent(&prepared.obb, &agent_spec)?;
    let scores: Vec<PoseScore> = stable_poses
        .iter()
        .enumerate()
        .map(|(i, sp)| evaluate_stable_pose(&prepared, sp, i, &agent, &imagination))
        .collect();
    let t_trials = Instant::now();

    for s in &scores {
        flags.diverged_trials += s.trials.iter().filter(|t| t.failed).count();
    }
    for sp in &stable_poses {
        if matrix_to_euler(&sp.pose.rotation).gimbal_lock {
            flags.gimbal_lock_seen = true;
        }
    }

    // Decision.
    let decision = classify(&scores, &stable_poses, &imagination.detection)?;
    flags.degenerate_quality = decision.degenerate_quality;

    // Functional pose mapped back to the file frame for annotation checks.
    let (up_file, com_height) = match &decision.functional_pose {
        Some(g_cand) => {
            let mut total: Rotation = g_cand.rotation * obb_out.g_obb.rotation;
            if let Some(r) = &applied {
                total = total * *r;
            }
            let v = total.world_z_in_body();
            (Some([v.x, v.y, v.z]), Some(g_cand.translation.z))
        }
        None => (None, None),
    };

    let stable_records: Vec<StablePoseRecord> = scores
        .iter()
        .map(|s| {
            let sp = &stable_poses[s.stable_index];
            StablePoseRecord {
                pose: PoseRecord::from_pose(&sp.pose),
                source_roll: sp.source_roll,
                source_pitch: sp.source_pitch,
                correct_count: s.correct_count,
                mean_height: s.mean_height,
                mean_joint_score: s.mean_joint_score,
                mean_link_score: s.mean_link_score,
                selection_key: s.selection_key(),
            }
        })
        .collect();
    let trials = options.verbose_trials.then(|| {
        scores
            .iter()
            .map(|s| {
                s.trials
                    .iter()
                    .map(|t| TrialRecord {
                        yaw: t.yaw,
                        slot: t.slot,
                        joint_score: t.joint_score.min(f64::MAX),
                        link_score: t.link_score.min(f64::MAX),
                        sitting_height: t.sitting_height,
                        contacts: [
                            t.contacts.head,
                            t.contacts.chest,
                            t.contacts.thigh_l,
                            t.contacts.thigh_r,
                        ],
                        correct: t.correct,
                        failed: t.failed,
                    })
                    .collect()
            })
            .collect()
    });

    let timings = options.timings.then(|| Timings {
        total_ms: t_start.elapsed().as_millis() as u64,
        geometry_ms: (t_geometry - t_start).as_millis() as u64,
        stable_poses_ms: (t_stable - t_geometry).as_millis() as u64,
        trials_ms: (t_trials - t_stable).as_millis() as u64,
    });

    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        object_id: object_id.into(),
        status: "ok".into(),
        is_chair: Some(decision.is_chair),
        quality: Some(quality_for_report(decision.quality)),
        correct_count: Some(decision.correct_count),
        functional_pose: decision.functional_pose.as_ref().map(PoseRecord::from_pose),
        functional_up_file: up_file,
        functional_com_height: com_height,
        applied_orientation: applied.map(|r| {
            PoseRecord::from_pose(&Pose {
                rotation: r,
                translation: nalgebra::Vector3::zeros(),
            })
        }),
        agent_scale: Some(agent.scale),
        stable_poses: stable_records,
        trials,
        flags,
        timings,
        config_hash: cfg.hash(),
        config: cfg.clone(),
    })
}
