// Temporary probe: full pipeline on procedural objects.
use sitsim_core::harness::*;
use sitsim_core::parallel::Execution;

#[test]
#[ignore]
fn probe_pipeline_kinds() {
    let mut cfg = PipelineConfig::default();
    cfg.random_orientation = true;
    let options = RunOptions {
        execution: Execution::default(),
        verbose_trials: false,
        timings: true,
        dump_frames: None,
    };
    for kind in [ObjectKind::ArmlessChair, ObjectKind::Chair, ObjectKind::Table, ObjectKind::Stool, ObjectKind::BrokenChair, ObjectKind::Box, ObjectKind::TallShelf] {
        let id = format!("{}_probe", kind.name());
        let (mesh, ann) = generate_procedural_object(kind, &id, 11).unwrap();
        let t0 = std::time::Instant::now();
        let report = run_pipeline_on_mesh(&mesh, &id, &cfg, &options);
        let dt = t0.elapsed().as_secs_f64();
        let pose_ok = if ann.sittable && report.is_chair == Some(true) {
            match (&report.functional_up_file, report.functional_com_height) {
                (Some(u), Some(h)) => Some(evaluate_prediction(u, h, &ann).unwrap()),
                _ => None,
            }
        } else { None };
        println!(
            "{:14} chair={:?} S={:.3?} N={:?} poses={} pose_ok={:?} scale={:.2?} t={:.1}s status={}",
            kind.name(), report.is_chair, report.quality, report.correct_count,
            report.stable_poses.len(), pose_ok, report.agent_scale, dt, report.status,
        );
        for sp in &report.stable_poses {
            println!("   pose(roll={:+.2} pitch={:+.2}) z={:+.3} N={} Hbar={:.3} Jbar={:.2} Lbar={:.2} key={:.3}",
                sp.source_roll, sp.source_pitch, sp.pose.position[2], sp.correct_count,
                sp.mean_height, sp.mean_joint_score, sp.mean_link_score, sp.selection_key);
        }
    }
}
