// Temporary probe: per-trial clause diagnostics for one object kind.
use sitsim_core::agent::*;
use sitsim_core::dynamics::CollisionShape;
use sitsim_core::geometry::*;
use sitsim_core::harness::*;
use sitsim_core::imagination::*;
use sitsim_core::se3::Pose;

#[test]
#[ignore]
fn probe_armchair_trials() {
    let kind: ObjectKind = std::env::var("PROBE_KIND").unwrap_or("chair".into()).parse().unwrap();
    let seed: u64 = std::env::var("PROBE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(11);
    let (mesh, _ann) = generate_procedural_object(kind, "probe", seed).unwrap();
    let cfg = PipelineConfig::default();
    // Reproduce the pipeline's preparation with the same random orientation.
    let r = random_orientation(object_seed(cfg.seed, "chair_probe"));
    let oriented = mesh.transformed(&Pose { rotation: r, translation: nalgebra::Vector3::zeros() });
    let obb_out = obb_transform(&oriented).unwrap();
    let mp = mass_properties(&obb_out.mesh, 600.0).unwrap();
    let pieces = convex_decompose(&obb_out.mesh, 32).unwrap();
    let prepared = PreparedObject {
        obb: obb_out.obb,
        mass_props: mp,
        shape: CollisionShape::from_pieces(&pieces),
        hull_mass_fallback: false,
        mesh: obb_out.mesh,
    };
    let im = cfg.imagination(sitsim_core::parallel::Execution::default());
    let stable = imagine_stable_poses(&prepared, &im).unwrap();
    let spec = AgentSpec::default_human();
    let agent = build_agent(&prepared.obb, &spec).unwrap();
    println!("kind={} scale={:.3} stable poses={}", kind.name(), agent.scale, stable.len());
    let thr = &im.detection;
    for (i, sp) in stable.iter().enumerate() {
        let score = evaluate_stable_pose(&prepared, sp, i, &agent, &im);
        if score.trials.iter().all(|t| t.contacts.total() == 0) { 
            println!("pose {i}: no contact trials, skipping detail"); continue; 
        }
        println!("pose {i} (z={:.3}): N={}", sp.pose.translation.z, score.correct_count);
        for t in &score.trials {
            if t.contacts.total() == 0 { continue; }
            let s = t.band_scale;
            let clauses = format!(
                "J{} L{} H{} B{} T{}",
                if t.joint_score < thr.joint_score {"+"} else {"-"},
                if t.link_score < thr.link_score {"+"} else {"-"},
                if t.sitting_height > thr.height_min*s && t.sitting_height < thr.height_max*s {"+"} else {"-"},
                if t.contacts.back_and_thighs() {"+"} else {"-"},
                if t.contacts.total() >= thr.contact_total {"+"} else {"-"},
            );
            println!("  yaw={:5.2} slot={} J={:6.2} L={:6.2} H={:.3} c=({},{},{},{}) {} {}",
                t.yaw, t.slot, t.joint_score.min(99.0), t.link_score.min(99.0), t.sitting_height,
                t.contacts.head, t.contacts.chest, t.contacts.thigh_l, t.contacts.thigh_r,
                clauses, if t.correct {"CORRECT"} else {""});
        }
    }
}
