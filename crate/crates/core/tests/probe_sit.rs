// Temporary probe: drop the seated agent onto a box "chair" and report scores.
use nalgebra::Vector3;
use sitsim_core::agent::*;
use sitsim_core::dynamics::*;
use sitsim_core::se3::*;

#[test]
fn probe_agent_drop_on_chair() {
    let spec = AgentSpec::default_human();
    let model = build_agent_with_scale(&spec, 1.0).unwrap();

    let mut w = World::new(WorldParams::default());
    let _ground = w.add_body(Body::new_static(
        CollisionShape::Plane { height: 0.0 },
        Material { friction: 0.5, restitution: 1.0 },
        &Pose::identity(),
    ));

    // Static chair: seat top at 0.45, backrest behind (-x), top at 0.95.
    let seat = {
        let mut c = ConvexShape::cuboid(Vector3::new(0.225, 0.225, 0.025));
        for p in c.points.iter_mut() { *p += Vector3::new(0.0, 0.0, 0.425); }
        c
    };
    let back = {
        let mut c = ConvexShape::cuboid(Vector3::new(0.025, 0.225, 0.25));
        for p in c.points.iter_mut() { *p += Vector3::new(-0.20, 0.0, 0.70); }
        c
    };
    let object = w.add_body(Body::new_static(
        CollisionShape::Compound(vec![seat, back]),
        Material { friction: 0.5, restitution: 0.1 },
        &Pose::identity(),
    ));

    // Pelvis 15 cm above the object AABB top (0.95).
    let c_pre = spec.c_pre.clone();
    let base = base_pose_for_pelvis(&model, &Vector3::new(0.0, 0.0, 1.10), 0.0);
    let cfg = forward_kinematics(&model, &c_pre, &base).unwrap();
    let spawned = spawn_agent(&mut w, &model, &cfg).unwrap();

    for step in 0..1000 {
        w.step().unwrap();
        if step % 100 == 99 {
            let c = measure_configuration(&w, &model, &spawned);
            let h = sitting_height(&c, &model, 0.0);
            let prof = contact_profile(&w, &model, &spawned, object);
            let pelvis = &c.link_frames[model.pelvis];
            let e = matrix_to_euler(&pelvis.rotation);
            let chest = &c.link_frames[model.chest];
            println!(
                "step {:4}: H={:.3} pelvis(x={:+.3} roll={:+.2} pitch={:+.2}) chest(x={:+.3} z={:.3}) prof={:?}",
                step + 1, h, pelvis.translation.x, e.roll, e.pitch,
                chest.translation.x, chest.translation.z, prof
            );
        }
    }
    let c_res = measure_configuration(&w, &model, &spawned);
    let c_key = forward_kinematics(&model, &spec.c_key, &Pose::identity()).unwrap();
    let j = joint_angle_score(&c_res.theta, &spec.c_key, &spec.weights).unwrap();
    let l = link_rotation_score(&c_res, &c_key, &spec.weights).unwrap();
    let h = sitting_height(&c_res, &model, 0.0);
    let prof = contact_profile(&w, &model, &spawned, object);
    let pelvis_v = w.body(spawned.links[model.pelvis]).linear_velocity.norm();
    println!("FINAL: J={j:.3} L={l:.3} H={h:.3} profile={prof:?} pelvis_speed={pelvis_v:.4}");
    println!(
        "theta_res: {:?}",
        c_res.theta.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
}
