//! Compares the sequential and rayon execution paths of the two
//! data-parallel pipeline stages: the drop grid and the sitting-trial
//! sweep. Both paths produce identical results; the bench measures the
//! speedup only.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector3;

use sitsim_core::agent::{build_agent, AgentSpec};
use sitsim_core::dynamics::{CollisionShape, ConvexShape};
use sitsim_core::geometry::{convex_hull, cuboid, mass_properties, minimum_obb};
use sitsim_core::harness::{generate_procedural_object, ObjectKind};
use sitsim_core::imagination::{
    evaluate_stable_pose, imagine_stable_poses, ImaginationConfig, PreparedObject,
};
use sitsim_core::parallel::Execution;

fn prepare_box() -> PreparedObject {
    let mesh = cuboid(Vector3::new(0.2, 0.15, 0.1), Vector3::zeros());
    let hull = convex_hull(&mesh).unwrap();
    PreparedObject {
        obb: minimum_obb(&hull).unwrap(),
        mass_props: mass_properties(&mesh, 600.0).unwrap(),
        shape: CollisionShape::Convex(ConvexShape::from_hull_mesh(&hull)),
        hull_mass_fallback: false,
        mesh,
    }
}

fn prepare_chair() -> PreparedObject {
    let (mesh, _) = generate_procedural_object(ObjectKind::ArmlessChair, "bench", 3).unwrap();
    let hull = convex_hull(&mesh).unwrap();
    let pieces = sitsim_core::geometry::convex_decompose(&mesh, 32).unwrap();
    PreparedObject {
        obb: minimum_obb(&hull).unwrap(),
        mass_props: mass_properties(&mesh, 600.0).unwrap(),
        shape: CollisionShape::from_pieces(&pieces),
        hull_mass_fallback: false,
        mesh,
    }
}

fn bench_drop_grid(c: &mut Criterion) {
    let object = prepare_box();
    let mut group = c.benchmark_group("drop_grid");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("rayon", Execution::Rayon),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            let mut cfg = ImaginationConfig::default();
            cfg.drop_grid_steps = 6;
            cfg.drop_steps = 400;
            cfg.execution = exec;
            b.iter(|| imagine_stable_poses(&object, &cfg).unwrap());
        });
    }
    group.finish();
}

fn bench_trial_sweep(c: &mut Criterion) {
    let object = prepare_chair();
    let spec = AgentSpec::default_human();
    let agent = build_agent(&object.obb, &spec).unwrap();
    let mut cfg = ImaginationConfig::default();
    cfg.drop_grid_steps = 4;
    cfg.drop_steps = 600;
    let stable = imagine_stable_poses(&object, &cfg).unwrap();
    let upright = stable
        .iter()
        .position(|p| p.pose.translation.z > 0.2)
        .unwrap_or(0);

    let mut group = c.benchmark_group("trial_sweep");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("rayon", Execution::Rayon),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            let mut sweep_cfg = cfg.clone();
            sweep_cfg.yaw_steps = 6;
            sweep_cfg.trial_steps = 300;
            sweep_cfg.execution = exec;
            b.iter(|| evaluate_stable_pose(&object, &stable[upright], upright, &agent, &sweep_cfg));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_drop_grid, bench_trial_sweep);
criterion_main!(benches);
