//! Procedural furniture corpus: watertight meshes assembled from cuboid
//! parts with seeded jitter, plus ground-truth annotations.
//!
//! Every object is generated upright (+z up, base resting on z = 0) facing
//! +x (chair backs on the -x side). The annotation records whether the
//! object affords sitting and the upright functional pose: the file-frame
//! axis that points up plus the center-of-mass height at rest.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cuboid, mass_properties, TriMesh};

pub const ANNOTATION_SCHEMA: &str = "annotation/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Chair,
    ArmlessChair,
    Stool,
    Table,
    Box,
    BrokenChair,
    TallShelf,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 7] = [
        ObjectKind::Chair,
        ObjectKind::ArmlessChair,
        ObjectKind::Stool,
        ObjectKind::Table,
        ObjectKind::Box,
        ObjectKind::BrokenChair,
        ObjectKind::TallShelf,
    ];

    pub fn sittable(&self) -> bool {
        matches!(self, ObjectKind::Chair | ObjectKind::ArmlessChair)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectKind::Chair => "chair",
            ObjectKind::ArmlessChair => "armless_chair",
            ObjectKind::Stool => "stool",
            ObjectKind::Table => "table",
            ObjectKind::Box => "box",
            ObjectKind::BrokenChair => "broken_chair",
            ObjectKind::TallShelf => "tall_shelf",
        }
    }
}

impl std::str::FromStr for ObjectKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<ObjectKind> {
        ObjectKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown object kind '{s}'")))
    }
}

/// Ground truth for one generated object.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub schema: String,
    pub object_id: String,
    pub kind: String,
    pub sittable: bool,
    /// File-frame unit vector that points up in the functional pose.
    pub up_axis: [f64; 3],
    /// Center-of-mass height above the ground at upright rest, meters.
    pub com_height: f64,
}

impl Annotation {
    pub fn validate(&self) -> Result<()> {
        if self.schema != ANNOTATION_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported annotation schema '{}'",
                self.schema
            )));
        }
        let n = (self.up_axis[0].powi(2) + self.up_axis[1].powi(2) + self.up_axis[2].powi(2))
            .sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Config("annotation up axis must be unit length".into()));
        }
        Ok(())
    }

    pub fn up(&self) -> Vector3<f64> {
        Vector3::new(self.up_axis[0], self.up_axis[1], self.up_axis[2])
    }
}

struct PartList {
    parts: Vec<(Vector3<f64>, Vector3<f64>)>, // (half extents, center)
}

impl PartList {
    fn new() -> Self {
        PartList { parts: Vec::new() }
    }

    /// Adds a cuboid spanning [z0, z1] with footprint half extents (hx, hy)
    /// centered at (cx, cy).
    fn slab(&mut self, cx: f64, cy: f64, hx: f64, hy: f64, z0: f64, z1: f64) {
        self.parts.push((
            Vector3::new(hx, hy, (z1 - z0) * 0.5),
            Vector3::new(cx, cy, (z0 + z1) * 0.5),
        ));
    }

    fn build(&self) -> Result<TriMesh> {
        let mut verts: Vec<Vector3<f64>> = Vec::new();
        let mut faces: Vec<[u32; 3]> = Vec::new();
        for (half, center) in &self.parts {
            let part = cuboid(*half, *center);
            let off = verts.len() as u32;
            verts.extend_from_slice(part.vertices());
            faces.extend(part.faces().iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        }
        TriMesh::new(verts, faces)
    }
}

/// Joint overlap so butt-joined parts interpenetrate slightly instead of
/// meeting at knife-edge coplanar faces.
const WELD: f64 = 0.005;

/// Generates one object. Jitter is drawn from the seeded generator, so the
/// same (kind, seed) pair always produces the same mesh.
pub fn generate_procedural_object(
    kind: ObjectKind,
    object_id: &str,
    seed: u64,
) -> Result<(TriMesh, Annotation)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = match kind {
        ObjectKind::Chair => chair(&mut rng, true)?,
        ObjectKind::ArmlessChair => chair(&mut rng, false)?,
        ObjectKind::Stool => stool(&mut rng)?,
        ObjectKind::Table => table(&mut rng)?,
        ObjectKind::Box => solid_box(&mut rng)?,
        ObjectKind::BrokenChair => broken_chair(&mut rng)?,
        ObjectKind::TallShelf => tall_shelf(&mut rng)?,
    };
    if !mesh.is_watertight() {
        return Err(Error::DegenerateGeometry(format!(
            "generated {} is not watertight",
            kind.name()
        )));
    }
    let com = mass_properties(&mesh, 600.0)?.com;
    Ok((
        mesh,
        Annotation {
            schema: ANNOTATION_SCHEMA.into(),
            object_id: object_id.into(),
            kind: kind.name().into(),
            sittable: kind.sittable(),
            up_axis: [0.0, 0.0, 1.0],
            com_height: com.z,
        },
    ))
}

fn range<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

fn chair<R: Rng>(rng: &mut R, with_arms: bool) -> Result<TriMesh> {
    // Armchairs get a wider seat so the armrest gap clears the hips.
    let seat_w = if with_arms {
        range(rng, 0.48, 0.56)
    } else {
        range(rng, 0.42, 0.50)
    }; // y extent
    let seat_d = range(rng, 0.42, 0.50); // x extent
    let seat_h = range(rng, 0.40, 0.48); // top of seat
    let seat_t = range(rng, 0.045, 0.06);
    let leg = range(rng, 0.035, 0.05);
    let back_h = range(rng, 0.35, 0.45);
    let back_t = range(rng, 0.035, 0.05);

    let mut p = PartList::new();
    // Seat slab.
    p.slab(0.0, 0.0, seat_d / 2.0, seat_w / 2.0, seat_h - seat_t, seat_h);
    // Legs at the corners.
    let lx = seat_d / 2.0 - leg / 2.0;
    let ly = seat_w / 2.0 - leg / 2.0;
    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        p.slab(sx * lx, sy * ly, leg / 2.0, leg / 2.0, 0.0, seat_h - seat_t + WELD);
    }
    // Backrest on the -x side.
    p.slab(
        -(seat_d / 2.0) + back_t / 2.0,
        0.0,
        back_t / 2.0,
        seat_w / 2.0,
        seat_h - WELD,
        seat_h + back_h,
    );
    if with_arms {
        let arm_h = range(rng, 0.15, 0.20);
        let arm_t = 0.02;
        for sy in [1.0, -1.0] {
            // Posts stand on the seat edge; the arm slab overhangs outward
            // so the gap between arms stays clear of the hips.
            let post_y = sy * (seat_w / 2.0 - arm_t);
            let slab_y = sy * (seat_w / 2.0 + 0.005);
            p.slab(
                -seat_d * 0.05,
                slab_y,
                seat_d * 0.35,
                0.025,
                seat_h + arm_h - 0.02,
                seat_h + arm_h + 0.02,
            );
            p.slab(
                seat_d * 0.28,
                post_y,
                arm_t,
                arm_t,
                seat_h - WELD,
                seat_h + arm_h - 0.02 + WELD,
            );
        }
    }
    p.build()
}

fn stool<R: Rng>(rng: &mut R) -> Result<TriMesh> {
    let top_w = range(rng, 0.32, 0.42);
    let top_d = range(rng, 0.32, 0.42);
    let h = range(rng, 0.42, 0.55);
    let t = range(rng, 0.04, 0.06);
    let leg = range(rng, 0.035, 0.05);
    let mut p = PartList::new();
    p.slab(0.0, 0.0, top_d / 2.0, top_w / 2.0, h - t, h);
    let lx = top_d / 2.0 - leg / 2.0;
    let ly = top_w / 2.0 - leg / 2.0;
    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        p.slab(sx * lx, sy * ly, leg / 2.0, leg / 2.0, 0.0, h - t + WELD);
    }
    p.build()
}

fn table<R: Rng>(rng: &mut R) -> Result<TriMesh> {
    let top_x = range(rng, 0.8, 1.2);
    let top_y = range(rng, 0.6, 0.8);
    let h = range(rng, 0.68, 0.75);
    let t = range(rng, 0.035, 0.05);
    let leg = range(rng, 0.05, 0.07);
    let mut p = PartList::new();
    p.slab(0.0, 0.0, top_x / 2.0, top_y / 2.0, h - t, h);
    let lx = top_x / 2.0 - leg;
    let ly = top_y / 2.0 - leg;
    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        p.slab(sx * lx, sy * ly, leg / 2.0, leg / 2.0, 0.0, h - t + WELD);
    }
    p.build()
}

fn solid_box<R: Rng>(rng: &mut R) -> Result<TriMesh> {
    let x = range(rng, 0.3, 0.6);
    let y = range(rng, 0.3, 0.6);
    let z = range(rng, 0.3, 0.6);
    let mut p = PartList::new();
    p.slab(0.0, 0.0, x / 2.0, y / 2.0, 0.0, z);
    p.build()
}

/// A chair frame without its seat: legs, mid-height stretcher rails, and a
/// backrest. Nothing supports the pelvis at sitting height.
fn broken_chair<R: Rng>(rng: &mut R) -> Result<TriMesh> {
    let seat_w = range(rng, 0.42, 0.50);
    let seat_d = range(rng, 0.42, 0.50);
    let seat_h = range(rng, 0.40, 0.48);
    let leg = range(rng, 0.035, 0.05);
    let back_h = range(rng, 0.35, 0.45);
    let back_t = range(rng, 0.035, 0.05);
    let rail = 0.03;

    let mut p = PartList::new();
    let lx = seat_d / 2.0 - leg / 2.0;
    let ly = seat_w / 2.0 - leg / 2.0;
    // Front legs stop at seat height; rear legs continue to the back top.
    for sy in [1.0, -1.0] {
        p.slab(lx, sy * ly, leg / 2.0, leg / 2.0, 0.0, seat_h);
        p.slab(-lx, sy * ly, leg / 2.0, leg / 2.0, 0.0, seat_h + back_h);
    }
    // Stretcher rails at mid height on both sides.
    for sy in [1.0, -1.0] {
        p.slab(
            0.0,
            sy * ly,
            seat_d / 2.0 - leg - WELD,
            rail / 2.0,
            seat_h * 0.45,
            seat_h * 0.45 + rail,
        );
    }
    // Backrest between the rear legs.
    p.slab(
        -lx,
        0.0,
        back_t / 2.0,
        seat_w / 2.0 - leg - WELD,
        seat_h + back_h * 0.4,
        seat_h + back_h,
    );
    p.build()
}

fn tall_shelf<R: Rng>(rng: &mut R) -> Result<TriMesh> {
    let height = range(rng, 1.6, 1.9);
    let width = range(rng, 0.7, 0.9);
    let depth = range(rng, 0.25, 0.35);
    let panel = 0.025;
    let shelves = rng.gen_range(4..=6);

    let mut p = PartList::new();
    // Side walls.
    for sy in [1.0, -1.0] {
        p.slab(0.0, sy * (width / 2.0 - panel / 2.0), depth / 2.0, panel / 2.0, 0.0, height);
    }
    // Back panel on the -x side.
    p.slab(
        -(depth / 2.0) + panel / 2.0,
        0.0,
        panel / 2.0,
        width / 2.0 - panel - WELD,
        WELD,
        height - WELD,
    );
    // Horizontal shelves, top and bottom included.
    for i in 0..=shelves {
        let z = (height - panel) * i as f64 / shelves as f64;
        p.slab(
            0.0,
            0.0,
            depth / 2.0,
            width / 2.0 - panel - WELD,
            z,
            z + panel,
        );
    }
    p.build()
}

/// Deterministic corpus plan: `total` objects, half sittable (alternating
/// chair kinds), half not (cycling the non-chair kinds).
pub fn corpus_plan(total: usize) -> Vec<ObjectKind> {
    let chairs = [ObjectKind::Chair, ObjectKind::ArmlessChair];
    let non_chairs = [
        ObjectKind::Table,
        ObjectKind::Stool,
        ObjectKind::Box,
        ObjectKind::BrokenChair,
        ObjectKind::TallShelf,
    ];
    let half = total / 2;
    let mut plan = Vec::with_capacity(total);
    for i in 0..half {
        plan.push(chairs[i % chairs.len()]);
    }
    for i in 0..total - half {
        plan.push(non_chairs[i % non_chairs.len()]);
    }
    plan
}

/// Writes `meshes/<id>.obj` and `annotations/<id>.json` for a corpus of
/// `total` objects.
pub fn generate_corpus(dir: &std::path::Path, total: usize, seed: u64) -> Result<Vec<Annotation>> {
    let meshes = dir.join("meshes");
    let annotations = dir.join("annotations");
    std::fs::create_dir_all(&meshes)?;
    std::fs::create_dir_all(&annotations)?;
    let mut out = Vec::with_capacity(total);
    for (i, kind) in corpus_plan(total).into_iter().enumerate() {
        let id = format!("{}_{i:03}", kind.name());
        let (mesh, ann) =
            generate_procedural_object(kind, &id, seed.wrapping_add(i as u64 * 7919))?;
        crate::geometry::save_obj(&mesh, &meshes.join(format!("{id}.obj")))?;
        std::fs::write(
            annotations.join(format!("{id}.json")),
            serde_json::to_string_pretty(&ann)?,
        )?;
        out.push(ann);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_kinds_generate_watertight_upright_meshes() {
        for (i, kind) in ObjectKind::ALL.iter().enumerate() {
            let (mesh, ann) = generate_procedural_object(*kind, "t", 100 + i as u64).unwrap();
            assert!(mesh.is_watertight(), "{} not watertight", kind.name());
            let aabb = mesh.aabb();
            assert!(aabb.min.z.abs() < 1e-9, "{} base not at z=0", kind.name());
            assert_eq!(ann.sittable, kind.sittable());
            assert_eq!(ann.up_axis, [0.0, 0.0, 1.0]);
            assert!(ann.com_height > 0.0 && ann.com_height < aabb.max.z);
            ann.validate().unwrap();
        }
    }

    #[test]
    fn chairs_have_four_legs_a_seat_and_a_back() {
        let (mesh, _) = generate_procedural_object(ObjectKind::Chair, "c", 5).unwrap();
        let comps = mesh.connected_components();
        // 4 legs + seat + back + 2 arms + 2 posts.
        assert_eq!(comps.len(), 10);
        let (mesh, _) = generate_procedural_object(ObjectKind::ArmlessChair, "c", 5).unwrap();
        assert_eq!(mesh.connected_components().len(), 6);
    }

    #[test]
    fn same_seed_reproduces_identical_geometry() {
        let (a, _) = generate_procedural_object(ObjectKind::Table, "t", 9).unwrap();
        let (b, _) = generate_procedural_object(ObjectKind::Table, "t", 9).unwrap();
        assert_eq!(a.vertices().len(), b.vertices().len());
        for (va, vb) in a.vertices().iter().zip(b.vertices()) {
            assert_eq!(va, vb);
        }
        let (c, _) = generate_procedural_object(ObjectKind::Table, "t", 10).unwrap();
        assert!(
            a.vertices()
                .iter()
                .zip(c.vertices())
                .any(|(va, vc)| (va - vc).norm() > 1e-12),
            "different seeds should jitter the dimensions"
        );
    }

    #[test]
    fn corpus_plan_is_balanced() {
        let plan = corpus_plan(40);
        let sittable = plan.iter().filter(|k| k.sittable()).count();
        assert_eq!(sittable, 20);
        assert_eq!(plan.len(), 40);
    }

    #[test]
    fn broken_chair_has_no_support_at_seat_height() {
        let (mesh, ann) = generate_procedural_object(ObjectKind::BrokenChair, "b", 3).unwrap();
        assert!(!ann.sittable);
        // No geometry in the central column between rails and backrest top.
        let aabb = mesh.aabb();
        for comp in mesh.connected_components() {
            let c = comp.aabb();
            let central = c.min.x > -0.15 && c.max.x < 0.15 && c.min.y > -0.15 && c.max.y < 0.15;
            assert!(!central, "central part found: {:?}", c);
        }
        let _ = aabb;
    }
}
