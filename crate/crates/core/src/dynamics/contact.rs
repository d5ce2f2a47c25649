//! Narrowphase collision detection: GJK for separation distance and witness
//! points, EPA for penetration recovery, and reference-face clipping for
//! contact manifolds (at most four points per shape pair).

use nalgebra::Vector3;

use crate::dynamics::shape::{CollisionShape, ConvexShape};
use crate::se3::Pose;

/// Contacts are emitted while the gap is below this margin (meters), so
/// barely-touching pairs still produce constraint rows.
pub const CONTACT_MARGIN: f64 = 1.5e-3;

/// A single manifold point. `normal` is a unit vector pointing from the
/// second body toward the first; `penetration` is non-negative, with
/// `gap` carrying the remaining separation for non-overlapping contacts.
#[derive(Clone, Copy, Debug)]
pub struct ContactPoint {
    pub body_a: usize,
    pub body_b: usize,
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub penetration: f64,
    pub gap: f64,
}

/// Raw manifold point before body ids are attached.
#[derive(Clone, Copy, Debug)]
pub struct RawContact {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub penetration: f64,
    pub gap: f64,
}

impl RawContact {
    fn from_signed(position: Vector3<f64>, normal: Vector3<f64>, signed_depth: f64) -> RawContact {
        RawContact {
            position,
            normal,
            penetration: signed_depth.max(0.0),
            gap: (-signed_depth).max(0.0),
        }
    }
}

/// One convex primitive of a (possibly compound) shape.
enum ShapeView<'a> {
    Plane(f64),
    Capsule { radius: f64, half_height: f64 },
    Convex(&'a ConvexShape),
}

fn shape_views(shape: &CollisionShape) -> Vec<ShapeView<'_>> {
    match shape {
        CollisionShape::Plane { height } => vec![ShapeView::Plane(*height)],
        CollisionShape::Capsule { radius, half_height } => vec![ShapeView::Capsule {
            radius: *radius,
            half_height: *half_height,
        }],
        CollisionShape::Convex(c) => vec![ShapeView::Convex(c)],
        CollisionShape::Compound(cs) => cs.iter().map(ShapeView::Convex).collect(),
        CollisionShape::Box { .. } => unreachable!("boxes are converted to convex shapes"),
    }
}

/// Collides two shapes; returned normals point from `b` toward `a`.
/// Compounds collide piecewise; each convex-pair manifold is reduced to at
/// most four points.
pub fn collide(
    shape_a: &CollisionShape,
    pose_a: &Pose,
    shape_b: &CollisionShape,
    pose_b: &Pose,
) -> Vec<RawContact> {
    let mut out = Vec::new();
    for va in &shape_views(shape_a) {
        for vb in &shape_views(shape_b) {
            out.extend(collide_views(va, pose_a, vb, pose_b));
        }
    }
    out
}

fn collide_views(a: &ShapeView, pose_a: &Pose, b: &ShapeView, pose_b: &Pose) -> Vec<RawContact> {
    use ShapeView::*;
    match (a, b) {
        (Plane(_), Plane(_)) => Vec::new(),
        (Plane(h), _) => flip(collide_plane_view(*h, b, pose_b)),
        (_, Plane(h)) => collide_plane_view(*h, a, pose_a),
        (
            Capsule { radius: ra, half_height: ha },
            Capsule { radius: rb, half_height: hb },
        ) => capsule_capsule(*ra, *ha, pose_a, *rb, *hb, pose_b),
        (Capsule { radius, half_height }, Convex(c)) => {
            capsule_convex(*radius, *half_height, pose_a, c, pose_b)
        }
        (Convex(c), Capsule { radius, half_height }) => {
            flip(capsule_convex(*radius, *half_height, pose_b, c, pose_a))
        }
        (Convex(ca), Convex(cb)) => convex_convex(ca, pose_a, cb, pose_b),
    }
}

fn flip(mut contacts: Vec<RawContact>) -> Vec<RawContact> {
    for c in contacts.iter_mut() {
        c.normal = -c.normal;
    }
    contacts
}

// ---------------------------------------------------------------------------
// Plane contacts
// ---------------------------------------------------------------------------

/// Contacts of one convex primitive against the half-space `z <= height`;
/// normals +z (pointing from the plane into the shape).
fn collide_plane_view(height: f64, view: &ShapeView, pose: &Pose) -> Vec<RawContact> {
    let up = Vector3::z();
    match view {
        ShapeView::Convex(c) => {
            let mut pts = Vec::new();
            for p in &c.points {
                let w = pose.apply(p);
                let signed = height - w.z; // > 0 when below the plane
                if signed > -CONTACT_MARGIN {
                    pts.push(RawContact::from_signed(w, up, signed));
                }
            }
            reduce_manifold(pts)
        }
        ShapeView::Capsule { radius, half_height } => {
            let mut pts = Vec::new();
            for s in [-1.0, 1.0] {
                let e = pose.apply(&Vector3::new(0.0, 0.0, s * half_height));
                let low = e - Vector3::new(0.0, 0.0, *radius);
                let signed = height - low.z;
                if signed > -CONTACT_MARGIN {
                    pts.push(RawContact::from_signed(low, up, signed));
                }
            }
            if *half_height == 0.0 {
                pts.truncate(1);
            }
            pts
        }
        ShapeView::Plane(_) => Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// GJK distance with witness points
// ---------------------------------------------------------------------------

trait Support {
    fn support(&self, dir: &Vector3<f64>) -> Vector3<f64>;
}

struct PosedConvex<'a> {
    shape: &'a ConvexShape,
    pose: &'a Pose,
}

impl Support for PosedConvex<'_> {
    fn support(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        let local = self.pose.rotation.transpose().apply(dir);
        self.pose.apply(&self.shape.support_local(&local))
    }
}

struct PosedSegment {
    a: Vector3<f64>,
    b: Vector3<f64>,
}

impl Support for PosedSegment {
    fn support(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        if self.a.dot(dir) >= self.b.dot(dir) {
            self.a
        } else {
            self.b
        }
    }
}

#[derive(Clone, Copy)]
struct CsoVertex {
    v: Vector3<f64>, // support_a - support_b
    a: Vector3<f64>,
    b: Vector3<f64>,
}

struct GjkResult {
    /// Separation distance (0 when intersecting).
    distance: f64,
    witness_a: Vector3<f64>,
    witness_b: Vector3<f64>,
    /// Terminal simplex, used to seed EPA on intersection.
    simplex: Vec<CsoVertex>,
    intersecting: bool,
}

fn cso_support(sa: &impl Support, sb: &impl Support, dir: &Vector3<f64>) -> CsoVertex {
    let a = sa.support(dir);
    let b = sb.support(&-dir);
    CsoVertex { v: a - b, a, b }
}

fn gjk(sa: &impl Support, sb: &impl Support) -> GjkResult {
    let mut simplex: Vec<CsoVertex> = vec![cso_support(sa, sb, &Vector3::x())];
    let mut closest = simplex[0].v;

    for _ in 0..64 {
        let dist = closest.norm();
        if dist < 1e-12 {
            return GjkResult {
                distance: 0.0,
                witness_a: simplex[0].a,
                witness_b: simplex[0].b,
                simplex,
                intersecting: true,
            };
        }
        let dir = -closest / dist;
        let w = cso_support(sa, sb, &dir);
        // No progress toward the origin: converged at `closest`.
        if dist - w.v.dot(&-dir) < 1e-10 {
            break;
        }
        simplex.push(w);
        let (new_closest, lambdas, keep) = closest_on_simplex(&simplex);
        simplex = keep;
        if simplex.len() == 4 {
            // Origin enclosed by the tetrahedron.
            let (wa, wb) = witnesses(&simplex, &lambdas);
            return GjkResult {
                distance: 0.0,
                witness_a: wa,
                witness_b: wb,
                simplex,
                intersecting: true,
            };
        }
        if (new_closest - closest).norm() < 1e-14 {
            closest = new_closest;
            break;
        }
        closest = new_closest;
    }

    let (_, lambdas, keep) = closest_on_simplex(&simplex);
    let (wa, wb) = witnesses(&keep, &lambdas);
    GjkResult {
        distance: closest.norm(),
        witness_a: wa,
        witness_b: wb,
        simplex: keep,
        intersecting: false,
    }
}

fn witnesses(simplex: &[CsoVertex], lambdas: &[f64]) -> (Vector3<f64>, Vector3<f64>) {
    let mut wa = Vector3::zeros();
    let mut wb = Vector3::zeros();
    for (s, &l) in simplex.iter().zip(lambdas) {
        wa += s.a * l;
        wb += s.b * l;
    }
    (wa, wb)
}

/// Closest point to the origin on the simplex; returns the point, the
/// barycentric weights of the supporting sub-simplex, and that sub-simplex.
fn closest_on_simplex(simplex: &[CsoVertex]) -> (Vector3<f64>, Vec<f64>, Vec<CsoVertex>) {
    match simplex.len() {
        1 => (simplex[0].v, vec![1.0], simplex.to_vec()),
        2 => closest_on_segment(simplex[0], simplex[1]),
        3 => closest_on_triangle(simplex[0], simplex[1], simplex[2]),
        4 => closest_on_tetra(simplex),
        _ => unreachable!(),
    }
}

fn closest_on_segment(a: CsoVertex, b: CsoVertex) -> (Vector3<f64>, Vec<f64>, Vec<CsoVertex>) {
    let ab = b.v - a.v;
    let denom = ab.norm_squared();
    if denom < 1e-30 {
        return (a.v, vec![1.0], vec![a]);
    }
    let t = (-a.v.dot(&ab) / denom).clamp(0.0, 1.0);
    if t <= 0.0 {
        (a.v, vec![1.0], vec![a])
    } else if t >= 1.0 {
        (b.v, vec![1.0], vec![b])
    } else {
        (a.v + ab * t, vec![1.0 - t, t], vec![a, b])
    }
}

fn closest_on_triangle(
    a: CsoVertex,
    b: CsoVertex,
    c: CsoVertex,
) -> (Vector3<f64>, Vec<f64>, Vec<CsoVertex>) {
    // Voronoi-region walk (Ericson), specialized for query point = origin.
    let ab = b.v - a.v;
    let ac = c.v - a.v;
    let ap = -a.v;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a.v, vec![1.0], vec![a]);
    }
    let bp = -b.v;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b.v, vec![1.0], vec![b]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (a.v + ab * t, vec![1.0 - t, t], vec![a, b]);
    }
    let cp = -c.v;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c.v, vec![1.0], vec![c]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (a.v + ac * t, vec![1.0 - t, t], vec![a, c]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b.v + (c.v - b.v) * t, vec![1.0 - t, t], vec![b, c]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (
        a.v + ab * v + ac * w,
        vec![1.0 - v - w, v, w],
        vec![a, b, c],
    )
}

fn closest_on_tetra(s: &[CsoVertex]) -> (Vector3<f64>, Vec<f64>, Vec<CsoVertex>) {
    let faces: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let mut inside = true;
    let mut best: Option<(f64, (Vector3<f64>, Vec<f64>, Vec<CsoVertex>))> = None;
    for f in &faces {
        let (a, b, c) = (s[f[0]], s[f[1]], s[f[2]]);
        let other = s[(0..4).find(|i| !f.contains(i)).unwrap()];
        let mut n = (b.v - a.v).cross(&(c.v - a.v));
        if n.norm_squared() < 1e-30 {
            continue;
        }
        // Orient outward (away from the fourth vertex).
        if n.dot(&(other.v - a.v)) > 0.0 {
            n = -n;
        }
        // Origin outside this face?
        if n.dot(&-a.v) > 0.0 {
            inside = false;
            let cand = closest_on_triangle(a, b, c);
            let d = cand.0.norm_squared();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, cand));
            }
        }
    }
    if inside {
        (Vector3::zeros(), vec![0.25; 4], s.to_vec())
    } else {
        best.expect("origin outside at least one face").1
    }
}

// ---------------------------------------------------------------------------
// EPA
// ---------------------------------------------------------------------------

struct EpaResult {
    normal: Vector3<f64>, // outward normal of the nearest CSO boundary face
    depth: f64,
    witness_a: Vector3<f64>,
    witness_b: Vector3<f64>,
}

fn epa(sa: &impl Support, sb: &impl Support, seed: &[CsoVertex]) -> Option<EpaResult> {
    // Candidate vertices: the GJK seed plus supports along fixed directions,
    // from which a non-degenerate starting tetrahedron is selected.
    let mut candidates: Vec<CsoVertex> = seed.to_vec();
    let inv3 = 1.0 / 3f64.sqrt();
    for d in [
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        -Vector3::x(),
        -Vector3::y(),
        -Vector3::z(),
        Vector3::new(inv3, inv3, inv3),
        Vector3::new(-inv3, inv3, -inv3),
        Vector3::new(inv3, -inv3, -inv3),
        Vector3::new(-inv3, -inv3, inv3),
    ] {
        let w = cso_support(sa, sb, &d);
        if !candidates.iter().any(|x| (x.v - w.v).norm() < 1e-12) {
            candidates.push(w);
        }
    }
    let verts_init = build_tetra(&candidates)?;
    let mut verts: Vec<CsoVertex> = verts_init.to_vec();
    let interior = (verts[0].v + verts[1].v + verts[2].v + verts[3].v) / 4.0;

    #[derive(Clone, Copy)]
    struct EpaFace {
        tri: [usize; 3],
        normal: Vector3<f64>,
        dist: f64,
        alive: bool,
    }

    let make_face = move |tri: [usize; 3], verts: &[CsoVertex]| -> Option<EpaFace> {
        let (a, b, c) = (verts[tri[0]].v, verts[tri[1]].v, verts[tri[2]].v);
        let mut n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len < 1e-18 {
            return None;
        }
        n /= len;
        let mut tri = tri;
        // Orient outward, away from the polytope interior; the signed
        // distance to the origin may be slightly negative for shallow
        // penetrations.
        if n.dot(&(a - interior)) < 0.0 {
            n = -n;
            tri.swap(1, 2);
        }
        let d = n.dot(&a);
        Some(EpaFace {
            tri,
            normal: n,
            dist: d,
            alive: true,
        })
    };

    let mut faces: Vec<EpaFace> = Vec::new();
    for tri in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
        faces.push(make_face(tri, &verts)?);
    }

    for _ in 0..128 {
        let Some((best_i, best)) = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive)
            .min_by(|a, b| a.1.dist.partial_cmp(&b.1.dist).unwrap())
            .map(|(i, f)| (i, *f))
        else {
            return None;
        };
        let w = cso_support(sa, sb, &best.normal);
        let growth = best.normal.dot(&w.v) - best.dist;
        if growth < 1e-9 || faces.len() > 512 {
            // Converged: project the origin onto the face for witnesses.
            let tri = [
                verts[best.tri[0]],
                verts[best.tri[1]],
                verts[best.tri[2]],
            ];
            let (_, lambdas, keep) = closest_on_triangle(tri[0], tri[1], tri[2]);
            let (wa, wb) = witnesses(&keep, &lambdas);
            let _ = best_i;
            return Some(EpaResult {
                normal: best.normal,
                depth: best.dist,
                witness_a: wa,
                witness_b: wb,
            });
        }

        // Remove all faces visible from w and re-triangulate the horizon.
        let wi = verts.len();
        verts.push(w);
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for f in faces.iter_mut().filter(|f| f.alive) {
            if f.normal.dot(&w.v) - f.dist > 1e-12 {
                f.alive = false;
                for k in 0..3 {
                    let e = (f.tri[k], f.tri[(k + 1) % 3]);
                    // Shared edges cancel; boundary edges survive.
                    if let Some(pos) = horizon.iter().position(|&(a, b)| a == e.1 && b == e.0) {
                        horizon.swap_remove(pos);
                    } else {
                        horizon.push(e);
                    }
                }
            }
        }
        if horizon.is_empty() {
            return None;
        }
        for (a, b) in horizon {
            match make_face([a, b, wi], &verts) {
                Some(f) => faces.push(f),
                None => return None,
            }
        }
    }
    None
}

/// Greedily selects four points of maximal affine extent.
fn build_tetra(candidates: &[CsoVertex]) -> Option<[CsoVertex; 4]> {
    if candidates.len() < 4 {
        return None;
    }
    let p0 = candidates[0];
    let p1 = *candidates
        .iter()
        .max_by(|a, b| {
            let da = (a.v - p0.v).norm_squared();
            let db = (b.v - p0.v).norm_squared();
            da.partial_cmp(&db).unwrap()
        })?;
    if (p1.v - p0.v).norm_squared() < 1e-24 {
        return None;
    }
    let p2 = *candidates
        .iter()
        .max_by(|a, b| {
            let aa = (p1.v - p0.v).cross(&(a.v - p0.v)).norm_squared();
            let ab = (p1.v - p0.v).cross(&(b.v - p0.v)).norm_squared();
            aa.partial_cmp(&ab).unwrap()
        })?;
    if (p1.v - p0.v).cross(&(p2.v - p0.v)).norm_squared() < 1e-24 {
        return None;
    }
    let n = (p1.v - p0.v).cross(&(p2.v - p0.v));
    let p3 = *candidates
        .iter()
        .max_by(|a, b| {
            let va = n.dot(&(a.v - p0.v)).abs();
            let vb = n.dot(&(b.v - p0.v)).abs();
            va.partial_cmp(&vb).unwrap()
        })?;
    if n.dot(&(p3.v - p0.v)).abs() < 1e-18 {
        return None;
    }
    Some([p0, p1, p2, p3])
}

// ---------------------------------------------------------------------------
// Pair routines
// ---------------------------------------------------------------------------

fn convex_convex(
    ca: &ConvexShape,
    pose_a: &Pose,
    cb: &ConvexShape,
    pose_b: &Pose,
) -> Vec<RawContact> {
    let sa = PosedConvex { shape: ca, pose: pose_a };
    let sb = PosedConvex { shape: cb, pose: pose_b };
    let g = gjk(&sa, &sb);

    let (normal, signed_depth, wa, wb) = if g.intersecting {
        match epa(&sa, &sb, &g.simplex) {
            // The EPA normal is the outward CSO face normal; the direction
            // that separates shape A (and points from B toward A) is its
            // opposite.
            Some(e) => (-e.normal, e.depth, e.witness_a, e.witness_b),
            None => return Vec::new(),
        }
    } else {
        if g.distance > CONTACT_MARGIN {
            return Vec::new();
        }
        let n = (g.witness_a - g.witness_b) / g.distance.max(1e-12);
        (n, -g.distance, g.witness_a, g.witness_b)
    };

    // Build a manifold by clipping the incident face against the reference
    // face; fall back to the single witness pair.
    let manifold = clip_manifold(ca, pose_a, cb, pose_b, &normal);
    if manifold.is_empty() {
        let pos = (wa + wb) * 0.5;
        return vec![RawContact::from_signed(pos, normal, signed_depth)];
    }
    reduce_manifold(manifold)
}

/// Reference-face clipping. `normal` points from B toward A.
fn clip_manifold(
    ca: &ConvexShape,
    pose_a: &Pose,
    cb: &ConvexShape,
    pose_b: &Pose,
    normal: &Vector3<f64>,
) -> Vec<RawContact> {
    let best_face = |c: &ConvexShape, pose: &Pose, dir: &Vector3<f64>| -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, n) in c.face_normals.iter().enumerate() {
            let d = pose.rotation.apply(n).dot(dir);
            if d > best.1 {
                best = (i, d);
            }
        }
        best
    };
    // A's contact face points toward B (-normal); B's toward A (+normal).
    let (fa, da) = best_face(ca, pose_a, &-normal);
    let (fb, db) = best_face(cb, pose_b, normal);

    let face_world = |c: &ConvexShape, pose: &Pose, fi: usize| -> Vec<Vector3<f64>> {
        c.faces[fi]
            .iter()
            .map(|&i| pose.apply(&c.points[i as usize]))
            .collect()
    };

    // The better-aligned face becomes the reference.
    let (ref_poly, ref_n, inc_poly, ref_is_a) = if da >= db {
        (
            face_world(ca, pose_a, fa),
            pose_a.rotation.apply(&ca.face_normals[fa]),
            face_world(cb, pose_b, fb),
            true,
        )
    } else {
        (
            face_world(cb, pose_b, fb),
            pose_b.rotation.apply(&cb.face_normals[fb]),
            face_world(ca, pose_a, fa),
            false,
        )
    };
    if ref_poly.len() < 3 || inc_poly.is_empty() {
        return Vec::new();
    }

    // Clip the incident polygon against the reference side planes.
    let mut poly = inc_poly;
    let m = ref_poly.len();
    for i in 0..m {
        let a = ref_poly[i];
        let b = ref_poly[(i + 1) % m];
        let edge = b - a;
        let side_n = ref_n.cross(&edge); // inward for CCW-from-outside winding
        let side_n = {
            let l = side_n.norm();
            if l < 1e-15 {
                continue;
            }
            side_n / l
        };
        poly = clip_halfspace(&poly, &a, &side_n);
        if poly.is_empty() {
            return Vec::new();
        }
    }

    let ref_d = ref_n.dot(&ref_poly[0]);
    let mut out = Vec::new();
    for p in poly {
        let h = ref_n.dot(&p) - ref_d; // negative below the reference face
        let signed_depth = -h;
        if signed_depth > -CONTACT_MARGIN {
            // Contact normal from B toward A.
            let n = if ref_is_a { -ref_n } else { ref_n };
            let pos = p - ref_n * (h * 0.5);
            out.push(RawContact::from_signed(pos, n, signed_depth));
        }
    }
    out
}

fn clip_halfspace(
    poly: &[Vector3<f64>],
    origin: &Vector3<f64>,
    inward: &Vector3<f64>,
) -> Vec<Vector3<f64>> {
    if poly.len() == 1 {
        return if inward.dot(&(poly[0] - origin)) >= -1e-9 {
            poly.to_vec()
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let dc = inward.dot(&(cur - origin));
        let dn = inward.dot(&(nxt - origin));
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0) {
            let t = dc / (dc - dn);
            out.push(cur + (nxt - cur) * t);
        }
    }
    out
}

/// Clips an open segment (not a closed polygon) against a half-space.
fn clip_segment_halfspace(
    seg: &[Vector3<f64>],
    origin: &Vector3<f64>,
    inward: &Vector3<f64>,
) -> Vec<Vector3<f64>> {
    if seg.len() < 2 {
        return clip_halfspace(seg, origin, inward);
    }
    let (a, b) = (seg[0], seg[1]);
    let da = inward.dot(&(a - origin));
    let db = inward.dot(&(b - origin));
    match (da >= 0.0, db >= 0.0) {
        (true, true) => vec![a, b],
        (false, false) => Vec::new(),
        (true, false) => {
            let t = da / (da - db);
            vec![a, a + (b - a) * t]
        }
        (false, true) => {
            let t = da / (da - db);
            vec![a + (b - a) * t, b]
        }
    }
}

fn capsule_convex(
    radius: f64,
    half_height: f64,
    pose_cap: &Pose,
    convex: &ConvexShape,
    pose_cvx: &Pose,
) -> Vec<RawContact> {
    let e0 = pose_cap.apply(&Vector3::new(0.0, 0.0, half_height));
    let e1 = pose_cap.apply(&Vector3::new(0.0, 0.0, -half_height));
    let seg = PosedSegment { a: e0, b: e1 };
    let cvx = PosedConvex { shape: convex, pose: pose_cvx };
    let g = gjk(&seg, &cvx);

    if !g.intersecting && g.distance > 1e-9 {
        let gap = g.distance - radius;
        if gap > CONTACT_MARGIN {
            return Vec::new();
        }
        let n = (g.witness_a - g.witness_b) / g.distance; // convex -> segment
        // Try a two-point manifold against the convex face most aligned
        // with the contact normal.
        let manifold = clip_capsule_face(radius, &e0, &e1, convex, pose_cvx, &n);
        if !manifold.is_empty() {
            return manifold;
        }
        let pos = g.witness_b + n * (g.distance - radius) * 0.5;
        return vec![RawContact::from_signed(pos, n, -gap)];
    }

    // Segment pierces the hull: fall back to EPA on the inflated capsule.
    struct InflatedSegment {
        seg: PosedSegment,
        r: f64,
    }
    impl Support for InflatedSegment {
        fn support(&self, dir: &Vector3<f64>) -> Vector3<f64> {
            self.seg.support(dir) + dir.normalize() * self.r
        }
    }
    let inflated = InflatedSegment {
        seg: PosedSegment { a: e0, b: e1 },
        r: radius,
    };
    let g2 = gjk(&inflated, &cvx);
    match epa(&inflated, &cvx, &g2.simplex) {
        Some(e) => {
            let pos = (e.witness_a + e.witness_b) * 0.5;
            vec![RawContact::from_signed(pos, -e.normal, e.depth)]
        }
        None => Vec::new(),
    }
}

fn clip_capsule_face(
    radius: f64,
    e0: &Vector3<f64>,
    e1: &Vector3<f64>,
    convex: &ConvexShape,
    pose: &Pose,
    normal: &Vector3<f64>,
) -> Vec<RawContact> {
    // Face of the convex most aligned with the normal (which points from
    // the convex toward the capsule).
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, n) in convex.face_normals.iter().enumerate() {
        let d = pose.rotation.apply(n).dot(normal);
        if d > best.1 {
            best = (i, d);
        }
    }
    if best.1 < 0.7 {
        return Vec::new(); // edge-dominated contact, single point suffices
    }
    let fi = best.0;
    let face: Vec<Vector3<f64>> = convex.faces[fi]
        .iter()
        .map(|&i| pose.apply(&convex.points[i as usize]))
        .collect();
    let fn_world = pose.rotation.apply(&convex.face_normals[fi]);
    let fd = fn_world.dot(&face[0]);

    // Clip the segment against the face side planes.
    let mut seg = vec![*e0, *e1];
    let m = face.len();
    for i in 0..m {
        let a = face[i];
        let b = face[(i + 1) % m];
        let edge = b - a;
        let side = fn_world.cross(&edge);
        let l = side.norm();
        if l < 1e-15 {
            continue;
        }
        seg = clip_segment_halfspace(&seg, &a, &(side / l));
        if seg.is_empty() {
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for p in seg.iter().take(2) {
        let h = fn_world.dot(p) - fd; // center height above face
        let signed_depth = radius - h;
        if signed_depth > -CONTACT_MARGIN {
            let pos = p - fn_world * h;
            out.push(RawContact::from_signed(pos, fn_world, signed_depth));
        }
    }
    out
}

fn capsule_capsule(
    ra: f64,
    ha: f64,
    pose_a: &Pose,
    rb: f64,
    hb: f64,
    pose_b: &Pose,
) -> Vec<RawContact> {
    let a0 = pose_a.apply(&Vector3::new(0.0, 0.0, ha));
    let a1 = pose_a.apply(&Vector3::new(0.0, 0.0, -ha));
    let b0 = pose_b.apply(&Vector3::new(0.0, 0.0, hb));
    let b1 = pose_b.apply(&Vector3::new(0.0, 0.0, -hb));
    let (p, q) = closest_points_segments(&a0, &a1, &b0, &b1);
    let d = p - q;
    let dist = d.norm();
    let signed_depth = ra + rb - dist;
    if signed_depth < -CONTACT_MARGIN {
        return Vec::new();
    }
    let n = if dist > 1e-9 { d / dist } else { Vector3::z() };
    let surf_a = p - n * ra;
    let surf_b = q + n * rb;
    vec![RawContact::from_signed((surf_a + surf_b) * 0.5, n, signed_depth)]
}

/// Closest points between segments [p1,q1] and [p2,q2] (Ericson 5.1.9).
pub fn closest_points_segments(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-30 && e <= 1e-30 {
        return (*p1, *p2);
    }
    if a <= 1e-30 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-30 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_ = if denom > 1e-30 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t_ = (b * s_ + f) / e;
            if t_ < 0.0 {
                t_ = 0.0;
                s_ = (-c / a).clamp(0.0, 1.0);
            } else if t_ > 1.0 {
                t_ = 1.0;
                s_ = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s_;
            t = t_;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

/// Keeps at most four points: deepest first, then maximal spread.
pub fn reduce_manifold(mut pts: Vec<RawContact>) -> Vec<RawContact> {
    if pts.len() <= 4 {
        return pts;
    }
    let mut keep: Vec<RawContact> = Vec::with_capacity(4);
    // Deepest point.
    let i0 = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.penetration.partial_cmp(&b.1.penetration).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    keep.push(pts.swap_remove(i0));
    // Farthest from the first.
    let i1 = pts
        .iter()
        .enumerate()
        .max_by(|a, b| {
            let da = (a.1.position - keep[0].position).norm_squared();
            let db = (b.1.position - keep[0].position).norm_squared();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    keep.push(pts.swap_remove(i1));
    // Maximize triangle area, then distance to the triangle's plane edges.
    for _ in 0..2 {
        if pts.is_empty() {
            break;
        }
        let i = pts
            .iter()
            .enumerate()
            .max_by(|a, b| {
                let score = |c: &RawContact| {
                    keep.windows(2)
                        .map(|w| {
                            (w[1].position - w[0].position)
                                .cross(&(c.position - w[0].position))
                                .norm()
                        })
                        .sum::<f64>()
                        + keep
                            .iter()
                            .map(|k| (c.position - k.position).norm())
                            .sum::<f64>()
                };
                score(a.1).partial_cmp(&score(b.1)).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        keep.push(pts.swap_remove(i));
    }
    keep
}
