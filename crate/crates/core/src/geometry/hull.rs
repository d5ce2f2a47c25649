//! 3D convex hull by quickhull with conflict lists.

use nalgebra::Vector3;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::mesh::TriMesh;

struct Face {
    verts: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn dist(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Convex hull of a mesh's vertex set.
pub fn convex_hull(mesh: &TriMesh) -> Result<TriMesh> {
    convex_hull_points(mesh.vertices())
}

/// Convex hull of a point cloud. Needs at least four non-coplanar points.
pub fn convex_hull_points(points: &[Vector3<f64>]) -> Result<TriMesh> {
    if points.len() < 4 {
        return Err(Error::DegenerateGeometry(format!(
            "convex hull needs at least 4 points, got {}",
            points.len()
        )));
    }
    let mut min = Vector3::repeat(f64::INFINITY);
    let mut max = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        min = min.inf(p);
        max = max.sup(p);
    }
    let diag = (max - min).norm();
    if diag <= 0.0 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let eps = 1e-9 * diag;

    let (a, b, c, d) = initial_simplex(points, eps)?;
    let interior = (points[a] + points[b] + points[c] + points[d]) / 4.0;

    let mut faces: Vec<Face> = Vec::new();
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        push_face(&mut faces, &mut edge_map, tri, points, &interior, Orient::Fix)?;
    }

    // Conflict lists: each point goes to the first face it is outside of.
    for (i, p) in points.iter().enumerate() {
        if i == a || i == b || i == c || i == d {
            continue;
        }
        for f in faces.iter_mut() {
            if f.dist(p) > eps {
                f.outside.push(i);
                break;
            }
        }
    }

    let mut guard = 0usize;
    let max_iters = 16 * points.len() + 1024;
    loop {
        guard += 1;
        if guard > max_iters {
            return Err(Error::DegenerateGeometry(
                "convex hull did not converge".into(),
            ));
        }

        // Furthest conflict point over all alive faces.
        let mut best: Option<(usize, usize, f64)> = None; // (face, point, dist)
        for (fi, f) in faces.iter().enumerate() {
            if !f.alive {
                continue;
            }
            for &pi in &f.outside {
                let d = f.dist(&points[pi]);
                if best.map_or(true, |(_, _, bd)| d > bd) {
                    best = Some((fi, pi, d));
                }
            }
        }
        let Some((_, apex, _)) = best else { break };
        let p = points[apex];

        // Visible set by flood fill from every face that sees the apex.
        let mut visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && f.dist(&p) > eps)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            // Numerical corner: drop the point rather than loop forever.
            for f in faces.iter_mut() {
                f.outside.retain(|&i| i != apex);
            }
            continue;
        }
        let visible_set: std::collections::HashSet<usize> = visible.iter().copied().collect();

        // Horizon: directed edges of visible faces whose twin face survives.
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut orphan_points: Vec<usize> = Vec::new();
        visible.sort_unstable();
        for &fi in &visible {
            let f = &faces[fi];
            let vs = f.verts;
            for k in 0..3 {
                let e = (vs[k], vs[(k + 1) % 3]);
                let twin = (e.1, e.0);
                match edge_map.get(&twin) {
                    Some(&tf) if !visible_set.contains(&tf) => horizon.push(e),
                    _ => {}
                }
            }
        }
        for &fi in &visible {
            orphan_points.append(&mut faces[fi].outside);
            faces[fi].alive = false;
            let vs = faces[fi].verts;
            for k in 0..3 {
                edge_map.remove(&(vs[k], vs[(k + 1) % 3]));
            }
        }

        let mut new_faces: Vec<usize> = Vec::new();
        for (ea, eb) in horizon {
            let fi = push_face(&mut faces, &mut edge_map, [ea, eb, apex], points, &interior, Orient::Trust)?;
            new_faces.push(fi);
        }

        for pi in orphan_points {
            if pi == apex {
                continue;
            }
            for &fi in &new_faces {
                if faces[fi].dist(&points[pi]) > eps {
                    faces[fi].outside.push(pi);
                    break;
                }
            }
        }
    }

    // Collect alive faces and remap to a compact vertex list.
    let mut used: Vec<Option<u32>> = vec![None; points.len()];
    let mut verts: Vec<Vector3<f64>> = Vec::new();
    let mut tris: Vec<[u32; 3]> = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        let tri = f.verts.map(|i| {
            *used[i].get_or_insert_with(|| {
                verts.push(points[i]);
                (verts.len() - 1) as u32
            })
        });
        tris.push(tri);
    }
    let hull = TriMesh::new(verts, tris)
        .map_err(|e| Error::DegenerateGeometry(format!("hull assembly failed: {e}")))?;
    if !hull.is_watertight() {
        return Err(Error::DegenerateGeometry(
            "hull surface is not closed".into(),
        ));
    }
    Ok(hull)
}

#[derive(PartialEq)]
enum Orient {
    /// Flip the triangle if the interior point lies in front (initial tetra,
    /// where triple order is arbitrary).
    Fix,
    /// Trust the given order (horizon faces, whose edge direction must match
    /// the surviving neighbor's twin edge).
    Trust,
}

fn push_face(
    faces: &mut Vec<Face>,
    edge_map: &mut HashMap<(usize, usize), usize>,
    mut verts: [usize; 3],
    points: &[Vector3<f64>],
    interior: &Vector3<f64>,
    orient: Orient,
) -> Result<usize> {
    let (a, b, c) = (points[verts[0]], points[verts[1]], points[verts[2]]);
    let mut normal = (b - a).cross(&(c - a));
    let n = normal.norm();
    if n < 1e-30 {
        return Err(Error::DegenerateGeometry(
            "degenerate hull face encountered".into(),
        ));
    }
    normal /= n;
    let mut offset = normal.dot(&a);
    if normal.dot(interior) - offset > 0.0 && orient == Orient::Fix {
        verts.swap(1, 2);
        normal = -normal;
        offset = -offset;
    }
    let id = faces.len();
    faces.push(Face {
        verts,
        normal,
        offset,
        outside: Vec::new(),
        alive: true,
    });
    for k in 0..3 {
        edge_map.insert((verts[k], verts[(k + 1) % 3]), id);
    }
    Ok(id)
}

fn initial_simplex(points: &[Vector3<f64>], eps: f64) -> Result<(usize, usize, usize, usize)> {
    // Two most distant points among the six axis extremes.
    let mut extremes = [0usize; 6];
    for (i, p) in points.iter().enumerate() {
        for axis in 0..3 {
            if p[axis] < points[extremes[axis * 2]][axis] {
                extremes[axis * 2] = i;
            }
            if p[axis] > points[extremes[axis * 2 + 1]][axis] {
                extremes[axis * 2 + 1] = i;
            }
        }
    }
    let (mut a, mut b, mut best) = (0, 0, -1.0);
    for &i in &extremes {
        for &j in &extremes {
            let d = (points[i] - points[j]).norm_squared();
            if d > best {
                best = d;
                a = i;
                b = j;
            }
        }
    }
    if best.sqrt() <= eps {
        return Err(Error::DegenerateGeometry("points nearly coincide".into()));
    }

    let ab = points[b] - points[a];
    let (mut c, mut best) = (usize::MAX, eps);
    for (i, p) in points.iter().enumerate() {
        let d = ab.cross(&(p - points[a])).norm() / ab.norm();
        if d > best {
            best = d;
            c = i;
        }
    }
    if c == usize::MAX {
        return Err(Error::DegenerateGeometry("points are collinear".into()));
    }

    let n = ab.cross(&(points[c] - points[a]));
    let n = n / n.norm();
    let (mut d, mut best) = (usize::MAX, eps);
    for (i, p) in points.iter().enumerate() {
        let h = n.dot(&(p - points[a])).abs();
        if h > best {
            best = h;
            d = i;
        }
    }
    if d == usize::MAX {
        return Err(Error::DegenerateGeometry("points are coplanar".into()));
    }
    Ok((a, b, c, d))
}

/// Outward face planes `(n, d)` with `n . x <= d` for interior points.
/// Nearly duplicate planes are collapsed.
pub fn hull_planes(hull: &TriMesh) -> Vec<(Vector3<f64>, f64)> {
    let mut planes: Vec<(Vector3<f64>, f64)> = Vec::new();
    for f in 0..hull.faces().len() {
        let [a, b, c] = hull.face_vertices(f);
        let mut n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len < 1e-30 {
            continue;
        }
        n /= len;
        let d = n.dot(&a);
        if !planes
            .iter()
            .any(|(pn, pd)| (pn - n).norm() < 1e-9 && (pd - d).abs() < 1e-9)
        {
            planes.push((n, d));
        }
    }
    planes
}

pub fn point_in_planes(planes: &[(Vector3<f64>, f64)], p: &Vector3<f64>, tol: f64) -> bool {
    planes.iter().all(|(n, d)| n.dot(p) - d <= tol)
}

/// Closest point on the hull surface to `p`; `p` itself when inside.
pub fn closest_point_on_hull(hull: &TriMesh, planes: &[(Vector3<f64>, f64)], p: &Vector3<f64>) -> Vector3<f64> {
    if point_in_planes(planes, p, 0.0) {
        return *p;
    }
    let mut best = hull.vertices()[0];
    let mut best_d = f64::INFINITY;
    for f in 0..hull.faces().len() {
        let tri = hull.face_vertices(f);
        let q = closest_point_on_triangle(&tri, p);
        let d = (q - p).norm_squared();
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// Ericson's closest-point-on-triangle with Voronoi region tests.
pub fn closest_point_on_triangle(tri: &[Vector3<f64>; 3], p: &Vector3<f64>) -> Vector3<f64> {
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::unit_cube;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hull_of_cube_is_cube() {
        let hull = convex_hull(&unit_cube()).unwrap();
        assert_eq!(hull.vertices().len(), 8);
        assert!(hull.is_watertight());
        assert!((hull.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_point_is_absorbed() {
        let cube = unit_cube();
        let mut verts = cube.vertices().to_vec();
        verts.push(Vector3::new(0.1, 0.05, -0.2));
        let hull = convex_hull_points(&verts).unwrap();
        assert_eq!(hull.vertices().len(), 8);
        assert!((hull.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_cloud_containment() {
        // Containment oracle over all inputs.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Vector3<f64>> = (0..100)
            .map(|_| {
                Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let hull = convex_hull_points(&points).unwrap();
        assert!(hull.is_watertight());
        let planes = hull_planes(&hull);
        for p in &points {
            assert!(point_in_planes(&planes, p, 1e-8), "point escaped hull");
        }
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let points: Vec<Vector3<f64>> = (0..20)
            .map(|i| Vector3::new(i as f64, (i * 7 % 5) as f64, 0.0))
            .collect();
        assert!(matches!(
            convex_hull_points(&points),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn sphere_cloud_hull_volume_close_to_sphere() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut points = Vec::new();
        while points.len() < 800 {
            let v = Vector3::new(
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-6 {
                points.push(v / n);
            }
        }
        let hull = convex_hull_points(&points).unwrap();
        let vol = hull.signed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        assert!(vol < exact && vol > 0.9 * exact, "hull volume {vol}");
    }
}
