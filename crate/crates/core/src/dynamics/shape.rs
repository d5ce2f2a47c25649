//! Collision shapes and their support functions.

use nalgebra::Vector3;

use crate::geometry::mesh::Aabb;
use crate::geometry::{ConvexPieceSet, TriMesh};
use crate::se3::Pose;

/// A convex polytope in the body frame: hull vertices plus merged polygonal
/// faces used for contact manifold clipping.
#[derive(Clone, Debug)]
pub struct ConvexShape {
    pub points: Vec<Vector3<f64>>,
    /// Outward unit normals, one per polygonal face.
    pub face_normals: Vec<Vector3<f64>>,
    /// Vertex indices of each face, wound counterclockwise seen from outside.
    pub faces: Vec<Vec<u32>>,
}

impl ConvexShape {
    /// Builds from a convex hull mesh, merging coplanar triangles into
    /// polygonal faces.
    pub fn from_hull_mesh(hull: &TriMesh) -> ConvexShape {
        let points = hull.vertices().to_vec();
        let mut face_normals: Vec<Vector3<f64>> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new(); // triangle ids per face
        for f in 0..hull.faces().len() {
            let [a, b, c] = hull.face_vertices(f);
            let n = (b - a).cross(&(c - a));
            let len = n.norm();
            if len < 1e-18 {
                continue;
            }
            let n = n / len;
            let d = n.dot(&a);
            let mut placed = false;
            for (gi, gn) in face_normals.iter().enumerate() {
                if gn.dot(&n) > 1.0 - 1e-9 {
                    let [ga, _, _] = hull.face_vertices(groups[gi][0]);
                    if (gn.dot(&ga) - d).abs() < 1e-9 {
                        groups[gi].push(f);
                        placed = true;
                        break;
                    }
                }
            }
            if !placed {
                face_normals.push(n);
                groups.push(vec![f]);
            }
        }

        // Order each group's vertex set around the face centroid.
        let mut faces = Vec::with_capacity(groups.len());
        for (gi, tris) in groups.iter().enumerate() {
            let mut idx: Vec<u32> = Vec::new();
            for &t in tris {
                for &v in &hull.faces()[t] {
                    if !idx.contains(&v) {
                        idx.push(v);
                    }
                }
            }
            let n = face_normals[gi];
            let centroid = idx
                .iter()
                .map(|&i| points[i as usize])
                .sum::<Vector3<f64>>()
                / idx.len() as f64;
            let u = {
                let h = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
                let u = h.cross(&n);
                u / u.norm()
            };
            let v = n.cross(&u);
            idx.sort_by(|&a, &b| {
                let pa = points[a as usize] - centroid;
                let pb = points[b as usize] - centroid;
                let aa = pa.dot(&v).atan2(pa.dot(&u));
                let ab = pb.dot(&v).atan2(pb.dot(&u));
                aa.partial_cmp(&ab).unwrap()
            });
            faces.push(idx);
        }
        ConvexShape {
            points,
            face_normals,
            faces,
        }
    }

    pub fn cuboid(half: Vector3<f64>) -> ConvexShape {
        ConvexShape::from_hull_mesh(&crate::geometry::cuboid(half, Vector3::zeros()))
    }

    pub fn support_local(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        let mut best = self.points[0];
        let mut best_d = best.dot(dir);
        for p in &self.points[1..] {
            let d = p.dot(dir);
            if d > best_d {
                best_d = d;
                best = *p;
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub enum CollisionShape {
    /// Static half-space `z <= height` with outward normal +z.
    Plane { height: f64 },
    Box { half: Vector3<f64> },
    /// Segment along local z of length `2 * half_height`, inflated by
    /// `radius`; `half_height = 0` is a sphere.
    Capsule { radius: f64, half_height: f64 },
    Convex(ConvexShape),
    /// Convex pieces sharing one rigid body (decomposition output).
    Compound(Vec<ConvexShape>),
}

impl CollisionShape {
    pub fn from_pieces(set: &ConvexPieceSet) -> CollisionShape {
        CollisionShape::Compound(
            set.pieces
                .iter()
                .map(ConvexShape::from_hull_mesh)
                .collect(),
        )
    }

    /// World-frame bounding box at the given pose (loose for planes).
    pub fn aabb(&self, pose: &Pose) -> Aabb {
        match self {
            CollisionShape::Plane { height } => Aabb {
                min: Vector3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
                max: Vector3::new(f64::INFINITY, f64::INFINITY, *height),
            },
            CollisionShape::Box { half } => corners_aabb(
                &(0..8)
                    .map(|i| {
                        Vector3::new(
                            if i & 1 == 0 { -half.x } else { half.x },
                            if i & 2 == 0 { -half.y } else { half.y },
                            if i & 4 == 0 { -half.z } else { half.z },
                        )
                    })
                    .collect::<Vec<_>>(),
                pose,
            ),
            CollisionShape::Capsule { radius, half_height } => {
                let a = pose.apply(&Vector3::new(0.0, 0.0, *half_height));
                let b = pose.apply(&Vector3::new(0.0, 0.0, -*half_height));
                let r = Vector3::repeat(*radius);
                Aabb {
                    min: a.inf(&b) - r,
                    max: a.sup(&b) + r,
                }
            }
            CollisionShape::Convex(c) => corners_aabb(&c.points, pose),
            CollisionShape::Compound(cs) => {
                let mut min = Vector3::repeat(f64::INFINITY);
                let mut max = Vector3::repeat(f64::NEG_INFINITY);
                for c in cs {
                    let bb = corners_aabb(&c.points, pose);
                    min = min.inf(&bb.min);
                    max = max.sup(&bb.max);
                }
                Aabb { min, max }
            }
        }
    }
}

fn corners_aabb(points: &[Vector3<f64>], pose: &Pose) -> Aabb {
    let mut min = Vector3::repeat(f64::INFINITY);
    let mut max = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        let w = pose.apply(p);
        min = min.inf(&w);
        max = max.sup(&w);
    }
    Aabb { min, max }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cuboid_shape_has_six_faces() {
        let c = ConvexShape::cuboid(Vector3::new(0.5, 0.5, 0.5));
        assert_eq!(c.points.len(), 8);
        assert_eq!(c.faces.len(), 6);
        assert!(c.faces.iter().all(|f| f.len() == 4));
    }

    #[test]
    fn support_picks_extreme_corner() {
        let c = ConvexShape::cuboid(Vector3::new(1.0, 2.0, 3.0));
        let s = c.support_local(&Vector3::new(1.0, 1.0, 1.0));
        assert_eq!(s, Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn face_winding_is_outward() {
        let c = ConvexShape::cuboid(Vector3::new(0.5, 0.5, 0.5));
        for (fi, face) in c.faces.iter().enumerate() {
            let n = c.face_normals[fi];
            let a = c.points[face[0] as usize];
            let b = c.points[face[1] as usize];
            let d = c.points[face[2] as usize];
            let wn = (b - a).cross(&(d - a));
            assert!(wn.dot(&n) > 0.0, "face {fi} wound inward");
        }
    }
}
