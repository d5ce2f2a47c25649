//! Indexed triangle surfaces.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::se3::Pose;

/// Vertex-merge tolerance applied when a mesh is built.
pub const VERTEX_MERGE_TOL: f64 = 1e-8;

/// An indexed triangle surface, cleaned on construction: duplicate vertices
/// merged at [`VERTEX_MERGE_TOL`], degenerate faces dropped, and the
/// watertightness flag computed. Immutable afterwards.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[u32; 3]>,
    watertight: bool,
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.max + self.min) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        for v in &vertices {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::Load("non-finite vertex coordinate".into()));
            }
        }
        for f in &faces {
            for &i in f {
                if i as usize >= vertices.len() {
                    return Err(Error::Load(format!(
                        "face index {i} out of range ({} vertices)",
                        vertices.len()
                    )));
                }
            }
        }

        let (vertices, remap) = merge_vertices(vertices);
        let mut cleaned = Vec::with_capacity(faces.len());
        for f in faces {
            let g = [remap[f[0] as usize], remap[f[1] as usize], remap[f[2] as usize]];
            if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
                continue;
            }
            let a = vertices[g[0] as usize];
            let b = vertices[g[1] as usize];
            let c = vertices[g[2] as usize];
            if (b - a).cross(&(c - a)).norm() <= 1e-14 {
                continue;
            }
            cleaned.push(g);
        }
        if vertices.is_empty() || cleaned.is_empty() {
            return Err(Error::Load("mesh has no usable geometry".into()));
        }

        let watertight = check_watertight(vertices.len(), &cleaned);
        Ok(TriMesh {
            vertices,
            faces: cleaned,
            watertight,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    pub fn face_vertices(&self, f: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn aabb(&self) -> Aabb {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        Aabb { min, max }
    }

    /// Signed volume by the divergence theorem; positive for outward-oriented
    /// closed surfaces.
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.face_vertices(f);
            six_v += a.dot(&b.cross(&c));
        }
        six_v / 6.0
    }

    /// Applies a rigid transform to every vertex.
    pub fn transformed(&self, pose: &Pose) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| pose.apply(v)).collect(),
            faces: self.faces.clone(),
            watertight: self.watertight,
        }
    }

    /// Uniform scale about the origin.
    pub fn scaled(&self, s: f64) -> Result<TriMesh> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid("scale factor must be finite and positive"));
        }
        Ok(TriMesh {
            vertices: self.vertices.iter().map(|v| v * s).collect(),
            faces: self.faces.clone(),
            watertight: self.watertight,
        })
    }

    /// Splits into face-connectivity components (faces sharing a vertex are
    /// connected). Returns one mesh per component, in first-face order.
    pub fn connected_components(&self) -> Vec<TriMesh> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            let mut root = i;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = i;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        for f in &self.faces {
            let a = find(&mut parent, f[0] as usize);
            let b = find(&mut parent, f[1] as usize);
            parent[b] = a;
            let c = find(&mut parent, f[2] as usize);
            parent[c] = a;
        }

        // Group faces by component root, keyed in order of first appearance.
        let mut order: Vec<usize> = Vec::new();
        let mut groups: std::collections::BTreeMap<usize, Vec<[u32; 3]>> =
            std::collections::BTreeMap::new();
        for f in &self.faces {
            let root = find(&mut parent, f[0] as usize);
            if !groups.contains_key(&root) {
                order.push(root);
            }
            groups.entry(root).or_default().push(*f);
        }
        if order.len() == 1 {
            return vec![self.clone()];
        }

        order
            .into_iter()
            .map(|root| {
                let faces = groups.remove(&root).unwrap();
                let mut used: Vec<Option<u32>> = vec![None; self.vertices.len()];
                let mut verts = Vec::new();
                let remapped: Vec<[u32; 3]> = faces
                    .into_iter()
                    .map(|f| {
                        f.map(|i| {
                            *used[i as usize].get_or_insert_with(|| {
                                verts.push(self.vertices[i as usize]);
                                (verts.len() - 1) as u32
                            })
                        })
                    })
                    .collect();
                TriMesh {
                    watertight: check_watertight(verts.len(), &remapped),
                    vertices: verts,
                    faces: remapped,
                }
            })
            .collect()
    }
}

fn merge_vertices(vertices: Vec<Vector3<f64>>) -> (Vec<Vector3<f64>>, Vec<u32>) {
    let inv = 1.0 / VERTEX_MERGE_TOL;
    let mut seen: std::collections::HashMap<(i64, i64, i64), u32> = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(vertices.len());
    let mut remap = Vec::with_capacity(vertices.len());
    for v in vertices {
        let key = (
            (v.x * inv).round() as i64,
            (v.y * inv).round() as i64,
            (v.z * inv).round() as i64,
        );
        let idx = *seen.entry(key).or_insert_with(|| {
            out.push(v);
            (out.len() - 1) as u32
        });
        remap.push(idx);
    }
    (out, remap)
}

/// Closed, consistently oriented 2-manifold: every undirected edge must be
/// used exactly twice, once in each direction.
fn check_watertight(_nverts: usize, faces: &[[u32; 3]]) -> bool {
    let mut counts: std::collections::HashMap<(u32, u32), (i32, u32)> =
        std::collections::HashMap::new();
    for f in faces {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            let key = if a < b { (a, b) } else { (b, a) };
            let dir = if a < b { 1 } else { -1 };
            let e = counts.entry(key).or_insert((0, 0));
            e.0 += dir;
            e.1 += 1;
        }
    }
    counts.values().all(|&(balance, uses)| balance == 0 && uses == 2)
}

#[cfg(test)]
pub(crate) fn unit_cube() -> TriMesh {
    cuboid(Vector3::new(0.5, 0.5, 0.5), Vector3::zeros())
}

/// Latitude-longitude sphere, outward-oriented and watertight.
pub fn uv_sphere(radius: f64, rings: usize, segments: usize) -> TriMesh {
    assert!(rings >= 2 && segments >= 3);
    let mut verts = vec![Vector3::new(0.0, 0.0, radius)];
    for r in 1..rings {
        let phi = std::f64::consts::PI * r as f64 / rings as f64;
        for s in 0..segments {
            let theta = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            verts.push(Vector3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            ));
        }
    }
    verts.push(Vector3::new(0.0, 0.0, -radius));
    let bottom = (verts.len() - 1) as u32;
    let idx = |r: usize, s: usize| -> u32 { (1 + (r - 1) * segments + (s % segments)) as u32 };

    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, idx(1, s), idx(1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (idx(r, s), idx(r + 1, s), idx(r + 1, s + 1), idx(r, s + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for s in 0..segments {
        faces.push([idx(rings - 1, s), bottom, idx(rings - 1, s + 1)]);
    }
    TriMesh::new(verts, faces).expect("sphere construction is valid")
}

/// Axis-aligned cuboid with the given half extents, centered at `center`,
/// outward-oriented.
pub fn cuboid(half: Vector3<f64>, center: Vector3<f64>) -> TriMesh {
    let mut verts = Vec::with_capacity(8);
    for &z in &[-half.z, half.z] {
        for &y in &[-half.y, half.y] {
            for &x in &[-half.x, half.x] {
                verts.push(center + Vector3::new(x, y, z));
            }
        }
    }
    // Bottom (z-), top (z+), front (y-), back (y+), left (x-), right (x+).
    let faces: Vec<[u32; 3]> = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriMesh::new(verts, faces).expect("cuboid construction is valid")
}
