//! Mesh file loading (OBJ, OFF, STL ascii/binary) and OBJ writing.
//!
//! Coordinates are taken as meters. Polygonal faces are fan-triangulated.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::mesh::TriMesh;

/// Loads and cleans a mesh; the format is chosen by file extension
/// (`.obj`, `.off`, `.stl`).
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Err(Error::Load(format!("{}: file is empty", path.display())));
    }
    match ext.as_str() {
        "obj" => parse_obj(&bytes),
        "off" => parse_off(&bytes),
        "stl" => parse_stl(&bytes),
        other => Err(Error::Load(format!(
            "unsupported mesh format '.{other}' (expected .obj, .off, or .stl)"
        ))),
    }
    .map_err(|e| match e {
        Error::Load(msg) => Error::Load(format!("{}: {msg}", path.display())),
        e => e,
    })
}

pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

fn parse_obj(bytes: &[u8]) -> Result<TriMesh> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Load("OBJ is not UTF-8".into()))?;
    let mut verts: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in coord.iter_mut() {
                    *c = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Load(format!("bad vertex on line {}", ln + 1)))?;
                }
                verts.push(Vector3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|t| parse_obj_index(t, verts.len(), ln + 1))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::Load(format!("face with <3 vertices on line {}", ln + 1)));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(verts, faces)
}

fn parse_obj_index(token: &str, nverts: usize, line: usize) -> Result<u32> {
    let first = token.split('/').next().unwrap_or("");
    let i: i64 = first
        .parse()
        .map_err(|_| Error::Load(format!("bad face index '{token}' on line {line}")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        nverts as i64 + i
    } else {
        return Err(Error::Load(format!("zero face index on line {line}")));
    };
    if resolved < 0 || resolved >= nverts as i64 {
        return Err(Error::Load(format!("face index {i} out of range on line {line}")));
    }
    Ok(resolved as u32)
}

fn parse_off(bytes: &[u8]) -> Result<TriMesh> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Load("OFF is not UTF-8".into()))?;
    let mut tokens = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .peekable();
    match tokens.next() {
        Some("OFF") => {}
        _ => return Err(Error::Load("missing OFF header".into())),
    }
    let mut next_num = |what: &str| -> Result<f64> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Load(format!("expected {what}")))
    };
    let nv = next_num("vertex count")? as usize;
    let nf = next_num("face count")? as usize;
    let _ne = next_num("edge count")?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        verts.push(Vector3::new(
            next_num("vertex x")?,
            next_num("vertex y")?,
            next_num("vertex z")?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let arity = next_num("face arity")? as usize;
        if arity < 3 {
            return Err(Error::Load("face with <3 vertices".into()));
        }
        let mut idx = Vec::with_capacity(arity);
        for _ in 0..arity {
            let i = next_num("face index")? as i64;
            if i < 0 || i >= nv as i64 {
                return Err(Error::Load(format!("face index {i} out of range")));
            }
            idx.push(i as u32);
        }
        for k in 1..arity - 1 {
            faces.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    TriMesh::new(verts, faces)
}

fn parse_stl(bytes: &[u8]) -> Result<TriMesh> {
    // Ascii STL starts with "solid"; binary may too, so verify the body.
    if bytes.len() >= 5 && &bytes[..5] == b"solid" {
        if let Ok(text) = std::str::from_utf8(bytes) {
            if text.contains("facet") {
                return parse_stl_ascii(text);
            }
        }
    }
    parse_stl_binary(bytes)
}

fn parse_stl_ascii(text: &str) -> Result<TriMesh> {
    let mut verts: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut current: Vec<u32> = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        if it.next() == Some("vertex") {
            let mut coord = [0.0f64; 3];
            for c in coord.iter_mut() {
                *c = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Load("bad STL vertex".into()))?;
            }
            verts.push(Vector3::new(coord[0], coord[1], coord[2]));
            current.push((verts.len() - 1) as u32);
            if current.len() == 3 {
                faces.push([current[0], current[1], current[2]]);
                current.clear();
            }
        }
    }
    TriMesh::new(verts, faces)
}

fn parse_stl_binary(bytes: &[u8]) -> Result<TriMesh> {
    if bytes.len() < 84 {
        return Err(Error::Load("binary STL too short".into()));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + count * 50;
    if bytes.len() < expected {
        return Err(Error::Load(format!(
            "binary STL truncated: {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let f32_at = |off: usize| -> f64 {
        f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64
    };
    let mut verts = Vec::with_capacity(count * 3);
    let mut faces = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + t * 50 + 12; // skip the normal
        for v in 0..3 {
            let off = base + v * 12;
            verts.push(Vector3::new(f32_at(off), f32_at(off + 4), f32_at(off + 8)));
        }
        let i = (t * 3) as u32;
        faces.push([i, i + 1, i + 2]);
    }
    TriMesh::new(verts, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::cuboid;

    const CUBE_OBJ: &str = "\
v -0.5 -0.5 -0.5\nv 0.5 -0.5 -0.5\nv -0.5 0.5 -0.5\nv 0.5 0.5 -0.5\n\
v -0.5 -0.5 0.5\nv 0.5 -0.5 0.5\nv -0.5 0.5 0.5\nv 0.5 0.5 0.5\n\
f 1 3 2\nf 2 3 4\nf 5 6 7\nf 6 8 7\nf 1 2 5\nf 2 6 5\n\
f 3 7 4\nf 4 7 8\nf 1 5 3\nf 3 5 7\nf 2 4 6\nf 4 8 6\n";

    const CUBE_OFF: &str = "\
OFF\n8 12 0\n\
-0.5 -0.5 -0.5\n0.5 -0.5 -0.5\n-0.5 0.5 -0.5\n0.5 0.5 -0.5\n\
-0.5 -0.5 0.5\n0.5 -0.5 0.5\n-0.5 0.5 0.5\n0.5 0.5 0.5\n\
3 0 2 1\n3 1 2 3\n3 4 5 6\n3 5 7 6\n3 0 1 4\n3 1 5 4\n\
3 2 6 3\n3 3 6 7\n3 0 4 2\n3 2 4 6\n3 1 3 5\n3 3 7 5\n";

    fn write_temp(name: &str, contents: &[u8]) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sitsim-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn obj_unit_cube() {
        let path = write_temp("cube.obj", CUBE_OBJ.as_bytes());
        let m = load_mesh(&path).unwrap();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.faces().len(), 12);
        assert!(m.is_watertight());
    }

    #[test]
    fn off_and_obj_agree() {
        let obj = load_mesh(&write_temp("cube2.obj", CUBE_OBJ.as_bytes())).unwrap();
        let off = load_mesh(&write_temp("cube2.off", CUBE_OFF.as_bytes())).unwrap();
        let mut a: Vec<_> = obj
            .vertices()
            .iter()
            .map(|v| (format!("{:.9}", v.x), format!("{:.9}", v.y), format!("{:.9}", v.z)))
            .collect();
        let mut b: Vec<_> = off
            .vertices()
            .iter()
            .map(|v| (format!("{:.9}", v.x), format!("{:.9}", v.y), format!("{:.9}", v.z)))
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!((obj.signed_volume() - off.signed_volume()).abs() < 1e-12);
    }

    #[test]
    fn empty_file_is_a_load_error() {
        let path = write_temp("empty.obj", b"");
        assert!(matches!(load_mesh(&path), Err(Error::Load(_))));
    }

    #[test]
    fn unsupported_extension() {
        let path = write_temp("cube.ply", b"ply");
        assert!(matches!(load_mesh(&path), Err(Error::Load(_))));
    }

    #[test]
    fn binary_stl_round_trips_the_cube_shape() {
        let cube = cuboid(Vector3::repeat(0.5), Vector3::zeros());
        let mut bytes = vec![0u8; 80];
        bytes.extend_from_slice(&(cube.faces().len() as u32).to_le_bytes());
        for f in 0..cube.faces().len() {
            let tri = cube.face_vertices(f);
            bytes.extend_from_slice(&[0u8; 12]);
            for v in &tri {
                for c in [v.x, v.y, v.z] {
                    bytes.extend_from_slice(&(c as f32).to_le_bytes());
                }
            }
            bytes.extend_from_slice(&[0u8; 2]);
        }
        let m = load_mesh(&write_temp("cube.stl", &bytes)).unwrap();
        assert_eq!(m.vertices().len(), 8, "shared vertices must merge");
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn obj_save_load_round_trip() {
        let cube = cuboid(Vector3::new(0.5, 0.25, 0.75), Vector3::new(0.1, 0.2, 0.3));
        let path = std::env::temp_dir().join("sitsim-io-tests").join("rt.obj");
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        save_obj(&cube, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertices().len(), cube.vertices().len());
        assert!((back.signed_volume() - cube.signed_volume()).abs() < 1e-12);
    }
}
