//! Mass, center of mass, and inertia of solids.
//!
//! Mesh integration uses signed tetrahedra against the origin (divergence
//! theorem): each surface triangle contributes the volume, first moment,
//! and second moments of the tetrahedron it spans with the origin, with
//! sign taken from orientation. The result is exact for closed,
//! consistently oriented surfaces.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::mesh::TriMesh;

#[derive(Clone, Copy, Debug)]
pub struct MassProps {
    /// kg
    pub mass: f64,
    /// Center of mass, meters.
    pub com: Vector3<f64>,
    /// About the center of mass, kg m^2.
    pub inertia: Matrix3<f64>,
}

impl MassProps {
    /// Principal moments must satisfy the triangle inequality for any real
    /// solid; exposed for validation and tests.
    pub fn principal_moments(&self) -> Vector3<f64> {
        self.inertia
            .symmetric_eigen()
            .eigenvalues
    }
}

/// Integrates a watertight mesh at uniform density.
pub fn mass_properties(mesh: &TriMesh, density: f64) -> Result<MassProps> {
    if !(density.is_finite() && density > 0.0) {
        return Err(Error::invalid("density must be finite and positive"));
    }
    if !mesh.is_watertight() {
        return Err(Error::MassProperties(
            "surface is open or inconsistently oriented".into(),
        ));
    }

    let mut volume = 0.0;
    let mut first = Vector3::zeros();
    let mut second = Matrix3::zeros();
    for f in 0..mesh.faces().len() {
        let [a, b, c] = mesh.face_vertices(f);
        let vt = a.dot(&b.cross(&c)) / 6.0;
        volume += vt;
        first += vt * (a + b + c) / 4.0;
        // Integral of x_i x_j over the tetrahedron (0, a, b, c):
        // V/20 * (sum_k v_k v_k^T + (sum_k v_k)(sum_k v_k)^T), k over vertices.
        let s = a + b + c;
        let m = a * a.transpose() + b * b.transpose() + c * c.transpose() + s * s.transpose();
        second += (vt / 20.0) * m;
    }

    if volume < 0.0 {
        // Inward orientation: all signed integrals flip together.
        volume = -volume;
        first = -first;
        second = -second;
    }
    if volume <= 1e-18 {
        return Err(Error::MassProperties("enclosed volume is zero".into()));
    }

    let mass = density * volume;
    let com = first / volume;
    let second = density * second;
    let origin_inertia = Matrix3::identity() * second.trace() - second;
    let com_inertia =
        origin_inertia - mass * (Matrix3::identity() * com.norm_squared() - com * com.transpose());

    Ok(MassProps {
        mass,
        com,
        inertia: com_inertia,
    })
}

/// Solid box with the given half extents, centered at the origin.
pub fn box_mass_props(half: Vector3<f64>, density: f64) -> MassProps {
    let mass = density * 8.0 * half.x * half.y * half.z;
    let third = mass / 3.0;
    MassProps {
        mass,
        com: Vector3::zeros(),
        inertia: Matrix3::from_diagonal(&Vector3::new(
            third * (half.y * half.y + half.z * half.z),
            third * (half.x * half.x + half.z * half.z),
            third * (half.x * half.x + half.y * half.y),
        )),
    }
}

/// Solid capsule along local z: cylinder of half length `half_height`
/// capped by hemispheres of `radius`. `half_height = 0` is a sphere.
pub fn capsule_mass_props(radius: f64, half_height: f64, density: f64) -> MassProps {
    let r = radius;
    let l = 2.0 * half_height;
    let m_cyl = density * std::f64::consts::PI * r * r * l;
    let m_sph = density * 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
    let mass = m_cyl + m_sph;
    let i_axial = m_cyl * r * r / 2.0 + m_sph * 2.0 * r * r / 5.0;
    let i_perp = m_cyl * (l * l / 12.0 + r * r / 4.0)
        + m_sph * (2.0 * r * r / 5.0 + l * l / 4.0 + 3.0 * l * r / 8.0);
    MassProps {
        mass,
        com: Vector3::zeros(),
        inertia: Matrix3::from_diagonal(&Vector3::new(i_perp, i_perp, i_axial)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::{cuboid, unit_cube, uv_sphere};
    use crate::se3::Pose;

    #[test]
    fn unit_cube_at_wood_density() {
        // Closed form: m = rho, I = m s^2 / 6 per axis for a unit cube.
        let mp = mass_properties(&unit_cube(), 600.0).unwrap();
        assert!((mp.mass - 600.0).abs() < 1e-9);
        assert!(mp.com.norm() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 100.0 } else { 0.0 };
                assert!(
                    (mp.inertia[(i, j)] - expected).abs() < 1e-6,
                    "inertia[{i}{j}] = {}",
                    mp.inertia[(i, j)]
                );
            }
        }
    }

    #[test]
    fn translation_moves_com_not_inertia() {
        let t = Vector3::new(1.5, -2.0, 0.75);
        let mp0 = mass_properties(&unit_cube(), 600.0).unwrap();
        let moved = unit_cube().transformed(&Pose::from_translation(t));
        let mp1 = mass_properties(&moved, 600.0).unwrap();
        assert!((mp1.com - (mp0.com + t)).norm() < 1e-9);
        assert!((mp1.inertia - mp0.inertia).norm() < 1e-6);
        assert!((mp1.mass - mp0.mass).abs() < 1e-9);
    }

    #[test]
    fn tessellated_sphere_close_to_closed_form() {
        let mesh = uv_sphere(1.0, 64, 128);
        let mp = mass_properties(&mesh, 600.0).unwrap();
        let exact_mass = 600.0 * 4.0 / 3.0 * std::f64::consts::PI;
        assert!(
            (mp.mass - exact_mass).abs() / exact_mass < 0.01,
            "mass {} vs {}",
            mp.mass,
            exact_mass
        );
        let exact_i = 0.4 * exact_mass;
        for i in 0..3 {
            assert!(
                (mp.inertia[(i, i)] - exact_i).abs() / exact_i < 0.01,
                "inertia {} vs {}",
                mp.inertia[(i, i)],
                exact_i
            );
        }
    }

    #[test]
    fn density_and_scale_laws() {
        let mesh = cuboid(Vector3::new(0.4, 0.7, 0.2), Vector3::new(0.1, 0.0, -0.3));
        let base = mass_properties(&mesh, 100.0).unwrap();
        let dense = mass_properties(&mesh, 200.0).unwrap();
        assert!((dense.mass - 2.0 * base.mass).abs() < 1e-9 * base.mass);
        assert!((dense.inertia - 2.0 * base.inertia).norm() < 1e-9 * base.inertia.norm());

        let s = 1.7;
        let scaled = mass_properties(&mesh.scaled(s).unwrap(), 100.0).unwrap();
        assert!((scaled.mass - s.powi(3) * base.mass).abs() < 1e-9 * scaled.mass);
        assert!(
            (scaled.inertia - s.powi(5) * base.inertia).norm() < 1e-9 * scaled.inertia.norm()
        );
    }

    #[test]
    fn open_mesh_is_rejected() {
        let verts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let open = TriMesh::new(verts, vec![[0u32, 1, 2]]).unwrap();
        assert!(matches!(
            mass_properties(&open, 600.0),
            Err(Error::MassProperties(_))
        ));
    }

    #[test]
    fn principal_moment_triangle_inequality() {
        let mp = mass_properties(&cuboid(Vector3::new(0.1, 0.5, 1.0), Vector3::zeros()), 600.0)
            .unwrap();
        let p = mp.principal_moments();
        assert!(p.x + p.y >= p.z - 1e-9);
        assert!(p.y + p.z >= p.x - 1e-9);
        assert!(p.x + p.z >= p.y - 1e-9);
        assert!(p.min() > 0.0);
    }

    #[test]
    fn box_formula_matches_mesh_integration() {
        let half = Vector3::new(0.3, 0.45, 0.11);
        let analytic = box_mass_props(half, 600.0);
        let mesh = mass_properties(&cuboid(half, Vector3::zeros()), 600.0).unwrap();
        assert!((analytic.mass - mesh.mass).abs() < 1e-9);
        assert!((analytic.inertia - mesh.inertia).norm() < 1e-9);
    }

    #[test]
    fn capsule_with_zero_height_is_a_sphere() {
        let mp = capsule_mass_props(0.5, 0.0, 600.0);
        let m = 600.0 * 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!((mp.mass - m).abs() < 1e-9);
        assert!((mp.inertia[(0, 0)] - 0.4 * m * 0.25).abs() < 1e-9);
        assert!((mp.inertia[(2, 2)] - 0.4 * m * 0.25).abs() < 1e-9);
    }
}
