//! Rotations, rigid poses, Euler conventions, and rotation distance metrics.
//!
//! Euler angles follow the x-y-z extrinsic convention throughout: the
//! matrix for `(alpha, beta, gamma)` is `Rz(gamma) * Ry(beta) * Rx(alpha)`,
//! i.e. roll about the fixed world x-axis, then pitch about the fixed
//! world y-axis, then yaw about the fixed world z-axis.
//!
//! Two distance metrics are provided and related by the chord/arc identity
//! `frobenius = 2 * sqrt(2) * sin(geodesic / 2)`: the Frobenius norm of the
//! matrix difference measures the straight-line distance between the two
//! rotations seen as points on the unit sphere in R^4, while the geodesic
//! metric measures the arc (the angle of the relative rotation).

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for validating orthonormality and unit determinant.
pub const ROTATION_TOL: f64 = 1e-9;

/// Pitch magnitude above which Euler extraction is treated as gimbal locked.
const GIMBAL_EPS: f64 = 1e-9;

/// A member of SO(3): a 3x3 orthonormal matrix with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: Matrix3<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            m: Matrix3::identity(),
        }
    }

    /// Validates `R * R^T = I` and `det(R) = +1` within [`ROTATION_TOL`].
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("rotation matrix has non-finite entries"));
        }
        let ortho_err = (m * m.transpose() - Matrix3::identity()).norm();
        if ortho_err > ROTATION_TOL {
            return Err(Error::invalid(format!(
                "matrix is not orthonormal (|R R^T - I| = {ortho_err:.3e})"
            )));
        }
        let det_err = (m.determinant() - 1.0).abs();
        if det_err > ROTATION_TOL {
            return Err(Error::invalid(format!(
                "matrix determinant is {:.12}, expected +1",
                m.determinant()
            )));
        }
        Ok(Rotation { m })
    }

    /// For matrices that are orthonormal by construction.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation { m }
    }

    pub fn about_x(angle: f64) -> Self {
        Rotation {
            m: nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), angle).into_inner(),
        }
    }

    pub fn about_y(angle: f64) -> Self {
        Rotation {
            m: nalgebra::Rotation3::from_axis_angle(&Vector3::y_axis(), angle).into_inner(),
        }
    }

    pub fn about_z(angle: f64) -> Self {
        Rotation {
            m: nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), angle).into_inner(),
        }
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0 && angle.is_finite()) {
            return Err(Error::invalid("axis-angle with zero axis or non-finite input"));
        }
        Ok(Rotation {
            m: nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle)
                .into_inner(),
        })
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Rotation {
            m: q.to_rotation_matrix().into_inner(),
        }
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn transpose(&self) -> Self {
        Rotation {
            m: self.m.transpose(),
        }
    }

    /// Alias for [`Rotation::transpose`]; the inverse of a rotation matrix.
    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    /// Column `i` of the matrix: the image of the i-th world axis.
    pub fn column(&self, i: usize) -> Vector3<f64> {
        self.m.column(i).into()
    }

    /// The world z-axis expressed in the body frame (third row of the matrix).
    pub fn world_z_in_body(&self) -> Vector3<f64> {
        Vector3::new(self.m[(2, 0)], self.m[(2, 1)], self.m[(2, 2)])
    }

    /// Re-orthonormalizes after accumulated floating-point drift.
    pub fn renormalized(&self) -> Self {
        let q = UnitQuaternion::from_matrix(&self.m);
        Rotation::from_quaternion(&q)
    }

    /// The rotation angle of `self` relative to the identity, in [0, pi].
    pub fn angle(&self) -> f64 {
        let c = ((self.m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        c.acos()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation { m: self.m * rhs.m }
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::identity()
    }
}

/// Extracted x-y-z extrinsic Euler angles.
///
/// `gimbal_lock` is set when `|cos(pitch)|` falls below the extraction
/// tolerance; in that case the returned solution is canonical with
/// `yaw = 0` and the roll absorbs the free angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub gimbal_lock: bool,
}

/// Builds `Rz(gamma) * Ry(beta) * Rx(alpha)`.
pub fn euler_to_matrix(alpha: f64, beta: f64, gamma: f64) -> Result<Rotation> {
    if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
        return Err(Error::invalid("non-finite Euler angle"));
    }
    Ok(Rotation::about_z(gamma) * Rotation::about_y(beta) * Rotation::about_x(alpha))
}

/// Inverse of [`euler_to_matrix`] with pitch canonicalized to [-pi/2, pi/2].
pub fn matrix_to_euler(r: &Rotation) -> EulerAngles {
    let m = r.matrix();
    // With R = Rz(g) Ry(b) Rx(a): m[(2,0)] = -sin(b), m[(2,1)] = cos(b) sin(a),
    // m[(2,2)] = cos(b) cos(a), m[(1,0)] = sin(g) cos(b), m[(0,0)] = cos(g) cos(b).
    let sin_beta = (-m[(2, 0)]).clamp(-1.0, 1.0);
    let cos_beta = (1.0 - sin_beta * sin_beta).sqrt();
    if cos_beta < GIMBAL_EPS {
        // Pitch at +-pi/2: roll and yaw are coupled; return the yaw = 0 solution.
        let (roll, pitch) = if sin_beta > 0.0 {
            (m[(0, 1)].atan2(m[(0, 2)]), std::f64::consts::FRAC_PI_2)
        } else {
            ((-m[(0, 1)]).atan2(-m[(0, 2)]), -std::f64::consts::FRAC_PI_2)
        };
        return EulerAngles {
            roll,
            pitch,
            yaw: 0.0,
            gimbal_lock: true,
        };
    }
    EulerAngles {
        roll: m[(2, 1)].atan2(m[(2, 2)]),
        pitch: sin_beta.asin(),
        yaw: m[(1, 0)].atan2(m[(0, 0)]),
        gimbal_lock: false,
    }
}

/// `||R1 - R2||_F`, in [0, 2 sqrt(2)].
pub fn frobenius_distance(r1: &Rotation, r2: &Rotation) -> f64 {
    (r1.matrix() - r2.matrix()).norm()
}

/// The angle of the relative rotation `R1^T R2`, in [0, pi].
pub fn geodesic_distance(r1: &Rotation, r2: &Rotation) -> f64 {
    (r1.transpose() * *r2).angle()
}

/// Which rotation metric a threshold refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationMetric {
    Frobenius,
    Geodesic,
}

impl RotationMetric {
    pub fn distance(&self, r1: &Rotation, r2: &Rotation) -> f64 {
        match self {
            RotationMetric::Frobenius => frobenius_distance(r1, r2),
            RotationMetric::Geodesic => geodesic_distance(r1, r2),
        }
    }
}

impl std::fmt::Display for RotationMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RotationMetric::Frobenius => write!(f, "frobenius"),
            RotationMetric::Geodesic => write!(f, "geodesic"),
        }
    }
}

/// A rigid transform: rotation followed by translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Result<Self> {
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("non-finite translation"));
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.apply(p) + self.translation
    }

    /// Rotates a direction without translating it.
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.apply(v)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt.apply(&self.translation)),
        }
    }

    /// `self * rhs`: apply `rhs` first, then `self`.
    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation.apply(&rhs.translation) + self.translation,
        }
    }

    pub fn z(&self) -> f64 {
        self.translation.z
    }
}

/// Distance between two rotations minimized over a world yaw applied to the
/// first: `min over g of dist(Rz(g) * R1, R2)`.
///
/// This is the robust form of comparing `R(roll, pitch, 0)` matrices: it
/// agrees with zeroing the extracted yaws when both rotations are away from
/// the pitch singularity, and it stays exactly yaw-invariant at pitch
/// +-pi/2 where Euler extraction folds yaw into roll (a cube resting on a
/// face sits exactly there). Closed form: the trace of `R1 R2^T Rz(g)` is
/// sinusoidal in g, so its maximum is `m22 + hypot(m00 + m11, m10 - m01)`.
pub fn yaw_aligned_distance(r1: &Rotation, r2: &Rotation, metric: RotationMetric) -> f64 {
    let m = r1.matrix() * r2.matrix().transpose();
    let c = m[(0, 0)] + m[(1, 1)];
    let s = m[(1, 0)] - m[(0, 1)];
    let best_trace = m[(2, 2)] + (c * c + s * s).sqrt();
    match metric {
        RotationMetric::Frobenius => (6.0 - 2.0 * best_trace).max(0.0).sqrt(),
        RotationMetric::Geodesic => ((best_trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos(),
    }
}

/// Thresholds for the equivalently-stable predicate.
///
/// `rot_threshold` is unitless for the Frobenius metric and radians for the
/// geodesic metric; configurations carry one value per metric.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EquivalenceThresholds {
    pub rot_threshold: f64,
    pub z_threshold: f64,
}

impl EquivalenceThresholds {
    pub fn new(rot_threshold: f64, z_threshold: f64) -> Result<Self> {
        if !(rot_threshold > 0.0 && z_threshold > 0.0) {
            return Err(Error::invalid(
                "equivalence thresholds must be strictly positive",
            ));
        }
        Ok(EquivalenceThresholds {
            rot_threshold,
            z_threshold,
        })
    }
}

/// Two poses are equivalently stable when their roll, pitch, and height
/// agree; yaw and horizontal position are ignored (exactly, via the
/// yaw-minimized rotation distance).
pub fn equivalently_stable(
    p1: &Pose,
    p2: &Pose,
    thr: &EquivalenceThresholds,
    metric: RotationMetric,
) -> bool {
    yaw_aligned_distance(&p1.rotation, &p2.rotation, metric) < thr.rot_threshold
        && (p1.z() - p2.z()).abs() < thr.z_threshold
}
