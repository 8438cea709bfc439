//! Shared geometric primitives: planar and spatial poses, the se(3)
//! generator basis, twist exponentials and a discrete curvature estimator.
//!
//! Everything downstream (steering, forward kinematics, projection) is built
//! on the conventions fixed here: rotations are proper orthonormal 3x3
//! matrices mapping local to world coordinates, angles are wrapped to
//! (-pi, pi], and homogeneous 4x4 transforms place the rotation block top
//! left and the translation in the last column.

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

/// Construction-time tolerance on `‖RᵀR − I‖∞` after renormalization.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// How far a rotation may drift from orthonormal before construction
/// refuses to silently repair it.
const ORTHONORMAL_REPAIR_LIMIT: f64 = 1e-6;

/// Minimum pairwise separation accepted by [`discrete_curvature`].
const MIN_POINT_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("se(3) basis index {0} out of range 1..=6")]
    BasisIndex(usize),
    #[error("rotation deviates from orthonormal by {0:.3e}")]
    NotOrthonormal(f64),
    #[error("degenerate point triple: pairwise separation {0:.3e} below minimum")]
    CoincidentPoints(f64),
}

/// Wraps an angle to the half-open interval (-pi, pi].
pub fn wrap_angle(angle: f64) -> Result<f64, GeometryError> {
    if !angle.is_finite() {
        return Err(GeometryError::NonFinite("angle"));
    }
    let mut wrapped = angle.rem_euclid(2.0 * std::f64::consts::PI);
    if wrapped > std::f64::consts::PI {
        wrapped -= 2.0 * std::f64::consts::PI;
    }
    Ok(wrapped)
}

/// Rotation about the world z-axis by `angle` radians.
pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation about the world y-axis by `angle` radians.
pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Gram-Schmidt renormalization of a near-rotation matrix.
///
/// The first column is normalized, the second is orthogonalized against it,
/// and the third is replaced by their cross product, preserving handedness
/// for inputs close to a proper rotation.
fn orthonormalize(m: &Matrix3<f64>) -> Result<Matrix3<f64>, GeometryError> {
    let c0 = m.column(0).into_owned();
    let n0 = c0.norm();
    if n0 < 1e-9 {
        return Err(GeometryError::NotOrthonormal(1.0));
    }
    let e0 = c0 / n0;
    let c1 = m.column(1).into_owned();
    let c1 = c1 - e0 * e0.dot(&c1);
    let n1 = c1.norm();
    if n1 < 1e-9 {
        return Err(GeometryError::NotOrthonormal(1.0));
    }
    let e1 = c1 / n1;
    let e2 = e0.cross(&e1);
    Ok(Matrix3::from_columns(&[e0, e1, e2]))
}

/// Max-norm deviation of `RᵀR` from the identity.
fn orthonormal_deviation(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r;
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev
}

/// A planar pose: position and heading, heading wrapped to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeometryError::NonFinite("translation"));
        }
        Ok(Self {
            x,
            y,
            heading: wrap_angle(heading)?,
        })
    }

    pub fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        }
    }

    /// Embeds the pose in space: z = 0, rotation = rot_z(heading).
    pub fn to_spatial(&self) -> Pose3 {
        Pose3 {
            translation: Vector3::new(self.x, self.y, 0.0),
            rotation: rot_z(self.heading),
        }
    }
}

/// A spatial pose: translation plus a proper orthonormal rotation
/// (local-to-world).
#[derive(Debug, Clone, PartialEq)]
pub struct Pose3 {
    pub translation: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Pose3 {
    /// Builds a pose, renormalizing the rotation by Gram-Schmidt.
    ///
    /// Inputs whose rotation deviates from orthonormal by more than a repair
    /// limit (1e-6) are rejected rather than silently fixed; after
    /// renormalization the deviation is guaranteed below [`ORTHONORMAL_TOL`].
    pub fn new(translation: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self, GeometryError> {
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("translation"));
        }
        if !rotation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("rotation"));
        }
        let dev = orthonormal_deviation(&rotation);
        if dev > ORTHONORMAL_REPAIR_LIMIT {
            return Err(GeometryError::NotOrthonormal(dev));
        }
        let rotation = if dev > 0.0 {
            orthonormalize(&rotation)?
        } else {
            rotation
        };
        debug_assert!(orthonormal_deviation(&rotation) <= ORTHONORMAL_TOL);
        Ok(Self {
            translation,
            rotation,
        })
    }

    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: Matrix3::identity(),
        }
    }

    /// Composition `self ∘ other` (apply `other` in `self`'s frame).
    pub fn compose(&self, other: &Pose3) -> Result<Pose3, GeometryError> {
        Pose3::new(
            self.translation + self.rotation * other.translation,
            self.rotation * other.rotation,
        )
    }

    /// Maps a point from this pose's local frame to world coordinates.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation * p
    }

    /// Angle of the relative rotation between two poses, in [0, pi].
    pub fn rotation_angle_to(&self, other: &Pose3) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        cos.acos()
    }

    /// Projects to the plane: heading of the rotated x-axis.
    pub fn to_planar(&self) -> Pose2 {
        let xaxis = self.rotation.column(0);
        Pose2 {
            x: self.translation.x,
            y: self.translation.y,
            heading: xaxis.y.atan2(xaxis.x),
        }
    }
}

/// The se(3) generator `X_i` for `i` in 1..=6 as a 4x4 matrix.
///
/// X_1..X_3 translate along x, y, z; X_4 rotates about z (yaw), X_5 about y
/// (pitch), X_6 about x (roll).
pub fn se3_basis(i: usize) -> Result<Matrix4<f64>, GeometryError> {
    let mut m = Matrix4::zeros();
    match i {
        1 => m[(0, 3)] = 1.0,
        2 => m[(1, 3)] = 1.0,
        3 => m[(2, 3)] = 1.0,
        4 => {
            m[(0, 1)] = -1.0;
            m[(1, 0)] = 1.0;
        }
        5 => {
            m[(0, 2)] = 1.0;
            m[(2, 0)] = -1.0;
        }
        6 => {
            m[(1, 2)] = -1.0;
            m[(2, 1)] = 1.0;
        }
        _ => return Err(GeometryError::BasisIndex(i)),
    }
    Ok(m)
}

/// A twist: coefficients over the generators X_1..X_6.
///
/// Steering always uses unit forward speed, i.e. coefficient 1 on X_1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub coeffs: [f64; 6],
}

impl Twist {
    pub fn new(coeffs: [f64; 6]) -> Result<Self, GeometryError> {
        if !coeffs.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("twist coefficients"));
        }
        Ok(Self { coeffs })
    }

    /// Unit forward speed with yaw/pitch/roll rates `u4`, `u5`, `u6`.
    pub fn unit_forward(u4: f64, u5: f64, u6: f64) -> Result<Self, GeometryError> {
        Self::new([1.0, 0.0, 0.0, u4, u5, u6])
    }

    /// The 4x4 matrix `Σ cᵢ Xᵢ`.
    pub fn generator(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                m += se3_basis(k + 1).expect("index in range") * c;
            }
        }
        m
    }
}

/// Exponential of the twist flowed for `dt`: the rigid transform reached
/// from the identity by following the twist at unit parameter speed.
///
/// Uses the Padé scaling-and-squaring matrix exponential on the 4x4
/// generator; the rotation block is renormalized on extraction.
pub fn se3_exp(twist: &Twist, dt: f64) -> Result<Pose3, GeometryError> {
    if !dt.is_finite() {
        return Err(GeometryError::NonFinite("dt"));
    }
    let m = (twist.generator() * dt).exp();
    let rotation = m.fixed_view::<3, 3>(0, 0).into_owned();
    let translation = m.fixed_view::<3, 1>(0, 3).into_owned();
    Pose3::new(translation, rotation)
}

/// Discrete curvature of a point triple: the reciprocal of the circumradius
/// of the triangle (prev, mid, next). Collinear triples give 0; triples with
/// a pairwise separation below 1e-12 are rejected.
pub fn discrete_curvature(
    prev: &Vector3<f64>,
    mid: &Vector3<f64>,
    next: &Vector3<f64>,
) -> Result<f64, GeometryError> {
    let ab = mid - prev;
    let bc = next - mid;
    let ac = next - prev;
    let (lab, lbc, lac) = (ab.norm(), bc.norm(), ac.norm());
    let min_sep = lab.min(lbc).min(lac);
    if min_sep < MIN_POINT_SEPARATION {
        return Err(GeometryError::CoincidentPoints(min_sep));
    }
    Ok(2.0 * ab.cross(&ac).norm() / (lab * lbc * lac))
}
