//! Rigid-body algebra over SE(3).
//!
//! # Conventions
//!
//! Points are column vectors. A [`RigidTransform`] named `a_from_b` maps
//! coordinates expressed in frame `b` into frame `a`:
//! `p_a = R * p_b + t`. This is the homogeneous matrix that describes the
//! pose of `b` relative to `a`.
//!
//! `compose(a, b)` is the matrix product `a * b`: `b` is applied to a point
//! first, then `a`. Chains therefore read right to left, exactly like the
//! 4x4 products they stand for:
//! `tracker_from_tool = tracker_from_base * base_from_ee * ee_from_tool`.
//!
//! Units are millimetres and radians throughout.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `RᵀR = I` and `det R = 1` for a matrix to count as a rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Matrices already orthonormal to this level are taken verbatim from
/// external data instead of being re-projected.
const EXACT_ROTATION_TOLERANCE: f64 = 1e-12;

/// Largest deviation from orthonormality that external data may carry and
/// still be projected onto the nearest rotation.
const PROJECTABLE_TOLERANCE: f64 = 1e-3;

/// Relative singular-value floor below which a correlation matrix counts as
/// rank deficient.
const RANK_TOLERANCE: f64 = 1e-9;

/// Proper rotation stored as a direction-cosine matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(Matrix3::identity())
    }

    /// Rotation by `angle` radians about `axis` (right-handed). A zero axis
    /// yields the identity.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self::from_rotation_vector(&(axis * (angle / n)))
    }

    /// Exponential map: the rotation about `v / |v|` by `|v|` radians.
    pub fn from_rotation_vector(v: &Vec3) -> Self {
        let theta = v.norm();
        let k = skew(v);
        // Taylor forms keep the small-angle coefficients exact.
        let (a, b) = if theta < 1e-6 {
            let t2 = theta * theta;
            (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
        };
        Rotation3(Matrix3::identity() + k * a + k * k * b)
    }

    pub fn about_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::x(), angle)
    }

    pub fn about_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::y(), angle)
    }

    pub fn about_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::z(), angle)
    }

    /// Accepts `m` only if it already satisfies the rotation invariants.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("rotation has non-finite entries".into()));
        }
        let err = orthonormality_error(&m);
        if err > ROTATION_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "matrix is not a proper rotation (deviation {err:.3e})"
            )));
        }
        Ok(Rotation3(m))
    }

    /// Nearest proper rotation in the Frobenius sense.
    pub fn nearest(m: &Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("rotation has non-finite entries".into()));
        }
        let svd = m.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::InvalidInput("SVD failed".into())),
        };
        let d = (u * v_t).determinant().signum();
        let smallest = argmin(&[svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]]);
        let mut diag = Matrix3::identity();
        diag[(smallest, smallest)] = d;
        Ok(Rotation3(u * diag * v_t))
    }

    /// Constructor for matrices read from files or other processes: exact
    /// rotations pass through, slightly drifted ones are re-projected, and
    /// anything further away is rejected.
    pub fn from_external(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("rotation has non-finite entries".into()));
        }
        let err = orthonormality_error(&m);
        if err <= EXACT_ROTATION_TOLERANCE {
            Ok(Rotation3(m))
        } else if err <= PROJECTABLE_TOLERANCE && m.determinant() > 0.0 {
            Self::nearest(&m)
        } else {
            Err(Error::InvalidInput(format!(
                "matrix is not a rotation (deviation {err:.3e})"
            )))
        }
    }

    /// Rotation from a quaternion `(w, x, y, z)`; the quaternion is normalised.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
        Rotation3(*q.to_rotation_matrix().matrix())
    }

    /// Unit quaternion `(w, x, y, z)` with `w >= 0`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.0);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let q = q.quaternion();
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn inverse(&self) -> Self {
        Rotation3(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation3) -> Self {
        Rotation3(self.0 * other.0)
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Geodesic angle to the identity, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let (s, c) = self.sin_cos();
        s.atan2(c)
    }

    /// Logarithm map: axis scaled by angle.
    pub fn rotation_vector(&self) -> Vec3 {
        let m = &self.0;
        let w = vee_antisymmetric(m);
        let (s, c) = self.sin_cos();
        let theta = s.atan2(c);
        if theta < 1e-6 {
            return w * (1.0 + theta * theta / 6.0);
        }
        if c > -0.9 {
            return w * (theta / s);
        }
        // Near π the antisymmetric part vanishes; read the axis off the
        // symmetric part instead, taking the sign from `w`.
        let b = (m + m.transpose()) * 0.5 - Matrix3::identity() * c;
        let diag = [b[(0, 0)], b[(1, 1)], b[(2, 2)]];
        let k = argmax(&diag);
        let mut axis = b.column(k).into_owned();
        axis /= axis.norm();
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        axis * theta
    }

    /// Unit rotation axis, or `None` for (near) identity.
    pub fn axis(&self) -> Option<Vec3> {
        let v = self.rotation_vector();
        let n = v.norm();
        (n > 1e-12).then(|| v / n)
    }

    /// Largest entry-wise deviation of `RᵀR` from `I`, combined with `|det R − 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }

    fn sin_cos(&self) -> (f64, f64) {
        let m = &self.0;
        let s = vee_antisymmetric(m).norm();
        let c = (m.trace() - 1.0) * 0.5;
        (s, c)
    }
}

impl Default for Rotation3 {
    fn default() -> Self {
        Self::identity()
    }
}

/// `(m − mᵀ)/2` read back as a vector; equals `sin θ · axis` for a rotation.
fn vee_antisymmetric(m: &Matrix3<f64>) -> Vec3 {
    Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    ) * 0.5
}

pub(crate) fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn orthonormality_error(m: &Matrix3<f64>) -> f64 {
    let gram = m.transpose() * m - Matrix3::identity();
    let ortho = gram.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    ortho.max((m.determinant() - 1.0).abs())
}

fn argmin(v: &[f64; 3]) -> usize {
    (0..3).fold(0, |best, i| if v[i] < v[best] { i } else { best })
}

fn argmax(v: &[f64; 3]) -> usize {
    (0..3).fold(0, |best, i| if v[i] > v[best] { i } else { best })
}

/// Element of SE(3): `p ↦ R p + t`, translation in millimetres.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RigidTransform {
    pub rotation: Rotation3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Rotation3, translation: Vec3) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vec3::zeros())
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Rotation3::identity(), t)
    }

    pub fn from_rotation(r: Rotation3) -> Self {
        Self::new(r, Vec3::zeros())
    }

    /// `self * other`; `other` acts first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r_inv = self.rotation.inverse();
        RigidTransform {
            rotation: r_inv,
            translation: -r_inv.rotate(&self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation.rotate(v)
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// From a 4x4 homogeneous matrix supplied by external data.
    pub fn from_homogeneous(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidInput("last row of homogeneous matrix must be 0 0 0 1".into()));
        }
        let r = Rotation3::from_external(m.fixed_view::<3, 3>(0, 0).into_owned())?;
        Ok(Self::new(r, m.fixed_view::<3, 1>(0, 3).into_owned()))
    }

    /// Rotation angle (rad) and translation distance (mm) between two poses.
    pub fn distance_to(&self, other: &RigidTransform) -> (f64, f64) {
        (
            rotation_angle_between(&self.rotation, &other.rotation),
            (self.translation - other.translation).norm(),
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TransformRepr {
            rotation: self.rotation.rows(),
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TransformRepr::deserialize(d)?;
        let r = repr.rotation;
        let m = Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        );
        let rotation = Rotation3::from_external(m).map_err(serde::de::Error::custom)?;
        let t = repr.translation;
        if !t.iter().all(|v| v.is_finite()) {
            return Err(serde::de::Error::custom("translation must be finite"));
        }
        Ok(RigidTransform::new(rotation, Vec3::new(t[0], t[1], t[2])))
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

pub fn transform_point(t: &RigidTransform, p: &Vec3) -> Vec3 {
    t.transform_point(p)
}

/// Rotation minimising `Σ |R aᵢ − bᵢ|²` over proper rotations (Kabsch, no
/// centring: the pairs are directions, not positions).
///
/// Fails with [`Error::DegenerateConfiguration`] when the pairs span fewer
/// than two independent directions.
pub fn best_fit_rotation(pairs: &[(Vec3, Vec3)]) -> Result<Rotation3> {
    let h = pairs
        .iter()
        .fold(Matrix3::zeros(), |acc, (a, b)| acc + b * a.transpose());
    if !h.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite direction pair".into()));
    }
    let svd = h.svd(true, true);
    let s = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    let mut sorted = s;
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[0] == 0.0 || sorted[1] <= RANK_TOLERANCE * sorted[0] {
        return Err(Error::DegenerateConfiguration(
            "direction pairs are collinear; rotation about their common axis is unobservable".into(),
        ));
    }
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateConfiguration("SVD failed".into())),
    };
    // h = Σ b aᵀ = U S Vᵀ, and R = U D Vᵀ maximises tr(Rᵀ h).
    let d = (u * v_t).determinant().signum();
    let mut diag = Matrix3::identity();
    let smallest = argmin(&s);
    diag[(smallest, smallest)] = d;
    Ok(Rotation3(u * diag * v_t))
}

/// Geodesic distance between two rotations, in `[0, π]`.
pub fn rotation_angle_between(a: &Rotation3, b: &Rotation3) -> f64 {
    a.inverse().compose(b).angle()
}

/// Coordinate frames that appear in pose logs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameId {
    /// Robot base.
    S,
    /// Robot end-effector flange.
    EE,
    /// Tracked rigid body on the osteotome.
    Tool,
    /// Osteotome tip.
    Tip,
    /// Optical tracker.
    OT,
    Digitizer,
    Phantom,
}

impl FrameId {
    pub const ALL: [FrameId; 7] = [
        FrameId::S,
        FrameId::EE,
        FrameId::Tool,
        FrameId::Tip,
        FrameId::OT,
        FrameId::Digitizer,
        FrameId::Phantom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FrameId::S => "S",
            FrameId::EE => "EE",
            FrameId::Tool => "Tool",
            FrameId::Tip => "Tip",
            FrameId::OT => "OT",
            FrameId::Digitizer => "Digitizer",
            FrameId::Phantom => "Phantom",
        }
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FrameId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FrameId::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}
