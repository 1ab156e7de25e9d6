use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GeometryError, ROTATION_TOL};

/// An SE(3) pose or relative motion: proper rotation plus translation.
///
/// The rotation matrix is kept orthonormal with determinant +1 within
/// [`ROTATION_TOL`]; constructors validate, composition preserves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from an explicit rotation matrix, rejecting
    /// matrices that are not proper rotations.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if ortho > ROTATION_TOL {
            return Err(GeometryError::InvalidTransform(format!(
                "rotation not orthonormal (max deviation {ortho:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(GeometryError::InvalidTransform(format!(
                "rotation determinant {det} != +1"
            )));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidTransform(
                "translation not finite".into(),
            ));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: q.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about `axis`, plus translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let q = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self::from_quaternion(q, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
            self.rotation,
        ));
        // Canonical sign keeps serialized output stable.
        if q.w < 0.0 {
            UnitQuaternion::new_unchecked(-q.into_inner())
        } else {
            q
        }
    }

    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    /// Rotates a direction without translating it.
    pub fn apply_vector(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * dir
    }

    /// `self.compose(&b)` applies `b` first, then `self`.
    pub fn compose(&self, b: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * b.rotation,
            translation: self.rotation * b.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Euclidean distance between translations and geodesic angle (degrees)
    /// between rotations.
    pub fn pose_error(&self, other: &RigidTransform) -> (f64, f64) {
        let t_err = (self.translation - other.translation).norm();
        let r_err = rotation_angle_deg(&(self.rotation.transpose() * other.rotation));
        (t_err, r_err)
    }
}

/// Geodesic angle of a rotation matrix, in degrees.
///
/// Evaluated as atan2(sin θ, cos θ) with cos θ = (tr−1)/2 and sin θ taken
/// from the skew part; equivalent to acos((tr−1)/2) but well conditioned
/// near 0° where acos loses ~8 digits.
pub fn rotation_angle_deg(r: &Matrix3<f64>) -> f64 {
    let cos = (r.trace() - 1.0) / 2.0;
    let sin = 0.5
        * Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        )
        .norm();
    sin.atan2(cos).to_degrees()
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    /// Quaternion as [w, x, y, z].
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let q = self.quaternion();
        TransformRepr {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TransformRepr::deserialize(deserializer)?;
        let [w, x, y, z] = repr.rotation;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(D::Error::custom(format!(
                "quaternion not normalized (norm {norm})"
            )));
        }
        Ok(RigidTransform::from_quaternion(
            UnitQuaternion::new_normalize(q),
            Vector3::from(repr.translation),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn rot_z(angle: f64) -> RigidTransform {
        RigidTransform::from_axis_angle(Vector3::z(), angle, Vector3::zeros())
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform::from_axis_angle(
            Vector3::new(0.3, -1.0, 0.5),
            0.7,
            Vector3::new(0.1, 0.2, -0.4),
        );
        let id = t.compose(&t.inverse());
        assert_abs_diff_eq!(id.rotation(), &Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(id.translation(), &Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn compose_identity_is_noop() {
        let t = RigidTransform::from_axis_angle(Vector3::y(), 1.1, Vector3::new(1.0, 2.0, 3.0));
        let c = RigidTransform::identity().compose(&t);
        assert_abs_diff_eq!(c.rotation(), t.rotation(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.translation(), t.translation(), epsilon = 1e-15);
    }

    #[test]
    fn two_quarter_turns_make_a_half_turn() {
        // Hand matrix product: Rz(90) * Rz(90) = Rz(180).
        let half = rot_z(FRAC_PI_2).compose(&rot_z(FRAC_PI_2));
        let expected = Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(half.rotation(), &expected, epsilon = 1e-12);
    }

    #[test]
    fn compose_applies_right_operand_first() {
        let lift = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let quarter = rot_z(FRAC_PI_2);
        // quarter ∘ lift: lift first, then rotate.
        let p = quarter.compose(&lift).apply(&Vector3::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(p, Vector3::new(0.0, 1.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn pose_error_of_equal_poses_is_zero() {
        let t = RigidTransform::from_axis_angle(Vector3::x(), 0.4, Vector3::new(0.0, 1.0, 0.0));
        assert_eq!(t.pose_error(&t), (0.0, 0.0));
    }

    #[test]
    fn pose_error_pure_translation() {
        let a = RigidTransform::identity();
        let b = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let (te, re) = a.pose_error(&b);
        assert_abs_diff_eq!(te, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pose_error_quarter_turn() {
        // Trace formula: theta = acos((tr - 1) / 2).
        let (te, re) = RigidTransform::identity().pose_error(&rot_z(FRAC_PI_2));
        assert_abs_diff_eq!(te, 0.0);
        assert_abs_diff_eq!(re, 90.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_improper_rotation() {
        let mirror = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(RigidTransform::new(mirror, Vector3::zeros()).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let t = RigidTransform::from_axis_angle(
            Vector3::new(1.0, 2.0, -0.5),
            0.9,
            Vector3::new(0.1, 0.0, 0.3),
        );
        let json = serde_json::to_string(&t).unwrap();
        let back: RigidTransform = serde_json::from_str(&json).unwrap();
        let (te, re) = t.pose_error(&back);
        assert!(te < 1e-12 && re < 1e-9);
    }

    #[test]
    fn serde_rejects_unnormalized_quaternion() {
        let json = r#"{"rotation":[2.0,0.0,0.0,0.0],"translation":[0.0,0.0,0.0]}"#;
        assert!(serde_json::from_str::<RigidTransform>(json).is_err());
    }
}
