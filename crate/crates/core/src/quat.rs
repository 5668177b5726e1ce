//! Attitude algebra on scalar-first unit quaternions.
//!
//! Quaternions are stored as `(q0, q1, q2, q3)` with `q0` the scalar part.
//! `dcm(q)` is the rotation matrix taking body-frame vectors into the
//! inertial frame, so the translational dynamics read `v̇ = dcm(q)·T/m + g`.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

/// Quaternion for a rotation of `angle` radians about a unit `axis`.
pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Vector4<f64> {
    let half = 0.5 * angle;
    let s = half.sin();
    Vector4::new(half.cos(), s * axis[0], s * axis[1], s * axis[2])
}

/// Hamilton product `a ⊗ b`.
pub fn multiply(a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    )
}

/// Euler angles (degrees) to a unit quaternion.
///
/// Intrinsic Z-Y-X sequence: yaw about axis 2, then pitch about axis 1,
/// then roll about axis 0, composed as `q = q_yaw ⊗ q_pitch ⊗ q_roll`.
pub fn euler_to_quaternion(roll_deg: f64, pitch_deg: f64, yaw_deg: f64) -> Vector4<f64> {
    let q_roll = from_axis_angle(&Vector3::x(), roll_deg.to_radians());
    let q_pitch = from_axis_angle(&Vector3::y(), pitch_deg.to_radians());
    let q_yaw = from_axis_angle(&Vector3::z(), yaw_deg.to_radians());
    normalize(&multiply(&multiply(&q_yaw, &q_pitch), &q_roll))
}

pub fn normalize(q: &Vector4<f64>) -> Vector4<f64> {
    q / q.norm()
}

/// Rotation matrix of `q` mapping body-frame vectors into the inertial frame.
///
/// The input is renormalized; a zero quaternion is rejected.
pub fn quaternion_to_dcm(q: &Vector4<f64>) -> Result<Matrix3<f64>, QuatError> {
    let n = q.norm();
    if n < 1e-12 {
        return Err(QuatError::ZeroQuaternion);
    }
    Ok(dcm_unchecked(&(q / n)))
}

/// `dcm` for an already-unit quaternion (no renormalization).
pub fn dcm_unchecked(q: &Vector4<f64>) -> Matrix3<f64> {
    let (q0, q1, q2, q3) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        1.0 - 2.0 * (q2 * q2 + q3 * q3),
        2.0 * (q1 * q2 - q0 * q3),
        2.0 * (q1 * q3 + q0 * q2),
        2.0 * (q1 * q2 + q0 * q3),
        1.0 - 2.0 * (q1 * q1 + q3 * q3),
        2.0 * (q2 * q3 - q0 * q1),
        2.0 * (q1 * q3 - q0 * q2),
        2.0 * (q2 * q3 + q0 * q1),
        1.0 - 2.0 * (q1 * q1 + q2 * q2),
    )
}

/// Kinematics operator: `q̇ = ½ Ω(ω) q` for body rates `ω`.
///
/// Skew-symmetric by construction, so the quaternion norm is invariant
/// under the exact flow.
pub fn omega_matrix(w: &Vector3<f64>) -> Matrix4<f64> {
    let (wx, wy, wz) = (w[0], w[1], w[2]);
    Matrix4::new(
        0.0, -wx, -wy, -wz, //
        wx, 0.0, wz, -wy, //
        wy, -wz, 0.0, wx, //
        wz, wy, -wx, 0.0,
    )
}

/// Spherical linear interpolation between unit quaternions, `s ∈ [0, 1]`.
pub fn slerp(a: &Vector4<f64>, b: &Vector4<f64>, s: f64) -> Vector4<f64> {
    let mut dot = a.dot(b);
    // take the short arc
    let b = if dot < 0.0 {
        dot = -dot;
        -*b
    } else {
        *b
    };
    if dot > 1.0 - 1e-10 {
        return normalize(&(a + s * (b - a)));
    }
    let theta = dot.acos();
    let sin_theta = theta.sin();
    let wa = ((1.0 - s) * theta).sin() / sin_theta;
    let wb = (s * theta).sin() / sin_theta;
    normalize(&(wa * a + wb * b))
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QuatError {
    #[error("zero quaternion has no orientation")]
    ZeroQuaternion,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Axis-angle rotation applied directly (Rodrigues), used as an oracle.
    fn rotate_axis_angle(axis: &Vector3<f64>, angle: f64, v: &Vector3<f64>) -> Vector3<f64> {
        let k = axis.normalize();
        v * angle.cos() + k.cross(v) * angle.sin() + k * (k.dot(v)) * (1.0 - angle.cos())
    }

    #[test]
    fn identity_rotation() {
        let q = euler_to_quaternion(0.0, 0.0, 0.0);
        assert_abs_diff_eq!(q, Vector4::new(1.0, 0.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn single_axis_pitch_matches_half_angle() {
        let q = euler_to_quaternion(0.0, 30.0, 0.0);
        let half = 15f64.to_radians();
        assert_abs_diff_eq!(q[0], half.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[2], half.sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(q[3], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pitch_yaw_composes_single_axis_quaternions() {
        let q = euler_to_quaternion(0.0, 30.0, 30.0);
        let q_pitch = from_axis_angle(&Vector3::y(), 30f64.to_radians());
        let q_yaw = from_axis_angle(&Vector3::z(), 30f64.to_radians());
        let expect = multiply(&q_yaw, &q_pitch);
        assert_abs_diff_eq!(q, expect, epsilon = 1e-12);
    }

    #[test]
    fn dcm_identity() {
        let q = Vector4::new(1.0, 0.0, 0.0, 0.0);
        assert_abs_diff_eq!(quaternion_to_dcm(&q).unwrap(), Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn dcm_pitch_matches_axis_angle_oracle() {
        let q = euler_to_quaternion(0.0, 30.0, 0.0);
        let r = quaternion_to_dcm(&q).unwrap();
        let angle = 30f64.to_radians();
        for v in [Vector3::x(), Vector3::z(), Vector3::new(0.3, -1.2, 0.7)] {
            let expect = rotate_axis_angle(&Vector3::y(), angle, &v);
            assert_abs_diff_eq!(r * v, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn dcm_orthonormal_det_one() {
        let q = normalize(&Vector4::new(0.4, -0.3, 0.8, 0.1));
        let r = quaternion_to_dcm(&q).unwrap();
        assert_abs_diff_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-9);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dcm_rejects_zero_quaternion() {
        assert_eq!(
            quaternion_to_dcm(&Vector4::zeros()),
            Err(QuatError::ZeroQuaternion)
        );
    }

    #[test]
    fn omega_zero_rate_is_zero_matrix() {
        assert_eq!(omega_matrix(&Vector3::zeros()), Matrix4::zeros());
    }

    #[test]
    fn omega_is_skew_symmetric() {
        let w = Vector3::new(0.3, -1.1, 2.2);
        let om = omega_matrix(&w);
        assert_abs_diff_eq!(om + om.transpose(), Matrix4::zeros(), epsilon = 1e-15);
    }

    /// Fine-step integration oracle: RK4 on q̇ = ½Ω(ω)q keeps the norm to
    /// O(dt²) per step and the coarse/fine solutions agree.
    #[test]
    fn kinematics_preserves_norm_under_integration() {
        let w = Vector3::new(0.7, -0.4, 0.9);
        let om = omega_matrix(&w);
        let step = |q: &Vector4<f64>, dt: f64| -> Vector4<f64> {
            let f = |q: &Vector4<f64>| 0.5 * om * q;
            let k1 = f(q);
            let k2 = f(&(q + 0.5 * dt * k1));
            let k3 = f(&(q + 0.5 * dt * k2));
            let k4 = f(&(q + dt * k3));
            q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        };
        let mut q = euler_to_quaternion(0.0, 20.0, -10.0);
        let mut q_fine = q;
        for _ in 0..200 {
            q = step(&q, 5e-3);
        }
        for _ in 0..2000 {
            q_fine = step(&q_fine, 5e-4);
        }
        assert_abs_diff_eq!(q.norm(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q, q_fine, epsilon = 1e-8);
    }

    /// The kinematics sign convention must match the rotation matrix:
    /// Ṙ(q) = R(q)·[ω×] for body rates ω.
    #[test]
    fn kinematics_consistent_with_dcm_derivative() {
        let w = Vector3::new(0.31, -0.22, 0.57);
        let q = euler_to_quaternion(0.0, 25.0, -15.0);
        let dt = 1e-6;
        let qdot = 0.5 * omega_matrix(&w) * q;
        let q1 = normalize(&(q + dt * qdot));
        let numeric = (dcm_unchecked(&q1) - dcm_unchecked(&q)) / dt;
        let wx = Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0);
        let analytic = dcm_unchecked(&q) * wx;
        assert_abs_diff_eq!(numeric, analytic, epsilon = 1e-5);
    }
}
