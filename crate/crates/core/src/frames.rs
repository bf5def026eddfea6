//! Direction-of-motion frame `{D}` and the Y-X-Z Euler decomposition of the
//! rotation taking reference-frame `{R}` coordinates into it.
//!
//! `{R}` is centred on the shoulder with world axes (x forward, y up,
//! z lateral). `{D}` keeps the shoulder origin; its x-axis points at the
//! hand captured at the end of aiming and its x-y plane is the
//! shoulder-elbow-hand plane, so the reach reduces to a planar problem.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Length below which a vector is treated as zero.
pub const EPS_LEN: f64 = 1e-9;

/// Below this `|cos(beta)|` the Y-X-Z decomposition is gimbal locked.
pub const GIMBAL_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerYxz {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Set when `|cos(beta)| < GIMBAL_EPS`; `gamma` is then fixed to 0.
    pub gimbal_lock: bool,
}

impl EulerYxz {
    pub fn compose(&self) -> Matrix3<f64> {
        rot_y(self.alpha) * rot_x(self.beta) * rot_z(self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSet {
    pub x_d: Vec3,
    pub y_d: Vec3,
    pub z_d: Vec3,
    /// Maps `{R}` coordinates to `{D}` coordinates (rows are the `{D}` axes).
    pub rotation: Matrix3<f64>,
    pub euler: EulerYxz,
}

impl FrameSet {
    pub fn identity() -> Self {
        Self::from_rotation(Matrix3::identity())
    }

    /// Frame whose `{R}`->`{D}` rotation is `rotation`.
    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        let x_d = rotation.row(0).transpose();
        let y_d = rotation.row(1).transpose();
        let z_d = rotation.row(2).transpose();
        FrameSet { x_d, y_d, z_d, rotation, euler: decompose(&rotation) }
    }
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Build `{D}` from the hand position `p` and the shoulder-to-elbow vector
/// `r_se`, both in `{R}`.
///
/// `z_d` is flipped (together with `y_d`) when it would point against the
/// reference z-axis, so that left-arm or inverted-elbow poses keep the
/// same handedness and "up" as the usual right-arm pose.
pub fn build_direction_frame(p: &Vec3, r_se: &Vec3) -> Result<FrameSet> {
    let reach = p.norm();
    if !(reach > EPS_LEN) {
        return Err(Error::DegenerateGeometry(format!("hand at the shoulder (|p| = {reach:e})")));
    }
    let x_d = p / reach;
    let normal = r_se.cross(&x_d);
    let area = normal.norm();
    if !(area > EPS_LEN) {
        return Err(Error::DegenerateGeometry(format!(
            "elbow collinear with the reach line (|r_se x x_d| = {area:e})"
        )));
    }
    let mut z_d = normal / area;
    if z_d.z < 0.0 {
        z_d = -z_d;
    }
    let y_d = z_d.cross(&x_d);
    let rotation = Matrix3::from_rows(&[x_d.transpose(), y_d.transpose(), z_d.transpose()]);
    Ok(FrameSet { x_d, y_d, z_d, rotation, euler: decompose(&rotation) })
}

/// Decompose the frame rotation as `R_y(alpha) R_x(beta) R_z(gamma)`.
pub fn euler_yxz_decompose(f: &FrameSet) -> EulerYxz {
    decompose(&f.rotation)
}

fn decompose(m: &Matrix3<f64>) -> EulerYxz {
    // m = [[ca cg + sa sb sg, -ca sg + sa sb cg, sa cb],
    //      [cb sg,            cb cg,             -sb  ],
    //      [-sa cg + ca sb sg, sa sg + ca sb cg, ca cb]]
    let cos_beta = m[(1, 0)].hypot(m[(1, 1)]);
    let beta = (-m[(1, 2)]).atan2(cos_beta);
    if cos_beta < GIMBAL_EPS {
        // gamma = 0 leaves m = R_y(alpha) R_x(beta)
        let alpha = (-m[(2, 0)]).atan2(m[(0, 0)]);
        EulerYxz { alpha, beta, gamma: 0.0, gimbal_lock: true }
    } else {
        EulerYxz { alpha: m[(0, 2)].atan2(m[(2, 2)]), beta, gamma: m[(1, 0)].atan2(m[(1, 1)]), gimbal_lock: false }
    }
}

pub fn to_direction_frame(f: &FrameSet, v: &Vec3) -> Vec3 {
    f.rotation * v
}

pub fn from_direction_frame(f: &FrameSet, v: &Vec3) -> Vec3 {
    f.rotation.transpose() * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn assert_valid(f: &FrameSet) {
        let rtr = f.rotation.transpose() * f.rotation;
        assert!((rtr - Matrix3::identity()).abs().max() < 1e-9);
        assert!((f.rotation.determinant() - 1.0).abs() < 1e-9);
        assert!((f.rotation * f.x_d - Vec3::x()).norm() < 1e-9);
        assert!((f.x_d.cross(&f.y_d) - f.z_d).norm() < 1e-9);
    }

    #[test]
    fn reach_along_x_gives_identity() {
        let lu = 0.3;
        let r_se = Vec3::new((-FRAC_PI_2 / 2.0).cos(), (-FRAC_PI_2 / 2.0).sin(), 0.0) * lu;
        let f = build_direction_frame(&Vec3::new(1.0, 0.0, 0.0), &r_se).unwrap();
        assert_abs_diff_eq!(f.x_d, Vec3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.y_d, Vec3::y(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.z_d, Vec3::z(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.euler.alpha, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.euler.beta, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.euler.gamma, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_at_shoulder_is_degenerate() {
        let err = build_direction_frame(&Vec3::zeros(), &Vec3::new(0.0, -0.3, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn straight_arm_is_degenerate() {
        let err = build_direction_frame(&Vec3::new(0.6, 0.0, 0.0), &Vec3::new(0.3, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn inverted_elbow_keeps_z_up() {
        // elbow above the reach line would give z_d = -z_r
        let f = build_direction_frame(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.2, 0.2, 0.0)).unwrap();
        assert!(f.z_d.z > 0.0);
        assert_valid(&f);
    }

    #[test]
    fn identity_decomposes_to_zero() {
        let e = euler_yxz_decompose(&FrameSet::identity());
        assert_eq!((e.alpha, e.beta, e.gamma, e.gimbal_lock), (0.0, 0.0, 0.0, false));
    }

    #[test]
    fn pure_y_rotation() {
        let e = euler_yxz_decompose(&FrameSet::from_rotation(rot_y(30f64.to_radians())));
        assert_abs_diff_eq!(e.alpha, 30f64.to_radians(), epsilon = 1e-9);
        assert_abs_diff_eq!(e.beta, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.gamma, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gimbal_lock_is_flagged_and_recomposes() {
        let m = rot_y(0.4) * rot_x(FRAC_PI_2) * rot_z(0.3);
        let e = decompose(&m);
        assert!(e.gimbal_lock);
        assert_eq!(e.gamma, 0.0);
        assert!((e.compose() - m).norm() < 1e-6);
    }

    #[test]
    fn identity_transform_is_noop() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(to_direction_frame(&FrameSet::identity(), &v), v);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn random_frames_are_valid(p in vec3(), r_se in vec3()) {
            prop_assume!(p.norm() > 1e-3);
            prop_assume!(r_se.cross(&p.normalize()).norm() > 1e-3);
            let f = build_direction_frame(&p, &r_se).unwrap();
            assert_valid(&f);
            // S-E-H plane is the x_d-y_d plane
            prop_assert!(to_direction_frame(&f, &r_se).z.abs() < 1e-9);
            prop_assert!(to_direction_frame(&f, &p).z.abs() < 1e-9);
            prop_assert!((to_direction_frame(&f, &f.x_d) - Vec3::x()).norm() < 1e-9);
            prop_assert!((f.euler.compose() - f.rotation).norm() < 1e-6);
        }

        #[test]
        fn frame_is_scale_invariant(p in vec3(), r_se in vec3(), k in 0.01f64..100.0) {
            prop_assume!(p.norm() > 1e-3);
            prop_assume!(r_se.cross(&p.normalize()).norm() > 1e-3);
            let a = build_direction_frame(&p, &r_se).unwrap();
            let b = build_direction_frame(&(p * k), &r_se).unwrap();
            prop_assert!((a.rotation - b.rotation).abs().max() < 1e-9);
        }

        #[test]
        fn euler_round_trip(a in -PI..PI, b in -1.5f64..1.5, c in -PI..PI) {
            let m = rot_y(a) * rot_x(b) * rot_z(c);
            let e = decompose(&m);
            prop_assert!(!e.gimbal_lock);
            prop_assert!((e.compose() - m).norm() < 1e-6);
        }

        #[test]
        fn transform_preserves_norm(p in vec3(), r_se in vec3(), v in vec3()) {
            prop_assume!(p.norm() > 1e-3);
            prop_assume!(r_se.cross(&p.normalize()).norm() > 1e-3);
            let f = build_direction_frame(&p, &r_se).unwrap();
            prop_assert!((to_direction_frame(&f, &v).norm() - v.norm()).abs() < 1e-9);
            prop_assert!((from_direction_frame(&f, &to_direction_frame(&f, &v)) - v).norm() < 1e-9);
        }
    }
}
