//! Planar two-link model of the residual limb plus prosthetic forearm.
//!
//! Angles follow one convention everywhere: `q_s` is measured from the
//! x-axis of the working plane to the upper arm, `q_e` is the interior
//! elbow flexion measured from the upper-arm line, both counterclockwise
//! positive. With that convention the Jacobian below holds verbatim.

use serde::{Deserialize, Serialize};

use crate::frames::Vec3;
use crate::{Error, Result};

/// Link lengths and prosthetic elbow range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    /// Shoulder to elbow (m).
    pub upper_len: f64,
    /// Elbow to hand (m).
    pub lower_len: f64,
    /// Lower elbow limit (rad). Keeps the arm away from full extension.
    pub elbow_min: f64,
    /// Upper elbow limit (rad).
    pub elbow_max: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        ArmConfig { upper_len: 0.33, lower_len: 0.37, elbow_min: 5f64.to_radians(), elbow_max: 140f64.to_radians() }
    }
}

impl ArmConfig {
    pub fn new(upper_len: f64, lower_len: f64) -> Result<Self> {
        let cfg = ArmConfig { upper_len, lower_len, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.upper_len > 0.0 && self.upper_len.is_finite()) {
            return Err(Error::Config(format!("upper_len must be > 0, got {}", self.upper_len)));
        }
        if !(self.lower_len > 0.0 && self.lower_len.is_finite()) {
            return Err(Error::Config(format!("lower_len must be > 0, got {}", self.lower_len)));
        }
        if !(0.0 < self.elbow_min && self.elbow_min < self.elbow_max && self.elbow_max < std::f64::consts::PI) {
            return Err(Error::Config(format!(
                "elbow range must satisfy 0 < min < max < pi, got [{}, {}] rad",
                self.elbow_min, self.elbow_max
            )));
        }
        Ok(())
    }

    /// Total arm length.
    pub fn length(&self) -> f64 {
        self.upper_len + self.lower_len
    }

    /// Shoulder-to-hand distance for a given elbow angle.
    pub fn reach(&self, q_e: f64) -> f64 {
        let (lu, ll) = (self.upper_len, self.lower_len);
        (lu * lu + ll * ll + 2.0 * lu * ll * q_e.cos()).max(0.0).sqrt()
    }

    /// Elbow angle (in `[0, pi]`) that puts the hand `dist` from the shoulder.
    /// Distances outside the workspace are clamped to its boundary.
    pub fn elbow_for_reach(&self, dist: f64) -> f64 {
        let (lu, ll) = (self.upper_len, self.lower_len);
        let c = (dist * dist - lu * lu - ll * ll) / (2.0 * lu * ll);
        c.clamp(-1.0, 1.0).acos()
    }

    /// Angle between the upper arm and the shoulder-hand line.
    pub fn hand_offset_angle(&self, q_e: f64) -> f64 {
        (self.lower_len * q_e.sin()).atan2(self.upper_len + self.lower_len * q_e.cos())
    }

    pub fn clamp_elbow(&self, q_e: f64) -> f64 {
        q_e.clamp(self.elbow_min, self.elbow_max)
    }
}

/// Shoulder/elbow angles and rates in the working plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarJointState {
    pub q_s: f64,
    pub q_e: f64,
    pub qdot_s: f64,
    pub qdot_e: f64,
}

impl PlanarJointState {
    pub fn new(q_s: f64, q_e: f64, qdot_s: f64, qdot_e: f64) -> Self {
        PlanarJointState { q_s, q_e, qdot_s, qdot_e }
    }

    pub fn is_finite(&self) -> bool {
        self.q_s.is_finite() && self.q_e.is_finite() && self.qdot_s.is_finite() && self.qdot_e.is_finite()
    }

    pub fn hand(&self, cfg: &ArmConfig) -> PlanarHandState {
        let (x, y) = forward_kinematics(cfg, self.q_s, self.q_e);
        let (xdot, ydot) = hand_velocity(&jacobian(cfg, self.q_s, self.q_e), self.qdot_s, self.qdot_e);
        PlanarHandState { x, y, xdot, ydot }
    }
}

/// Hand position and velocity in the working plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarHandState {
    pub x: f64,
    pub y: f64,
    pub xdot: f64,
    pub ydot: f64,
}

/// Dense row-major 2x2 Jacobian mapping `(qdot_s, qdot_e)` to hand velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2x2(pub [[f64; 2]; 2]);

impl Jacobian2x2 {
    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

pub fn forward_kinematics(cfg: &ArmConfig, q_s: f64, q_e: f64) -> (f64, f64) {
    let (lu, ll) = (cfg.upper_len, cfg.lower_len);
    let se = q_s + q_e;
    (lu * q_s.cos() + ll * se.cos(), lu * q_s.sin() + ll * se.sin())
}

pub fn jacobian(cfg: &ArmConfig, q_s: f64, q_e: f64) -> Jacobian2x2 {
    let (lu, ll) = (cfg.upper_len, cfg.lower_len);
    let (s_s, c_s) = q_s.sin_cos();
    let (s_se, c_se) = (q_s + q_e).sin_cos();
    Jacobian2x2([[-lu * s_s - ll * s_se, -ll * s_se], [lu * c_s + ll * c_se, ll * c_se]])
}

pub fn hand_velocity(j: &Jacobian2x2, qdot_s: f64, qdot_e: f64) -> (f64, f64) {
    let [xdot, ydot] = j.apply([qdot_s, qdot_e]);
    (xdot, ydot)
}

/// Orientation of the vertical plane the arm moves in.
///
/// World axes: x forward, y up, z lateral. The plane contains the world
/// y-axis and is rotated by `azimuth` about it; its in-plane x-axis is
/// horizontal and its normal completes a right-handed triad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPlane {
    pub azimuth: f64,
}

impl ArmPlane {
    pub fn x_axis(&self) -> Vec3 {
        let (s, c) = self.azimuth.sin_cos();
        Vec3::new(c, 0.0, -s)
    }

    pub fn y_axis(&self) -> Vec3 {
        Vec3::new(0.0, 1.0, 0.0)
    }

    pub fn normal(&self) -> Vec3 {
        self.x_axis().cross(&self.y_axis())
    }

    pub fn lift(&self, x: f64, y: f64) -> Vec3 {
        self.x_axis() * x + self.y_axis() * y
    }

    /// In-plane coordinates of a world-frame vector (out-of-plane part dropped).
    pub fn project(&self, v: &Vec3) -> (f64, f64) {
        (v.dot(&self.x_axis()), v.dot(&self.y_axis()))
    }
}

/// Elbow and hand positions of the 3D shoulder-centred chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPoints {
    pub shoulder: Vec3,
    pub elbow: Vec3,
    pub hand: Vec3,
}

pub fn place_arm(cfg: &ArmConfig, shoulder: Vec3, plane: ArmPlane, q_s: f64, q_e: f64) -> ArmPoints {
    let elbow = shoulder + plane.lift(cfg.upper_len * q_s.cos(), cfg.upper_len * q_s.sin());
    let (hx, hy) = forward_kinematics(cfg, q_s, q_e);
    ArmPoints { shoulder, elbow, hand: shoulder + plane.lift(hx, hy) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit() -> ArmConfig {
        ArmConfig { upper_len: 1.0, lower_len: 1.0, ..Default::default() }
    }

    #[test]
    fn fk_trivial_poses() {
        let (x, y) = forward_kinematics(&unit(), 0.0, 0.0);
        assert_abs_diff_eq!(x, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-15);
        let (x, y) = forward_kinematics(&unit(), 0.0, FRAC_PI_2);
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fk_matches_scalar_formula() {
        let cfg = ArmConfig { upper_len: 0.3, lower_len: 0.35, ..Default::default() };
        // 0.3*cos(0.4) + 0.35*cos(1.3), 0.3*sin(0.4) + 0.35*sin(1.3)
        let ex = 0.3 * 0.921_060_994_002_885_1 + 0.35 * 0.267_498_828_624_587_4;
        let ey = 0.3 * 0.389_418_342_308_650_5 + 0.35 * 0.963_558_185_417_192_9;
        let (x, y) = forward_kinematics(&cfg, 0.4, 0.9);
        assert_abs_diff_eq!(x, ex, epsilon = 1e-15);
        assert_abs_diff_eq!(y, ey, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_trivial_poses() {
        assert_eq!(jacobian(&unit(), 0.0, 0.0).0, [[-0.0, -0.0], [2.0, 1.0]]);
        let j = jacobian(&unit(), FRAC_PI_2, 0.0).0;
        assert_abs_diff_eq!(j[0][0], -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[0][1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1][0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1][1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_velocity_reads_matrix() {
        let j = jacobian(&unit(), 0.0, 0.0);
        assert_eq!(hand_velocity(&j, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(hand_velocity(&j, 1.0, 0.0), (0.0, 2.0));
    }

    #[test]
    fn reach_and_inverse_agree() {
        let cfg = ArmConfig::default();
        for deg in [5.0f64, 30.0, 90.0, 140.0] {
            let q = deg.to_radians();
            assert_abs_diff_eq!(cfg.elbow_for_reach(cfg.reach(q)), q, epsilon = 1e-9);
        }
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(ArmConfig::new(0.0, 0.3).is_err());
        assert!(ArmConfig::new(0.3, -1.0).is_err());
        let bad = ArmConfig { elbow_min: 1.0, elbow_max: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn placed_arm_has_link_lengths() {
        let cfg = ArmConfig { upper_len: 0.3, lower_len: 0.4, ..Default::default() };
        let p = place_arm(&cfg, Vec3::new(0.1, 1.2, 0.0), ArmPlane { azimuth: 0.3 }, -1.0, 1.2);
        assert_abs_diff_eq!((p.elbow - p.shoulder).norm(), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!((p.hand - p.elbow).norm(), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!((p.hand - p.shoulder).norm(), cfg.reach(1.2), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            lu in 0.1f64..1.0, ll in 0.1f64..1.0,
            qs in -PI..PI, qe in -PI..PI,
        ) {
            let cfg = ArmConfig { upper_len: lu, lower_len: ll, ..Default::default() };
            let h = 1e-6;
            let j = jacobian(&cfg, qs, qe).0;
            let fd = |ds: f64, de: f64| {
                let (xp, yp) = forward_kinematics(&cfg, qs + ds, qe + de);
                let (xm, ym) = forward_kinematics(&cfg, qs - ds, qe - de);
                [(xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h)]
            };
            let col_s = fd(h, 0.0);
            let col_e = fd(0.0, h);
            let scale = lu + ll;
            for r in 0..2 {
                prop_assert!((j[r][0] - col_s[r]).abs() / scale < 1e-6);
                prop_assert!((j[r][1] - col_e[r]).abs() / scale < 1e-6);
            }
        }

        #[test]
        fn determinant_identity(lu in 0.05f64..2.0, ll in 0.05f64..2.0, qs in -PI..PI, qe in -PI..PI) {
            let cfg = ArmConfig { upper_len: lu, lower_len: ll, ..Default::default() };
            let det = jacobian(&cfg, qs, qe).det();
            prop_assert!((det - lu * ll * qe.sin()).abs() < 1e-12);
        }

        #[test]
        fn hand_within_reach(lu in 0.05f64..2.0, ll in 0.05f64..2.0, qs in -10.0f64..10.0, qe in -10.0f64..10.0) {
            let cfg = ArmConfig { upper_len: lu, lower_len: ll, ..Default::default() };
            let (x, y) = forward_kinematics(&cfg, qs, qe);
            prop_assert!(x.hypot(y) <= lu + ll + 1e-12);
        }

        #[test]
        fn hand_velocity_matches_trajectory_derivative(
            qs in -PI..PI, qe in 0.1f64..3.0, ws in -2.0f64..2.0, we in -2.0f64..2.0,
        ) {
            let cfg = ArmConfig { upper_len: 0.33, lower_len: 0.37, ..Default::default() };
            let (vx, vy) = hand_velocity(&jacobian(&cfg, qs, qe), ws, we);
            let h = 1e-6;
            let (xp, yp) = forward_kinematics(&cfg, qs + ws * h, qe + we * h);
            let (xm, ym) = forward_kinematics(&cfg, qs - ws * h, qe - we * h);
            prop_assert!((vx - (xp - xm) / (2.0 * h)).abs() < 1e-7);
            prop_assert!((vy - (yp - ym) / (2.0 * h)).abs() < 1e-7);
        }
    }
}
