//! Prosthetic elbow interfaces.
//!
//! All three map residual-limb motion (and, for proportional activation, a
//! two-channel activation signal) to a commanded elbow angular velocity in
//! the flexion-positive convention of [`crate::kinematics`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::frames::{build_direction_frame, to_direction_frame, FrameSet, Vec3};
use crate::kinematics::{ArmConfig, PlanarJointState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControllerKind {
    /// Task-space synergy.
    #[serde(rename = "TS")]
    Ts,
    /// Joint-space synergy.
    #[serde(rename = "JS")]
    Js,
    /// Dual-site proportional activation.
    #[serde(rename = "EP")]
    Ep,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::Ts, ControllerKind::Js, ControllerKind::Ep];

    pub fn label(&self) -> &'static str {
        match self {
            ControllerKind::Ts => "TS",
            ControllerKind::Js => "JS",
            ControllerKind::Ep => "EP",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TS" => Ok(ControllerKind::Ts),
            "JS" => Ok(ControllerKind::Js),
            "EP" => Ok(ControllerKind::Ep),
            _ => Err(Error::Config(format!("unknown controller `{s}` (expected TS, JS or EP)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynergyParams {
    /// Joint-space synergy gain.
    pub theta: f64,
    /// Guard on `|cos(q_s + q_e)|` in the task-space law.
    pub epsilon_cse: f64,
    /// Command saturation (rad/s), shared by all interfaces.
    pub qdot_max: f64,
}

impl Default for SynergyParams {
    fn default() -> Self {
        SynergyParams { theta: 1.0, epsilon_cse: 1e-3, qdot_max: 4.0 }
    }
}

impl SynergyParams {
    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(Error::Config(format!("theta must be finite, got {}", self.theta)));
        }
        if !(self.epsilon_cse > 0.0) {
            return Err(Error::Config(format!("epsilon_cse must be > 0, got {}", self.epsilon_cse)));
        }
        if !(self.qdot_max > 0.0 && self.qdot_max.is_finite()) {
            return Err(Error::Config(format!("qdot_max must be > 0, got {}", self.qdot_max)));
        }
        Ok(())
    }
}

/// Two rectified activation channels in `[0, 1]` with threshold and gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivationSample {
    pub a_flex: f64,
    pub a_ext: f64,
    pub threshold: f64,
    /// rad/s per unit of rescaled activation.
    pub gain: f64,
}

impl Default for ActivationSample {
    fn default() -> Self {
        ActivationSample { a_flex: 0.0, a_ext: 0.0, threshold: 0.1, gain: 2.0 }
    }
}

impl ActivationSample {
    pub fn with_levels(&self, a_flex: f64, a_ext: f64) -> Self {
        ActivationSample { a_flex, a_ext, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("activation threshold must be in [0, 1), got {}", self.threshold)));
        }
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::Config(format!("activation gain must be >= 0, got {}", self.gain)));
        }
        for a in [self.a_flex, self.a_ext] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("activation must be in [0, 1], got {a}")));
            }
        }
        Ok(())
    }

    /// Rescaled activation above threshold, in `[0, 1]`.
    pub fn rescale(&self, a: f64) -> f64 {
        (a - self.threshold).max(0.0) / (1.0 - self.threshold)
    }
}

/// Commanded elbow velocity plus the conditions met while producing it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    pub velocity: f64,
    /// Task-space guard tripped; velocity forced to zero.
    pub singular: bool,
    /// Elbow range limit reached; velocity reduced to stay inside it.
    pub clamped: bool,
}

impl Command {
    fn free(velocity: f64) -> Self {
        Command { velocity, ..Default::default() }
    }
}

fn saturate(v: f64, qdot_max: f64) -> f64 {
    v.clamp(-qdot_max, qdot_max)
}

/// Task-space synergy rate without guard or saturation: the elbow velocity
/// that keeps the hand velocity along the `{D}` x-axis.
pub fn ts_synergy_rate(cfg: &ArmConfig, q_s: f64, q_e: f64, qdot_s: f64) -> f64 {
    let c_s = q_s.cos();
    let c_se = (q_s + q_e).cos();
    -(cfg.upper_len * c_s + cfg.lower_len * c_se) / (cfg.lower_len * c_se) * qdot_s
}

/// Guarded, saturated task-space synergy command. `st` holds `{D}` angles.
pub fn ts_elbow_velocity(cfg: &ArmConfig, st: &PlanarJointState, p: &SynergyParams) -> Command {
    if (st.q_s + st.q_e).cos().abs() < p.epsilon_cse {
        return Command { velocity: 0.0, singular: true, clamped: false };
    }
    Command::free(saturate(ts_synergy_rate(cfg, st.q_s, st.q_e, st.qdot_s), p.qdot_max))
}

/// Joint-space synergy: elbow extension rate proportional to the shoulder
/// flexion rate.
pub fn js_elbow_velocity(p: &SynergyParams, qdot_s: f64) -> f64 {
    saturate(p.theta * qdot_s, p.qdot_max)
}

/// Differential thresholded activation; flexion positive.
pub fn ep_elbow_velocity(a: &ActivationSample, qdot_max: f64) -> f64 {
    let d = a.rescale(a.a_flex) - a.rescale(a.a_ext);
    saturate(a.gain * d, qdot_max)
}

/// Reduce `rate` so that one step of length `dt` keeps `q_e` inside the
/// elbow range.
pub fn limit_to_range(cfg: &ArmConfig, q_e: f64, rate: f64, dt: f64) -> (f64, bool) {
    let next = q_e + rate * dt;
    if next > cfg.elbow_max {
        ((cfg.elbow_max - q_e) / dt, true)
    } else if next < cfg.elbow_min {
        ((cfg.elbow_min - q_e) / dt, true)
    } else {
        (rate, false)
    }
}

/// Toggle state. The task-space frame is captured when the interface is
/// switched on and retained when it is switched off.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    pub enabled: bool,
    pub frame: Option<FrameSet>,
}

/// Current residual-limb pose relative to the shoulder, in `{R}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPose {
    pub hand: Vec3,
    pub upper_arm: Vec3,
}

pub fn toggle(cs: &ControllerState, kind: ControllerKind, pose: &ArmPose) -> Result<ControllerState> {
    if cs.enabled {
        return Ok(ControllerState { enabled: false, frame: cs.frame });
    }
    let frame = match kind {
        ControllerKind::Ts => Some(build_direction_frame(&pose.hand, &pose.upper_arm)?),
        _ => cs.frame,
    };
    Ok(ControllerState { enabled: true, frame })
}

/// Measurements available to the interface during one control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    /// Shoulder-to-elbow vector now and one step ahead, in `{R}`.
    pub upper_arm: Vec3,
    pub upper_arm_next: Vec3,
    pub dt: f64,
    /// Shoulder flexion rate in the arm plane.
    pub qdot_s: f64,
    /// Current prosthetic elbow angle.
    pub q_e: f64,
    pub a_flex: f64,
    pub a_ext: f64,
}

/// A configured interface with its toggle state.
#[derive(Debug, Clone, PartialEq)]
pub struct ElbowController {
    pub kind: ControllerKind,
    pub arm: ArmConfig,
    pub synergy: SynergyParams,
    pub activation: ActivationSample,
    pub state: ControllerState,
}

impl ElbowController {
    pub fn new(kind: ControllerKind, arm: ArmConfig, synergy: SynergyParams, activation: ActivationSample) -> Self {
        ElbowController { kind, arm, synergy, activation, state: ControllerState::default() }
    }

    pub fn enabled(&self) -> bool {
        self.state.enabled
    }

    /// Flip the enable state; on failure the previous state is kept.
    pub fn toggle(&mut self, pose: &ArmPose) -> Result<()> {
        self.state = toggle(&self.state, self.kind, pose)?;
        Ok(())
    }

    /// Shoulder angle in `{D}` and the out-of-plane fraction of the upper arm.
    pub fn shoulder_in_frame(frame: &FrameSet, upper_arm: &Vec3) -> (f64, f64) {
        let u = to_direction_frame(frame, upper_arm);
        (u.y.atan2(u.x), u.z.abs() / u.norm().max(f64::MIN_POSITIVE))
    }

    /// Elbow command for this step, range-limited for a step of `input.dt`.
    pub fn command(&self, input: &ControlInput) -> Command {
        if !self.state.enabled {
            return Command::default();
        }
        let mut cmd = match self.kind {
            ControllerKind::Ts => match &self.state.frame {
                Some(frame) => {
                    let (qs, _) = Self::shoulder_in_frame(frame, &input.upper_arm);
                    let (qs_next, _) = Self::shoulder_in_frame(frame, &input.upper_arm_next);
                    let st = PlanarJointState::new(qs, input.q_e, wrap_angle(qs_next - qs) / input.dt, 0.0);
                    ts_elbow_velocity(&self.arm, &st, &self.synergy)
                }
                None => Command::default(),
            },
            // the synergy maps shoulder flexion onto elbow extension
            ControllerKind::Js => Command::free(-js_elbow_velocity(&self.synergy, input.qdot_s)),
            ControllerKind::Ep => Command::free(ep_elbow_velocity(
                &self.activation.with_levels(input.a_flex, input.a_ext),
                self.synergy.qdot_max,
            )),
        };
        let (rate, clamped) = limit_to_range(&self.arm, input.q_e, cmd.velocity, input.dt);
        cmd.velocity = rate;
        cmd.clamped = clamped;
        if let (ControllerKind::Ts, Some(frame), false) = (self.kind, &self.state.frame, cmd.singular) {
            // a saturated step can jump clean over the guard band, so also
            // refuse a step that would reach or cross the singularity
            let (qs, _) = Self::shoulder_in_frame(frame, &input.upper_arm);
            let (qs_next, _) = Self::shoulder_in_frame(frame, &input.upper_arm_next);
            let now = (qs + input.q_e).cos();
            let next = (qs_next + input.q_e + rate * input.dt).cos();
            if now * next <= 0.0 || next.abs() < self.synergy.epsilon_cse {
                return Command { velocity: 0.0, singular: true, clamped: false };
            }
        }
        cmd
    }
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    (a + PI).rem_euclid(TAU) - PI
}
