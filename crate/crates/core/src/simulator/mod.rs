//! Pick-and-place reaching iterations with the prosthetic elbow in the loop.
//!
//! Each iteration runs a [`MotionScript`] from the rest pose at a fixed step
//! (90 Hz by default). The script drives the residual limb and trunk; the
//! interface integrates its elbow command with a semi-implicit Euler step
//! (the command for step `k -> k+1` sees the shoulder motion over that step).

mod batch;
pub mod script;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::controllers::{
    limit_to_range, ActivationSample, ArmPose, ControlInput, ControllerKind, ElbowController, SynergyParams,
};
use crate::frames::{FrameSet, Vec3};
use crate::kinematics::{place_arm, ArmConfig, ArmPlane, PlanarJointState};
use crate::{Error, Result};

pub use batch::{iteration_seed, run_batch, trajectory_file_name, BatchOutput, IterationFailure, Job};
pub use script::{min_jerk, plan_script, Dof, MotionScript, Phase, PlanContext, ScriptTiming};

/// Who moves the elbow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    /// Natural arm following its own script; the reference for path difference.
    AbleBodied,
    Prosthetic(ControllerKind),
}

impl Modality {
    pub fn label(&self) -> &'static str {
        match self {
            Modality::AbleBodied => "AB",
            Modality::Prosthetic(k) => k.label(),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("AB") {
            Ok(Modality::AbleBodied)
        } else {
            s.parse().map(Modality::Prosthetic)
        }
    }
}

impl Serialize for Modality {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Modality {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One row of the target table: position `(x_arm * l, y_height * h, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDef {
    pub name: String,
    pub x_arm: f64,
    pub y_height: f64,
    pub z: f64,
}

impl TargetDef {
    fn new(name: &str, x_arm: f64, y_height: f64, z: f64) -> Self {
        TargetDef { name: name.to_string(), x_arm, y_height, z }
    }
}

/// Name of the object start position in the target table.
pub const START: &str = "Start";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskSpec {
    /// Subject height `h` (m).
    pub subject_height: f64,
    /// Arm length `l` (m).
    pub arm_length: f64,
    pub iterations: usize,
    pub targets: Vec<TargetDef>,
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec {
            subject_height: 1.8,
            arm_length: 0.7,
            iterations: 10,
            targets: vec![
                TargetDef::new(START, 0.5, 0.5, 0.0),
                TargetDef::new("Close", 0.75, 0.65, 0.12),
                TargetDef::new("Mid", 1.0, 0.65, -0.12),
                TargetDef::new("Far", 1.5, 0.65, 0.0),
                TargetDef::new("High", 1.0, 0.9, 0.0),
            ],
        }
    }
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.subject_height > 0.0 && self.subject_height.is_finite()) {
            return Err(Error::Config(format!("subject_height must be > 0, got {}", self.subject_height)));
        }
        if !(self.arm_length > 0.0 && self.arm_length.is_finite()) {
            return Err(Error::Config(format!("arm_length must be > 0, got {}", self.arm_length)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        for (i, t) in self.targets.iter().enumerate() {
            if self.targets[..i].iter().any(|o| o.name == t.name) {
                return Err(Error::Config(format!("duplicate target name `{}`", t.name)));
            }
            if ![t.x_arm, t.y_height, t.z].iter().all(|v| v.is_finite()) {
                return Err(Error::Config(format!("target `{}` has non-finite coordinates", t.name)));
            }
        }
        if !self.targets.iter().any(|t| t.name == START) {
            return Err(Error::Config(format!("target table needs a `{START}` row")));
        }
        Ok(())
    }

    pub fn position(&self, name: &str) -> Result<Vec3> {
        self.targets
            .iter()
            .find(|t| t.name == name)
            .map(|t| Vec3::new(t.x_arm * self.arm_length, t.y_height * self.subject_height, t.z))
            .ok_or_else(|| Error::UnknownTarget(name.to_string()))
    }

    /// Reach targets (every row except the start position).
    pub fn reach_targets(&self) -> impl Iterator<Item = &str> {
        self.targets.iter().map(|t| t.name.as_str()).filter(|n| *n != START)
    }
}

/// Integration and termination settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSettings {
    pub rate_hz: f64,
    pub timeout_s: f64,
    /// Iteration ends once the hand is this close to the target...
    pub stop_radius: f64,
    /// ...and slower than this (m/s).
    pub stop_speed: f64,
    /// Script amplitude noise as a fraction of each phase range.
    pub jitter_sigma: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { rate_hz: 90.0, timeout_s: 10.0, stop_radius: 0.04, stop_speed: 0.01, jitter_sigma: 0.02 }
    }
}

impl SimSettings {
    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rate_hz", self.rate_hz),
            ("timeout_s", self.timeout_s),
            ("stop_radius", self.stop_radius),
            ("stop_speed", self.stop_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::Config(format!("jitter_sigma must be >= 0, got {}", self.jitter_sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleFlags {
    pub enabled: bool,
    pub singular: bool,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub hand: Vec3,
    /// Arm-plane joint angles and the rates applied over the following step.
    pub joint: PlanarJointState,
    /// Trunk (C7) marker.
    pub trunk: Vec3,
    pub shoulder: Vec3,
    pub flags: SampleFlags,
}

impl Sample {
    fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.joint.is_finite()
            && [self.hand, self.trunk, self.shoulder].iter().all(|v| v.iter().all(|c| c.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptyInput("trajectory has no samples"));
        }
        if let Some(k) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Config(format!("sample {k} is not finite")));
        }
        if let Some(k) = self.samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Config(format!("timestamps not increasing at sample {}", k + 1)));
        }
        Ok(())
    }

    pub fn hand_positions(&self) -> Vec<Vec3> {
        self.samples.iter().map(|s| s.hand).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationFlags {
    pub singularity_hit: bool,
    pub range_clamped: bool,
    pub timeout: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub trajectory: Trajectory,
    pub t_f: f64,
    pub terminal_error: f64,
    pub target: String,
    pub target_pos: Vec3,
    pub modality: Modality,
    pub iteration: usize,
    pub seed: u64,
    pub flags: IterationFlags,
    /// Frame captured when the task-space synergy was switched on.
    pub aim_frame: Option<FrameSet>,
    /// Largest out-of-plane fraction of the upper arm seen by the
    /// task-space synergy (0 when the residual limb stays in `{D}`).
    pub max_out_of_plane: f64,
}

/// Round to the 9 significant digits used in trajectory files, so that the
/// in-memory trajectory equals its re-ingested file bit for bit.
pub fn round_sig9(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// [`round_sig9`] that never leaves `[lo, hi]`: a value pinned at a limit
/// rounds toward the interior.
fn round_sig9_within(x: f64, lo: f64, hi: f64) -> f64 {
    let r = round_sig9(x);
    if r >= lo && r <= hi {
        return r;
    }
    let ulp9 = |v: f64| 10f64.powi(v.abs().log10().floor() as i32 - 8);
    if r < lo {
        round_sig9(r + ulp9(r))
    } else {
        round_sig9(r - ulp9(r))
    }
}

fn round_vec(v: Vec3) -> Vec3 {
    v.map(round_sig9)
}

/// Subject, interface and integration settings shared by every iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Simulation {
    pub arm: ArmConfig,
    pub task: TaskSpec,
    pub synergy: SynergyParams,
    pub activation: ActivationSample,
    pub settings: SimSettings,
    pub timing: ScriptTiming,
}

/// Trunk (C7) marker relative to the shoulder, in the world frame.
pub const C7_OFFSET: [f64; 3] = [-0.05, 0.05, -0.18];

impl Simulation {
    pub fn validate(&self) -> Result<()> {
        self.arm.validate()?;
        self.task.validate()?;
        self.synergy.validate()?;
        self.activation.validate()?;
        self.settings.validate()
    }

    /// Shoulder position that puts the hand on the start position with the
    /// upper arm hanging and the elbow at a right angle.
    pub fn rest_shoulder(&self) -> Result<Vec3> {
        let start = self.task.position(START)?;
        Ok(start - Vec3::new(self.arm.lower_len, -self.arm.upper_len, 0.0))
    }

    pub fn plan_context(&self) -> PlanContext<'_> {
        PlanContext {
            arm: &self.arm,
            synergy: &self.synergy,
            activation: &self.activation,
            timing: &self.timing,
            dt: self.settings.dt(),
        }
    }

    /// Default script for a target and modality.
    pub fn default_script(&self, target: &str, modality: Modality) -> Result<MotionScript> {
        let target_pos = self.task.position(target)?;
        plan_script(&self.plan_context(), self.rest_shoulder()?, target_pos, modality)
    }

    /// Run one iteration. The script is jittered with a generator seeded by
    /// `seed` before it is executed.
    pub fn run_iteration(
        &self,
        target: &str,
        modality: Modality,
        script: &MotionScript,
        seed: u64,
    ) -> Result<IterationResult> {
        let target_pos = self.task.position(target)?;
        script.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut script = script.jittered(self.settings.jitter_sigma, &mut rng);
        script.validate()?;

        let arm = &self.arm;
        let dt = self.settings.dt();
        let shoulder0 = self.rest_shoulder()?;
        let trunk_dir = script.trunk_direction();
        let c7_offset = Vec3::from(C7_OFFSET);

        let mut controller = match modality {
            Modality::Prosthetic(kind) => Some(ElbowController::new(kind, *arm, self.synergy, self.activation)),
            Modality::AbleBodied => None,
        };

        let pose_at = |script: &MotionScript, t: f64, q_e: f64| {
            let shoulder = shoulder0 + trunk_dir * script.value(Dof::Trunk, t);
            let plane = ArmPlane { azimuth: script.value(Dof::Azimuth, t) };
            let q_s = script.value(Dof::Shoulder, t);
            (q_s, place_arm(arm, shoulder, plane, q_s, q_e))
        };

        let mut toggles = script.toggles.clone();
        toggles.sort_by(f64::total_cmp);
        let mut next_toggle = 0;

        let mut q_e = arm.clamp_elbow(script.value(Dof::Elbow, 0.0));
        let mut samples = Vec::new();
        let mut flags = IterationFlags::default();
        let mut max_out_of_plane: f64 = 0.0;
        let mut prev_hand: Option<Vec3> = None;
        let mut corrections = 0;
        let max_steps = (self.settings.timeout_s / dt).round() as usize;

        for k in 0..=max_steps {
            let t = k as f64 * dt;
            let (_, pts) = pose_at(&script, t, q_e);
            let dist = (pts.hand - target_pos).norm();
            let speed = prev_hand.map_or(f64::INFINITY, |p| (pts.hand - p).norm() / dt);

            // settled short of the target once the script has played out:
            // switch the interface off and re-aim with shoulder and trunk
            if dist >= self.settings.stop_radius
                && speed < self.settings.stop_speed
                && t >= script.duration()
                && corrections < MAX_CORRECTIONS
            {
                if let Some(phases) = corrective_phases(arm, &script, shoulder0, t, q_e, target_pos) {
                    script.phases.extend(phases);
                    corrections += 1;
                    if let Some(c) = controller.as_mut().filter(|c| c.enabled()) {
                        c.toggle(&ArmPose { hand: pts.hand - pts.shoulder, upper_arm: pts.elbow - pts.shoulder })?;
                    }
                }
            }

            while next_toggle < toggles.len() && toggles[next_toggle] <= t + 1e-9 {
                if let Some(c) = controller.as_mut() {
                    c.toggle(&ArmPose { hand: pts.hand - pts.shoulder, upper_arm: pts.elbow - pts.shoulder })?;
                }
                next_toggle += 1;
            }

            let (q_s, _) = pose_at(&script, t, q_e);
            let (q_s_next, pts_next) = pose_at(&script, t + dt, q_e);
            let qdot_s = (q_s_next - q_s) / dt;
            let mut sample_flags = SampleFlags::default();
            let qdot_e = match controller.as_ref() {
                Some(c) => {
                    let upper_arm = pts.elbow - pts.shoulder;
                    let cmd = c.command(&ControlInput {
                        upper_arm,
                        upper_arm_next: pts_next.elbow - pts_next.shoulder,
                        dt,
                        qdot_s,
                        q_e,
                        a_flex: script.value(Dof::FlexActivation, t),
                        a_ext: script.value(Dof::ExtActivation, t),
                    });
                    if let (true, Some(frame)) = (c.enabled(), c.state.frame.as_ref()) {
                        let (_, off) = ElbowController::shoulder_in_frame(frame, &upper_arm);
                        max_out_of_plane = max_out_of_plane.max(off);
                    }
                    sample_flags = SampleFlags { enabled: c.enabled(), singular: cmd.singular, clamped: cmd.clamped };
                    cmd.velocity
                }
                None => {
                    let target_q = script.value(Dof::Elbow, t + dt);
                    let (rate, clamped) = limit_to_range(arm, q_e, (target_q - q_e) / dt, dt);
                    sample_flags.clamped = clamped;
                    rate
                }
            };
            flags.singularity_hit |= sample_flags.singular;
            flags.range_clamped |= sample_flags.clamped;

            samples.push(Sample {
                t: round_sig9(t),
                hand: round_vec(pts.hand),
                joint: PlanarJointState {
                    q_s: round_sig9(q_s),
                    q_e: round_sig9_within(q_e, arm.elbow_min, arm.elbow_max),
                    qdot_s: round_sig9(qdot_s),
                    qdot_e: round_sig9(qdot_e),
                },
                trunk: round_vec(pts.shoulder + c7_offset),
                shoulder: round_vec(pts.shoulder),
                flags: sample_flags,
            });

            if dist < self.settings.stop_radius && speed < self.settings.stop_speed {
                break;
            }
            if k == max_steps {
                flags.timeout = true;
                break;
            }
            prev_hand = Some(pts.hand);
            q_e = arm.clamp_elbow(q_e + qdot_e * dt);
        }

        let trajectory = Trajectory { dt: round_sig9(dt), samples };
        let last = trajectory.last();
        Ok(IterationResult {
            t_f: last.t,
            terminal_error: (last.hand - target_pos).norm(),
            target: target.to_string(),
            target_pos,
            modality,
            iteration: 0,
            seed,
            flags,
            aim_frame: controller.and_then(|c| c.state.frame),
            max_out_of_plane,
            trajectory,
        })
    }
}

/// Corrective movements allowed per iteration.
const MAX_CORRECTIONS: usize = 3;

/// Duration of a corrective movement (s).
const CORRECTION_S: f64 = 0.8;

/// Shoulder, azimuth and trunk phases starting at `t` that bring the hand
/// onto `target` with the elbow held at `q_e`. `None` when the target is out
/// of vertical reach at that elbow angle.
fn corrective_phases(
    arm: &ArmConfig,
    script: &MotionScript,
    shoulder0: Vec3,
    t: f64,
    q_e: f64,
    target: Vec3,
) -> Option<Vec<Phase>> {
    let reach = arm.reach(q_e);
    let rel = target - shoulder0;
    let vert = rel.y;
    if vert.abs() >= reach {
        return None;
    }
    let angle = (vert / reach).asin();
    let forward = reach * angle.cos();
    let u = script.trunk_direction();
    let rel_h = Vec3::new(rel.x, 0.0, rel.z);
    let along = rel_h.dot(&u);
    let disc = along * along - rel_h.norm_squared() + forward * forward;
    let d_now = script.value(Dof::Trunk, t);
    let trunk = if disc >= 0.0 {
        let r = disc.sqrt();
        // root nearest the current lean
        [along - r, along + r].into_iter().min_by(|a, b| (a - d_now).abs().total_cmp(&(b - d_now).abs()))?
    } else {
        along
    };
    let w = rel_h - u * trunk;
    let azimuth = (-w.z).atan2(w.x);
    let (lo, hi) = script::SHOULDER_RANGE;
    let shoulder = (angle - arm.hand_offset_angle(q_e)).clamp(lo, hi);
    let phase = |dof, to| Phase { dof, at: t, duration: CORRECTION_S, from: script.value(dof, t), to };
    Some(vec![phase(Dof::Shoulder, shoulder), phase(Dof::Azimuth, azimuth), phase(Dof::Trunk, trunk)])
}

/// Largest distance of the hand from the captured aim line (through the
/// shoulder along `x_d`) over the samples where the interface is enabled.
/// `None` when no frame was captured.
pub fn aim_line_deviation(result: &IterationResult) -> Option<f64> {
    let frame = result.aim_frame.as_ref()?;
    let x_d = frame.x_d;
    let dev = result
        .trajectory
        .samples
        .iter()
        .filter(|s| s.flags.enabled)
        .map(|s| {
            let rel = s.hand - s.shoulder;
            (rel - x_d * rel.dot(&x_d)).norm()
        })
        .fold(0.0, f64::max);
    Some(dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> Simulation {
        Simulation { settings: SimSettings { jitter_sigma: 0.0, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn default_table_positions() {
        let task = TaskSpec::default();
        let far = task.position("Far").unwrap();
        assert!((far - Vec3::new(1.05, 1.17, 0.0)).norm() < 1e-12);
        assert!(matches!(task.position("Nowhere"), Err(Error::UnknownTarget(_))));
        assert_eq!(task.reach_targets().collect::<Vec<_>>(), ["Close", "Mid", "Far", "High"]);
    }

    #[test]
    fn task_validation() {
        let mut task = TaskSpec { arm_length: 0.0, ..Default::default() };
        assert!(task.validate().is_err());
        task.arm_length = 0.7;
        task.targets.push(TargetDef::new("Far", 1.0, 1.0, 0.0));
        assert!(task.validate().is_err());
    }

    #[test]
    fn rest_pose_puts_hand_on_start() {
        let sim = quiet();
        let shoulder = sim.rest_shoulder().unwrap();
        let pts = place_arm(&sim.arm, shoulder, ArmPlane { azimuth: 0.0 }, script::REST_SHOULDER, script::REST_ELBOW);
        assert!((pts.hand - sim.task.position(START).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn disabled_interface_keeps_elbow_fixed() {
        let sim = quiet();
        let mut script = sim.default_script("Far", Modality::Prosthetic(ControllerKind::Js)).unwrap();
        script.toggles.clear();
        let r = sim.run_iteration("Far", Modality::Prosthetic(ControllerKind::Js), &script, 0).unwrap();
        let q0 = r.trajectory.samples[0].joint.q_e;
        assert!(r.trajectory.samples.iter().all(|s| s.joint.q_e == q0 && !s.flags.enabled));
    }

    #[test]
    fn short_reach_is_corrected_with_interface_off() {
        let sim = quiet();
        let ts = Modality::Prosthetic(ControllerKind::Ts);
        let mut script = sim.default_script("Far", ts).unwrap();
        for p in script.phases.iter_mut().filter(|p| p.dof == Dof::Trunk) {
            p.to *= 0.7;
        }
        let r = sim.run_iteration("Far", ts, &script, 0).unwrap();
        assert!(!r.flags.timeout);
        assert!(r.terminal_error < sim.settings.stop_radius);
        assert!(r.t_f > script.duration());
        assert!(!r.trajectory.last().flags.enabled);
    }

    #[test]
    fn every_modality_reaches_every_target() {
        let sim = quiet();
        let modalities = [
            Modality::AbleBodied,
            Modality::Prosthetic(ControllerKind::Ts),
            Modality::Prosthetic(ControllerKind::Js),
            Modality::Prosthetic(ControllerKind::Ep),
        ];
        for target in ["Close", "Mid", "Far", "High"] {
            for m in modalities {
                let script = sim.default_script(target, m).unwrap();
                let r = sim.run_iteration(target, m, &script, 0).unwrap();
                assert!(!r.flags.timeout, "{m} {target} timed out, error {}", r.terminal_error);
                assert!(r.terminal_error < 0.01, "{m} {target}: {}", r.terminal_error);
                assert!(!r.flags.singularity_hit);
            }
        }
    }

    #[test]
    fn samples_are_uniform_and_in_range() {
        let sim = Simulation::default();
        let m = Modality::Prosthetic(ControllerKind::Ts);
        let r = sim.run_iteration("High", m, &sim.default_script("High", m).unwrap(), 3).unwrap();
        r.trajectory.validate().unwrap();
        for (k, s) in r.trajectory.samples.iter().enumerate() {
            assert_eq!(s.t, round_sig9(k as f64 * sim.settings.dt()));
            assert!(s.joint.q_e >= sim.arm.elbow_min && s.joint.q_e <= sim.arm.elbow_max);
        }
        assert_eq!(r.t_f, r.trajectory.last().t);
    }

    #[test]
    fn rounding_stays_inside_limits() {
        let arm = ArmConfig::default();
        for x in [arm.elbow_min, arm.elbow_max] {
            let r = round_sig9_within(x, arm.elbow_min, arm.elbow_max);
            assert!(r >= arm.elbow_min && r <= arm.elbow_max);
            assert_eq!(round_sig9(r), r);
        }
    }

    #[test]
    fn modality_labels_round_trip() {
        for m in ["AB", "TS", "JS", "EP"] {
            assert_eq!(m.parse::<Modality>().unwrap().label(), m);
        }
        assert!("XX".parse::<Modality>().is_err());
    }
}
