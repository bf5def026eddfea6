//! Scripted stand-in for the subject: minimum-jerk profiles on the
//! residual-limb, trunk and activation degrees of freedom, plus the times at
//! which the prosthetic interface is toggled.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::controllers::{ActivationSample, ControllerKind, SynergyParams};
use crate::frames::Vec3;
use crate::kinematics::ArmConfig;
use crate::simulator::Modality;
use crate::{Error, Result};

/// Shoulder flexion angle allowed in scripts (rad).
pub const SHOULDER_RANGE: (f64, f64) = (-FRAC_PI_2, std::f64::consts::PI);

/// Resting pose: upper arm hanging down, elbow at a right angle.
pub const REST_SHOULDER: f64 = -FRAC_PI_2;
pub const REST_ELBOW: f64 = FRAC_PI_2;

/// Smallest elbow angle the planner aims for, away from the lower limit.
pub const PLAN_ELBOW_MIN_DEG: f64 = 15.0;

pub fn min_jerk(start: f64, end: f64, duration: f64, t: f64) -> f64 {
    let tau = t / duration;
    if tau >= 1.0 {
        return end;
    }
    if tau <= 0.0 {
        return start;
    }
    let tau3 = tau * tau * tau;
    start + (end - start) * tau3 * (10.0 - 15.0 * tau + 6.0 * tau * tau)
}

/// Time derivative of [`min_jerk`].
pub fn min_jerk_rate(start: f64, end: f64, duration: f64, t: f64) -> f64 {
    let tau = (t / duration).clamp(0.0, 1.0);
    let s = tau * (1.0 - tau);
    (end - start) * 30.0 * s * s / duration
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dof {
    /// In-plane shoulder flexion (rad).
    Shoulder,
    /// Natural elbow (rad); only driven for able-bodied runs.
    Elbow,
    /// Heading of the arm plane about the vertical (rad).
    Azimuth,
    /// Forward trunk translation along the script heading (m).
    Trunk,
    FlexActivation,
    ExtActivation,
}

impl Dof {
    pub const ALL: [Dof; 6] =
        [Dof::Shoulder, Dof::Elbow, Dof::Azimuth, Dof::Trunk, Dof::FlexActivation, Dof::ExtActivation];

    fn rest(&self) -> f64 {
        match self {
            Dof::Shoulder => REST_SHOULDER,
            Dof::Elbow => REST_ELBOW,
            _ => 0.0,
        }
    }

    fn is_activation(&self) -> bool {
        matches!(self, Dof::FlexActivation | Dof::ExtActivation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub dof: Dof,
    /// Start time (s).
    pub at: f64,
    pub duration: f64,
    pub from: f64,
    pub to: f64,
}

impl Phase {
    pub fn end(&self) -> f64 {
        self.at + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionScript {
    /// Direction of trunk translation about the vertical (rad, same sense
    /// as the arm-plane azimuth).
    pub trunk_heading: f64,
    pub phases: Vec<Phase>,
    /// Times at which the interface toggle is pressed.
    #[serde(default)]
    pub toggles: Vec<f64>,
}

impl MotionScript {
    pub fn validate(&self) -> Result<()> {
        if !self.trunk_heading.is_finite() {
            return Err(Error::Script("trunk heading must be finite".into()));
        }
        for p in &self.phases {
            if !(p.duration > 0.0 && p.duration.is_finite()) {
                return Err(Error::Script(format!("{:?} phase at {} s has duration {}", p.dof, p.at, p.duration)));
            }
            if !(p.at >= 0.0 && p.from.is_finite() && p.to.is_finite()) {
                return Err(Error::Script(format!("{:?} phase at {} s is not finite", p.dof, p.at)));
            }
            if p.dof == Dof::Shoulder {
                let (lo, hi) = SHOULDER_RANGE;
                for v in [p.from, p.to] {
                    if !(lo - 1e-9..=hi).contains(&v) {
                        return Err(Error::Script(format!("shoulder angle {v} rad outside [{lo}, {hi}]")));
                    }
                }
            }
            if p.dof.is_activation() && (p.from.min(p.to) < 0.0 || p.from.max(p.to) > 1.0) {
                return Err(Error::Script(format!("activation outside [0, 1] at {} s", p.at)));
            }
        }
        for dof in Dof::ALL {
            let phases = self.phases_of(dof);
            for w in phases.windows(2) {
                if w[1].at < w[0].end() - 1e-12 {
                    return Err(Error::Script(format!("{dof:?} phases overlap at {} s", w[1].at)));
                }
                if (w[1].from - w[0].to).abs() > 1e-9 {
                    return Err(Error::Script(format!(
                        "{dof:?} jumps from {} to {} at {} s",
                        w[0].to, w[1].from, w[1].at
                    )));
                }
            }
        }
        if self.toggles.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Script("toggle times must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn phases_of(&self, dof: Dof) -> Vec<Phase> {
        let mut v: Vec<Phase> = self.phases.iter().filter(|p| p.dof == dof).copied().collect();
        v.sort_by(|a, b| a.at.total_cmp(&b.at));
        v
    }

    pub fn value(&self, dof: Dof, t: f64) -> f64 {
        let mut current: Option<&Phase> = None;
        for p in self.phases.iter().filter(|p| p.dof == dof) {
            if p.at <= t && current.is_none_or(|c| p.at >= c.at) {
                current = Some(p);
            }
        }
        match current {
            Some(p) => min_jerk(p.from, p.to, p.duration, t - p.at),
            None => self
                .phases
                .iter()
                .filter(|p| p.dof == dof)
                .min_by(|a, b| a.at.total_cmp(&b.at))
                .map_or(dof.rest(), |p| p.from),
        }
    }

    /// Time at which the last phase ends.
    pub fn duration(&self) -> f64 {
        self.phases.iter().map(Phase::end).fold(0.0, f64::max)
    }

    pub fn trunk_direction(&self) -> Vec3 {
        let (s, c) = self.trunk_heading.sin_cos();
        Vec3::new(c, 0.0, -s)
    }

    /// Perturb every phase end value by `sigma` times the phase range
    /// (standard normal draws), keeping each DOF continuous.
    pub fn jittered<R: Rng>(&self, sigma: f64, rng: &mut R) -> MotionScript {
        let mut out = self.clone();
        if sigma == 0.0 {
            return out;
        }
        let mut order: Vec<usize> = (0..out.phases.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&out.phases[a], &out.phases[b]);
            pa.dof.cmp(&pb.dof).then(pa.at.total_cmp(&pb.at))
        });
        let mut carry: Option<(Dof, f64, f64)> = None;
        for idx in order {
            let p = &mut out.phases[idx];
            let z: f64 = rng.sample(StandardNormal);
            let range = (p.to - p.from).abs();
            if let Some((dof, old_to, new_to)) = carry {
                if dof == p.dof && (p.from - old_to).abs() <= 1e-9 {
                    p.from = new_to;
                }
            }
            let old_to = p.to;
            p.to += sigma * range * z;
            if p.dof.is_activation() {
                p.to = p.to.clamp(0.0, 1.0);
            }
            carry = Some((p.dof, old_to, p.to));
        }
        out
    }
}

/// Phase durations used by the planner (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptTiming {
    /// Shoulder-only aiming before the task-space synergy is switched on.
    pub aim: f64,
    /// Main reaching movement.
    pub reach: f64,
    /// Reaching movement under the task-space synergy.
    pub ts_reach: f64,
}

impl Default for ScriptTiming {
    fn default() -> Self {
        ScriptTiming { aim: 1.0, reach: 1.6, ts_reach: 2.0 }
    }
}

/// Final posture chosen for a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachPlan {
    /// Heading of the arm plane toward the target.
    pub azimuth: f64,
    /// Trunk translation needed (m).
    pub trunk: f64,
    /// Direction of the target from the final shoulder, in the arm plane.
    pub aim_angle: f64,
    pub shoulder: f64,
    pub elbow: f64,
}

/// Pick the final posture: the arm extends at most to
/// [`PLAN_ELBOW_MIN_DEG`] and the trunk leans toward the target for the rest.
pub fn plan_reach(arm: &ArmConfig, shoulder: Vec3, target: Vec3) -> Result<ReachPlan> {
    let rel = target - shoulder;
    let horiz = rel.x.hypot(rel.z);
    let vert = rel.y;
    let azimuth = (-rel.z).atan2(rel.x);
    let max_reach = arm.reach(PLAN_ELBOW_MIN_DEG.to_radians().max(arm.elbow_min));
    if vert.abs() >= max_reach {
        return Err(Error::Script(format!("target {:.3} m above/below the shoulder is out of reach", vert)));
    }
    let trunk = if rel.norm() > max_reach { horiz - (max_reach * max_reach - vert * vert).sqrt() } else { 0.0 };
    let forward = horiz - trunk;
    let dist = forward.hypot(vert);
    let elbow = arm.clamp_elbow(arm.elbow_for_reach(dist));
    let aim_angle = vert.atan2(forward);
    Ok(ReachPlan { azimuth, trunk, aim_angle, shoulder: aim_angle - arm.hand_offset_angle(elbow), elbow })
}

/// Everything the planner needs about the subject and interface.
#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub arm: &'a ArmConfig,
    pub synergy: &'a SynergyParams,
    pub activation: &'a ActivationSample,
    pub timing: &'a ScriptTiming,
    pub dt: f64,
}

/// Build the default script for reaching `target` from the rest pose with
/// the shoulder at `shoulder`.
pub fn plan_script(ctx: &PlanContext<'_>, shoulder: Vec3, target: Vec3, modality: Modality) -> Result<MotionScript> {
    let plan = plan_reach(ctx.arm, shoulder, target)?;
    let timing = ctx.timing;
    let phase = |dof, at, duration, from, to| Phase { dof, at, duration, from, to };
    let mut phases = Vec::new();
    let mut toggles = Vec::new();

    match modality {
        Modality::AbleBodied => {
            let t = timing.reach;
            phases.push(phase(Dof::Azimuth, 0.0, t, 0.0, plan.azimuth));
            phases.push(phase(Dof::Shoulder, 0.0, t, REST_SHOULDER, plan.shoulder));
            phases.push(phase(Dof::Elbow, 0.0, t, REST_ELBOW, plan.elbow));
            phases.push(phase(Dof::Trunk, 0.0, t, 0.0, plan.trunk));
        }
        Modality::Prosthetic(ControllerKind::Ts) => {
            // aim the hand at the target with the elbow locked, then reach
            let aim_shoulder = plan.aim_angle - ctx.arm.hand_offset_angle(REST_ELBOW);
            let t_aim = snap(timing.aim, ctx.dt);
            phases.push(phase(Dof::Azimuth, 0.0, t_aim, 0.0, plan.azimuth));
            phases.push(phase(Dof::Shoulder, 0.0, t_aim, REST_SHOULDER, aim_shoulder));
            phases.push(phase(Dof::Shoulder, t_aim, timing.ts_reach, aim_shoulder, plan.shoulder));
            phases.push(phase(Dof::Trunk, t_aim, timing.ts_reach, 0.0, plan.trunk));
            toggles.push(t_aim);
        }
        Modality::Prosthetic(ControllerKind::Js) => {
            let t = timing.reach;
            phases.push(phase(Dof::Azimuth, 0.0, t, 0.0, plan.azimuth));
            phases.push(phase(Dof::Shoulder, 0.0, t, REST_SHOULDER, plan.shoulder));
            phases.push(phase(Dof::Trunk, 0.0, t, 0.0, plan.trunk));
            // switch on once the remaining shoulder travel produces the
            // required elbow extension
            let theta = ctx.synergy.theta;
            let needed = REST_ELBOW - plan.elbow;
            if theta > 0.0 && needed > 0.0 {
                let enable_at = plan.shoulder - needed / theta;
                let t_on = if enable_at <= REST_SHOULDER {
                    0.0
                } else {
                    let te = solve_min_jerk_time(REST_SHOULDER, plan.shoulder, t, enable_at);
                    (te / ctx.dt).round() * ctx.dt
                };
                toggles.push(t_on);
            }
        }
        Modality::Prosthetic(ControllerKind::Ep) => {
            let t = timing.reach;
            phases.push(phase(Dof::Azimuth, 0.0, t, 0.0, plan.azimuth));
            phases.push(phase(Dof::Shoulder, 0.0, t, REST_SHOULDER, plan.shoulder));
            phases.push(phase(Dof::Trunk, 0.0, t, 0.0, plan.trunk));
            let needed = plan.elbow - REST_ELBOW;
            let dof = if needed >= 0.0 { Dof::FlexActivation } else { Dof::ExtActivation };
            if let Some((level, half)) = activation_bump(ctx, needed.abs(), t / 2.0) {
                phases.push(phase(dof, 0.0, half, 0.0, level));
                phases.push(phase(dof, half, half, level, 0.0));
            }
            toggles.push(0.0);
        }
    }

    let script = MotionScript { trunk_heading: plan.azimuth, phases, toggles };
    script.validate()?;
    Ok(script)
}

fn snap(t: f64, dt: f64) -> f64 {
    (t / dt).round() * dt
}

/// Time at which a monotone min-jerk segment passes `value`.
fn solve_min_jerk_time(start: f64, end: f64, duration: f64, value: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, duration);
    let rising = end >= start;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if (min_jerk(start, end, duration, mid) < value) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Elbow travel produced by an up-and-down activation bump, summed exactly
/// as the simulator integrates it.
fn bump_travel(ctx: &PlanContext<'_>, level: f64, half: f64) -> f64 {
    let a = ctx.activation;
    let rate_max = ctx.synergy.qdot_max;
    let steps = (2.0 * half / ctx.dt).ceil() as usize + 1;
    (0..steps)
        .map(|k| {
            let t = k as f64 * ctx.dt;
            let level_t = if t < half { min_jerk(0.0, level, half, t) } else { min_jerk(level, 0.0, half, t - half) };
            (a.gain * a.rescale(level_t)).min(rate_max) * ctx.dt
        })
        .sum()
}

/// Activation peak (and half-duration) that moves the elbow by `travel`.
fn activation_bump(ctx: &PlanContext<'_>, travel: f64, half: f64) -> Option<(f64, f64)> {
    if travel < 1e-6 || ctx.activation.gain <= 0.0 {
        return None;
    }
    let mut half = half;
    while bump_travel(ctx, 1.0, half) < travel {
        half *= 1.5;
        if half > 30.0 {
            return Some((1.0, half));
        }
    }
    let (mut lo, mut hi) = (ctx.activation.threshold, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bump_travel(ctx, mid, half) < travel {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((0.5 * (lo + hi), half))
}
