//! TOML run configuration. Angles are given in degrees here and converted
//! to radians on the way in; script overrides use radians and metres like
//! the trajectory files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisOptions, DiffForm, FirSpec, NormalizeOptions, TimeStatistic};
use crate::controllers::{ActivationSample, ControllerKind, SynergyParams};
use crate::kinematics::ArmConfig;
use crate::simulator::{Modality, MotionScript, ScriptTiming, SimSettings, Simulation, TaskSpec, START};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmSection {
    pub upper_len: f64,
    pub lower_len: f64,
    pub elbow_min_deg: f64,
    pub elbow_max_deg: f64,
}

impl Default for ArmSection {
    fn default() -> Self {
        ArmSection { upper_len: 0.33, lower_len: 0.37, elbow_min_deg: 5.0, elbow_max_deg: 140.0 }
    }
}

impl ArmSection {
    pub fn to_arm(&self) -> ArmConfig {
        ArmConfig {
            upper_len: self.upper_len,
            lower_len: self.lower_len,
            elbow_min: self.elbow_min_deg.to_radians(),
            elbow_max: self.elbow_max_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivationSection {
    pub threshold: f64,
    pub gain: f64,
}

impl Default for ActivationSection {
    fn default() -> Self {
        let a = ActivationSample::default();
        ActivationSection { threshold: a.threshold, gain: a.gain }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Spectral arc length cut-off (rad/s).
    pub omega_c: f64,
    pub samples: usize,
    pub filter: bool,
    pub fir_order: usize,
    pub kaiser_beta: f64,
    pub task_time: TimeStatistic,
    pub diff: DiffForm,
    /// Reference label for the difference metrics; defaults to "AB" when
    /// the able-bodied reference is simulated.
    pub reference: Option<String>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let o = AnalysisOptions::default();
        let f = FirSpec::default();
        AnalysisSection {
            omega_c: o.omega_c,
            samples: o.normalize.samples,
            filter: true,
            fir_order: f.order,
            kaiser_beta: f.beta,
            task_time: o.time_statistic,
            diff: o.diff_form,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptOverride {
    pub controller: Modality,
    pub target: String,
    pub script: MotionScript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub controllers: Vec<ControllerKind>,
    /// Also simulate the able-bodied reference arm.
    pub able_bodied: bool,
    pub arm: ArmSection,
    pub task: TaskSpec,
    pub synergy: SynergyParams,
    pub activation: ActivationSection,
    pub simulation: SimSettings,
    pub timing: ScriptTiming,
    pub analysis: AnalysisSection,
    pub scripts: Vec<ScriptOverride>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            controllers: ControllerKind::ALL.to_vec(),
            able_bodied: false,
            arm: ArmSection::default(),
            task: TaskSpec::default(),
            synergy: SynergyParams::default(),
            activation: ActivationSection::default(),
            simulation: SimSettings::default(),
            timing: ScriptTiming::default(),
            analysis: AnalysisSection::default(),
            scripts: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Parse without validating.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|msg| Error::parse(path, msg))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn defaults_toml() -> String {
        Self::default().to_toml()
    }

    pub fn simulation(&self) -> Simulation {
        Simulation {
            arm: self.arm.to_arm(),
            task: self.task.clone(),
            synergy: self.synergy,
            activation: ActivationSample {
                threshold: self.activation.threshold,
                gain: self.activation.gain,
                ..Default::default()
            },
            settings: self.simulation,
            timing: self.timing,
        }
    }

    pub fn modalities(&self) -> Vec<Modality> {
        let mut out = Vec::new();
        if self.able_bodied {
            out.push(Modality::AbleBodied);
        }
        out.extend(self.controllers.iter().map(|k| Modality::Prosthetic(*k)));
        out
    }

    pub fn overrides(&self) -> BTreeMap<(Modality, String), MotionScript> {
        self.scripts.iter().map(|s| ((s.controller, s.target.clone()), s.script.clone())).collect()
    }

    pub fn reference(&self) -> Option<String> {
        self.analysis.reference.clone().or_else(|| self.able_bodied.then(|| Modality::AbleBodied.label().to_string()))
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let a = &self.analysis;
        AnalysisOptions {
            omega_c: a.omega_c,
            normalize: NormalizeOptions {
                samples: a.samples,
                filter: a.filter.then_some(FirSpec { order: a.fir_order, beta: a.kaiser_beta }),
            },
            time_statistic: a.task_time,
            diff_form: a.diff,
            reference: self.reference(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation().validate()?;
        if self.controllers.is_empty() && !self.able_bodied {
            return Err(Error::Config("no controllers to simulate".into()));
        }
        for (i, k) in self.controllers.iter().enumerate() {
            if self.controllers[..i].contains(k) {
                return Err(Error::Config(format!("controller {k} listed twice")));
            }
        }
        let a = &self.analysis;
        if !(a.omega_c > 0.0 && a.omega_c.is_finite()) {
            return Err(Error::Config(format!("analysis.omega_c must be > 0, got {}", a.omega_c)));
        }
        if a.samples < 2 {
            return Err(Error::Config(format!("analysis.samples must be >= 2, got {}", a.samples)));
        }
        if a.filter && !(a.kaiser_beta >= 0.0 && a.kaiser_beta.is_finite()) {
            return Err(Error::Config(format!("analysis.kaiser_beta must be >= 0, got {}", a.kaiser_beta)));
        }
        let modalities = self.modalities();
        for (i, s) in self.scripts.iter().enumerate() {
            self.task.position(&s.target)?;
            if s.target == START {
                return Err(Error::Config(format!("script override for `{START}`, which is not a reach target")));
            }
            if !modalities.contains(&s.controller) {
                return Err(Error::Config(format!("script override for {}, which is not simulated", s.controller)));
            }
            if self.scripts[..i].iter().any(|o| o.controller == s.controller && o.target == s.target) {
                return Err(Error::Config(format!("duplicate script override for {} / {}", s.controller, s.target)));
            }
            s.script.validate()?;
        }
        Ok(())
    }
}
