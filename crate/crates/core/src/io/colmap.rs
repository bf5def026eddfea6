//! Ingest external motion-capture CSV files through a column map.
//!
//! Files in the analysed directory are named `<label>_<target>_<iteration>.csv`;
//! targets are looked up in the map's `[targets]` table (in the declared
//! length unit). Example map:
//!
//! ```toml
//! [columns]
//! t = "Time"
//! hand_x = "RHand.X"
//! # ... every required field
//!
//! [units]
//! angle = "deg"
//! length = "mm"
//!
//! [targets]
//! Far = [1050.0, 1170.0, 0.0]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::metrics::gradient;
use crate::analysis::Record;
use crate::frames::Vec3;
use crate::kinematics::PlanarJointState;
use crate::simulator::{Sample, SampleFlags, Trajectory};
use crate::{Error, Result};

pub const REQUIRED: [&str; 12] =
    ["t", "hand_x", "hand_y", "hand_z", "q_s", "q_e", "trunk_x", "trunk_y", "trunk_z", "sh_x", "sh_y", "sh_z"];
pub const OPTIONAL: [&str; 3] = ["qdot_s", "qdot_e", "enabled"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Deg,
    #[default]
    Rad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Mm,
    #[default]
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Ms,
    #[default]
    S,
}

impl AngleUnit {
    pub fn to_si(self, v: f64) -> f64 {
        match self {
            AngleUnit::Deg => v.to_radians(),
            AngleUnit::Rad => v,
        }
    }
}

impl LengthUnit {
    pub fn to_si(self, v: f64) -> f64 {
        match self {
            LengthUnit::Mm => v / 1000.0,
            LengthUnit::M => v,
        }
    }
}

impl TimeUnit {
    pub fn to_si(self, v: f64) -> f64 {
        match self {
            TimeUnit::Ms => v / 1000.0,
            TimeUnit::S => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Units {
    pub angle: AngleUnit,
    pub length: LengthUnit,
    pub time: TimeUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    /// Trajectory field -> CSV column name.
    pub columns: BTreeMap<String, String>,
    #[serde(default)]
    pub units: Units,
    pub targets: BTreeMap<String, [f64; 3]>,
}

impl ColumnMap {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map = Self::from_toml(&text).map_err(|msg| Error::parse(path, msg))?;
        map.validate()?;
        Ok(map)
    }

    /// Identity map for files already in the simulator's column names.
    pub fn identity(units: Units, targets: BTreeMap<String, [f64; 3]>) -> Self {
        let columns = REQUIRED.iter().chain(&OPTIONAL).map(|f| (f.to_string(), f.to_string())).collect();
        ColumnMap { columns, units, targets }
    }

    pub fn validate(&self) -> Result<()> {
        for f in REQUIRED {
            if !self.columns.contains_key(f) {
                return Err(Error::Config(format!("column map does not map required field `{f}`")));
            }
        }
        for f in self.columns.keys() {
            if !REQUIRED.contains(&f.as_str()) && !OPTIONAL.contains(&f.as_str()) {
                return Err(Error::Config(format!("column map names unknown field `{f}`")));
            }
        }
        if self.targets.is_empty() {
            return Err(Error::Config("column map has no targets".into()));
        }
        Ok(())
    }

    pub fn target_position(&self, name: &str) -> Result<Vec3> {
        let p = self.targets.get(name).ok_or_else(|| Error::UnknownTarget(name.to_string()))?;
        Ok(Vec3::from(p.map(|v| self.units.length.to_si(v))))
    }

    /// Read one external file into SI units. Missing joint rates are
    /// reconstructed by finite differences.
    pub fn read_trajectory(&self, path: &Path) -> Result<Trajectory> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.parse_trajectory(&text).map_err(|msg| Error::parse(path, msg))
    }

    pub fn parse_trajectory(&self, text: &str) -> std::result::Result<Trajectory, String> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
        let index = |field: &str| -> std::result::Result<Option<usize>, String> {
            match self.columns.get(field) {
                None => Ok(None),
                Some(col) => headers
                    .iter()
                    .position(|h| h == col)
                    .map(Some)
                    .ok_or_else(|| format!("column `{col}` (for `{field}`) not found")),
            }
        };
        let mut idx = BTreeMap::new();
        for f in REQUIRED.iter().chain(&OPTIONAL) {
            if let Some(i) = index(f)? {
                idx.insert(*f, i);
            }
        }

        let mut cols: BTreeMap<&str, Vec<f64>> = idx.keys().map(|k| (*k, Vec::new())).collect();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            for (f, i) in &idx {
                let raw = rec.get(*i).ok_or_else(|| format!("row {}: missing field `{f}`", row + 1))?;
                let v: f64 = raw.parse().map_err(|e| format!("row {}, `{f}`: {e}", row + 1))?;
                cols.get_mut(f).expect("column registered").push(v);
            }
        }
        let u = self.units;
        let conv = |f: &str, g: &dyn Fn(f64) -> f64| -> Vec<f64> { cols[f].iter().map(|v| g(*v)).collect() };
        let length = |v| u.length.to_si(v);
        let angle = |v| u.angle.to_si(v);
        let t = conv("t", &|v| u.time.to_si(v));
        let n = t.len();
        if n < 2 {
            return Err("trajectory needs at least two samples".into());
        }
        let dt = t[1] - t[0];
        let q_s = conv("q_s", &angle);
        let q_e = conv("q_e", &angle);
        let rate = |field: &str, q: &[f64]| -> Vec<f64> {
            if cols.contains_key(field) {
                // angle unit per time unit
                cols[field].iter().map(|v| u.angle.to_si(*v) / u.time.to_si(1.0)).collect()
            } else {
                gradient(q, dt)
            }
        };
        let qdot_s = rate("qdot_s", &q_s);
        let qdot_e = rate("qdot_e", &q_e);
        let v3 = |a: &str, b: &str, c: &str| -> Vec<Vec3> {
            let (x, y, z) = (conv(a, &length), conv(b, &length), conv(c, &length));
            (0..n).map(|i| Vec3::new(x[i], y[i], z[i])).collect()
        };
        let hand = v3("hand_x", "hand_y", "hand_z");
        let trunk = v3("trunk_x", "trunk_y", "trunk_z");
        let shoulder = v3("sh_x", "sh_y", "sh_z");
        let enabled = cols.get("enabled");

        let samples = (0..n)
            .map(|i| Sample {
                t: t[i],
                hand: hand[i],
                joint: PlanarJointState { q_s: q_s[i], q_e: q_e[i], qdot_s: qdot_s[i], qdot_e: qdot_e[i] },
                trunk: trunk[i],
                shoulder: shoulder[i],
                flags: SampleFlags { enabled: enabled.is_some_and(|e| e[i] != 0.0), ..Default::default() },
            })
            .collect();
        let traj = Trajectory { dt, samples };
        traj.validate().map_err(|e| e.to_string())?;
        Ok(traj)
    }

    /// Every `*.csv` in `dir`, as analysis records.
    pub fn load_records(&self, dir: &Path) -> Result<Vec<Record>> {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::EmptyInput("no trajectory files found"));
        }
        files
            .iter()
            .map(|path| {
                let (label, target, iteration) = parse_file_name(path)?;
                Ok(Record {
                    target_pos: self.target_position(&target)?,
                    label,
                    target,
                    iteration,
                    trajectory: self.read_trajectory(path)?,
                })
            })
            .collect()
    }
}

/// Split `<label>_<target>_<iteration>.csv`. The label has no underscore;
/// the target may.
pub fn parse_file_name(path: &Path) -> Result<(String, String, usize)> {
    let bad = || Error::parse(path, "file name is not <label>_<target>_<iteration>.csv");
    let stem = path.file_stem().and_then(|s| s.to_str()).ok_or_else(bad)?;
    let (rest, iter) = stem.rsplit_once('_').ok_or_else(bad)?;
    let (label, target) = rest.split_once('_').ok_or_else(bad)?;
    let iteration = iter.parse().map_err(|_| bad())?;
    if label.is_empty() || target.is_empty() {
        return Err(bad());
    }
    Ok((label.to_string(), target.to_string(), iteration))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(units: Units) -> ColumnMap {
        ColumnMap::identity(units, [("Far".to_string(), [1.0, 1.0, 0.0])].into())
    }

    #[test]
    fn file_names() {
        let p = Path::new("x/TS_Far_03.csv");
        assert_eq!(parse_file_name(p).unwrap(), ("TS".into(), "Far".into(), 3));
        let p = Path::new("AB_Top_Shelf_10.csv");
        assert_eq!(parse_file_name(p).unwrap(), ("AB".into(), "Top_Shelf".into(), 10));
        assert!(parse_file_name(Path::new("TS-Far.csv")).is_err());
    }

    #[test]
    fn missing_required_field() {
        let mut m = map(Units::default());
        m.columns.remove("q_e");
        assert!(m.validate().unwrap_err().to_string().contains("q_e"));
    }

    #[test]
    fn unit_conversion() {
        let text = "t,hand_x,hand_y,hand_z,q_s,q_e,trunk_x,trunk_y,trunk_z,sh_x,sh_y,sh_z\n\
                    0,1000,0,0,90,45,0,0,0,0,0,0\n\
                    10,1500,0,0,90,90,0,0,0,0,0,0\n";
        let units = Units { angle: AngleUnit::Deg, length: LengthUnit::Mm, time: TimeUnit::Ms };
        let mut m = map(units);
        for f in OPTIONAL {
            m.columns.remove(f);
        }
        let traj = m.parse_trajectory(text).unwrap();
        assert_eq!(traj.dt, 0.01);
        assert_eq!(traj.samples[1].hand.x, 1.5);
        assert_eq!(traj.samples[0].joint.q_s, std::f64::consts::FRAC_PI_2);
        assert!((traj.samples[0].joint.qdot_e - std::f64::consts::FRAC_PI_4 / 0.01).abs() < 1e-9);
        assert_eq!(m.target_position("Far").unwrap(), Vec3::new(0.001, 0.001, 0.0));
    }

    #[test]
    fn missing_column_named() {
        let m = map(Units::default());
        let err = m.parse_trajectory("t,hand_x\n0,0\n").unwrap_err();
        assert!(err.contains("not found"));
    }
}
