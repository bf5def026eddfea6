//! Simulator trajectory files: one header row, one row per sample, floats
//! with 9 significant digits and flags as 0/1.

use std::fmt::Write as _;
use std::path::Path;

use crate::frames::Vec3;
use crate::io::create_parent;
use crate::kinematics::PlanarJointState;
use crate::simulator::{Sample, SampleFlags, Trajectory};
use crate::{Error, Result};

pub const HEADER: &str = "t,hand_x,hand_y,hand_z,q_s,q_e,qdot_s,qdot_e,trunk_x,trunk_y,trunk_z,sh_x,sh_y,sh_z,enabled,flag_singular,flag_clamped";

pub const COLUMNS: usize = 17;

fn push_f(out: &mut String, v: f64) {
    write!(out, "{v:.8e},").expect("writing to a String");
}

pub fn to_string(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples.len() * 256);
    out.push_str(HEADER);
    out.push('\n');
    for s in &traj.samples {
        push_f(&mut out, s.t);
        for v in s.hand.iter() {
            push_f(&mut out, *v);
        }
        for v in [s.joint.q_s, s.joint.q_e, s.joint.qdot_s, s.joint.qdot_e] {
            push_f(&mut out, v);
        }
        for v in s.trunk.iter().chain(s.shoulder.iter()) {
            push_f(&mut out, *v);
        }
        let b = |f: bool| if f { '1' } else { '0' };
        writeln!(out, "{},{},{}", b(s.flags.enabled), b(s.flags.singular), b(s.flags.clamped))
            .expect("writing to a String");
    }
    out
}

pub fn write(path: &Path, traj: &Trajectory) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, to_string(traj)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text).map_err(|msg| Error::parse(path, msg))
}

pub fn from_str(text: &str) -> std::result::Result<Trajectory, String> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.iter().collect::<Vec<_>>().join(",");
    if header != HEADER {
        return Err(format!("unexpected header `{header}`"));
    }
    let mut samples = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != COLUMNS {
            return Err(format!("row {}: expected {COLUMNS} fields, got {}", row + 1, rec.len()));
        }
        let f = |i: usize| -> std::result::Result<f64, String> {
            rec[i].trim().parse::<f64>().map_err(|e| format!("row {}, column {}: {e}", row + 1, i + 1))
        };
        let flag = |i: usize| -> std::result::Result<bool, String> {
            match rec[i].trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(format!("row {}, column {}: flag `{other}` is not 0/1", row + 1, i + 1)),
            }
        };
        samples.push(Sample {
            t: f(0)?,
            hand: Vec3::new(f(1)?, f(2)?, f(3)?),
            joint: PlanarJointState { q_s: f(4)?, q_e: f(5)?, qdot_s: f(6)?, qdot_e: f(7)? },
            trunk: Vec3::new(f(8)?, f(9)?, f(10)?),
            shoulder: Vec3::new(f(11)?, f(12)?, f(13)?),
            flags: SampleFlags { enabled: flag(14)?, singular: flag(15)?, clamped: flag(16)? },
        });
    }
    let dt = match samples.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => return Err("trajectory needs at least two samples".into()),
    };
    let traj = Trajectory { dt, samples };
    traj.validate().map_err(|e| e.to_string())?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_header() {
        assert!(from_str("t,x\n0,1\n").unwrap_err().contains("header"));
    }

    #[test]
    fn rejects_bad_flag() {
        let row = "0.0,0,0,0,0,0,0,0,0,0,0,0,0,0,2,0,0";
        let text = format!("{HEADER}\n{row}\n{row}\n");
        assert!(from_str(&text).unwrap_err().contains("flag"));
    }
}
