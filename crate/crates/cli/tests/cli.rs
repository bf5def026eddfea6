use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn synergy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synergy")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
out_dir = "out"
controllers = ["TS", "EP"]
able_bodied = true
[task]
iterations = 2
"#;

fn simulate_small(dir: &Path) -> PathBuf {
    let cfg = write_config(dir, SMALL);
    let out = synergy(&["simulate", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    dir.join("out")
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn print_defaults_carries_task_constants() {
    let out = synergy(&["--print-defaults"]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    for line in [
        "rate_hz = 90.0",
        "theta = 1.0",
        "omega_c = 40.0",
        "samples = 200",
        "elbow_min_deg = 5.0",
        "elbow_max_deg = 140.0",
        "kaiser_beta = 20.0",
    ] {
        assert!(s.lines().any(|l| l.trim() == line), "missing `{line}`");
    }
}

#[test]
fn validate_prints_resolved_targets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = synergy(&["validate", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let s = text(&out.stdout);
    assert!(s.lines().any(|l| l.trim() == "Far      (1.0500, 1.1700, 0.0000)"), "{s}");
    assert!(s.contains("modalities: TS, JS, EP"));
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[task]\narm_length = 0.0\n");
    let out = synergy(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(
        dir.path(),
        "[[scripts]]\ncontroller = \"TS\"\ntarget = \"Attic\"\n[scripts.script]\ntrunk_heading = 0.0\nphases = []\n",
    );
    let out = synergy(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("Attic"), "{}", text(&out.stderr));

    let cfg = write_config(dir.path(), "bogus_key = 1\n");
    assert_eq!(synergy(&["validate", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(synergy(&["validate", "/nonexistent/run.toml"]).status.code(), Some(3));
}

#[test]
fn simulate_is_deterministic_and_seed_sensitive() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ta = tree(&simulate_small(a.path()));
    let tb = tree(&simulate_small(b.path()));
    // AB, TS, EP x 4 targets x 2 iterations
    let csvs = ta.iter().filter(|(p, _)| p.starts_with("trajectories")).count();
    assert_eq!(csvs, 24);
    assert!(ta.iter().any(|(p, _)| p == Path::new("report.json")));
    assert_eq!(ta, tb);

    let c = tempfile::tempdir().unwrap();
    let cfg = write_config(c.path(), SMALL);
    assert!(synergy(&["--seed", "9", "simulate", cfg.to_str().unwrap()]).status.success());
    assert_ne!(ta, tree(&c.path().join("out")));
}

#[test]
fn singular_iterations_fail_unless_kept() {
    let dir = tempfile::tempdir().unwrap();
    let body = fs::read_to_string(core_fixture("ts_singular.toml")).unwrap();
    let cfg = write_config(dir.path(), &body);
    let out = synergy(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("--keep-going"));

    let out = synergy(&["--keep-going", "simulate", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let manifest: Value =
        serde_json::from_slice(&fs::read(dir.path().join("sing_out/manifest.json")).unwrap()).unwrap();
    let flagged = manifest["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["target"] == "Close" && e["flags"]["singularity_hit"] == true)
        .count();
    assert_eq!(flagged, 2);
}

fn report_cells(path: &Path) -> Vec<Value> {
    let v: Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    v["cells"].as_array().unwrap().clone()
}

#[test]
fn analyze_simulated_batch_with_reference() {
    let dir = tempfile::tempdir().unwrap();
    let batch = simulate_small(dir.path());
    let out_dir = dir.path().join("analysis");
    let out = synergy(&["analyze", batch.to_str().unwrap(), "--ab", "AB", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let cells = report_cells(&out_dir.join("report.json"));
    assert_eq!(cells.len(), 12);
    for c in &cells {
        for key in [
            "t_f_central",
            "terminal_error_mean",
            "sal_hand",
            "sal_joint",
            "var_hand",
            "var_joint",
            "diff_hand",
            "diff_joint",
            "disp_c7",
            "disp_shoulder",
        ] {
            assert!(c[key].is_number(), "{key} missing in {c}");
        }
        assert!(c["sal_hand"].as_f64().unwrap() <= -1.0);
    }
    assert!(out_dir.join("plots/summary.csv").is_file());
    assert!(out_dir.join("plots/hand_TS_Far.csv").is_file());
}

#[test]
fn analyze_without_inputs_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = synergy(&["analyze", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let map = dir.path().join("map.toml");
    let cols: Vec<String> =
        ["t", "hand_x", "hand_y", "hand_z", "q_s", "q_e", "trunk_x", "trunk_y", "trunk_z", "sh_x", "sh_y", "sh_z"]
            .iter()
            .map(|f| format!("{f} = \"{f}\""))
            .collect();
    fs::write(&map, format!("[columns]\n{}\n", cols.join("\n"))).unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = synergy(&["analyze", empty.to_str().unwrap(), "--colmap", map.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
}

const LENGTHS: [&str; 9] = ["hand_x", "hand_y", "hand_z", "trunk_x", "trunk_y", "trunk_z", "sh_x", "sh_y", "sh_z"];
const ANGLES: [&str; 2] = ["q_s", "q_e"];

/// Rewrite simulated trajectories as external files: renamed columns, and
/// optionally millimetres and degrees.
fn export(batch: &Path, dest: &Path, lab_units: bool) {
    fs::create_dir_all(dest).unwrap();
    let manifest: Value = serde_json::from_slice(&fs::read(batch.join("manifest.json")).unwrap()).unwrap();
    for e in manifest["entries"].as_array().unwrap() {
        let src = fs::read_to_string(batch.join(e["file"].as_str().unwrap())).unwrap();
        let mut lines = src.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let keep: Vec<usize> = (0..header.len())
            .filter(|&i| header[i] == "t" || LENGTHS.contains(&header[i]) || ANGLES.contains(&header[i]))
            .collect();
        let mut out = keep.iter().map(|&i| format!("ext_{}", header[i])).collect::<Vec<_>>().join(",") + "\n";
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let row: Vec<String> = keep
                .iter()
                .map(|&i| {
                    let v: f64 = f[i].parse().unwrap();
                    let v = match (lab_units, header[i]) {
                        (true, h) if LENGTHS.contains(&h) => v * 1000.0,
                        (true, h) if ANGLES.contains(&h) => v.to_degrees(),
                        _ => v,
                    };
                    format!("{v:e}")
                })
                .collect();
            out += &(row.join(",") + "\n");
        }
        let name =
            format!("{}_{}_{}.csv", e["controller"].as_str().unwrap(), e["target"].as_str().unwrap(), e["iteration"]);
        fs::write(dest.join(name), out).unwrap();
    }
    let mut map = String::from("[columns]\n");
    map += "t = \"ext_t\"\n";
    for f in LENGTHS.iter().chain(&ANGLES) {
        map += &format!("{f} = \"ext_{f}\"\n");
    }
    let (k, length, angle) = if lab_units { (1000.0, "mm", "deg") } else { (1.0, "m", "rad") };
    map += &format!("[units]\nlength = \"{length}\"\nangle = \"{angle}\"\n[targets]\n");
    let mut seen = std::collections::BTreeSet::new();
    for e in manifest["entries"].as_array().unwrap() {
        let t = e["target"].as_str().unwrap();
        if seen.insert(t.to_string()) {
            let p: Vec<f64> = e["target_pos"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap() * k).collect();
            map += &format!("{t} = [{:e}, {:e}, {:e}]\n", p[0], p[1], p[2]);
        }
    }
    fs::write(dest.join("map.toml"), map).unwrap();
}

#[test]
fn lab_units_match_converted_data() {
    let dir = tempfile::tempdir().unwrap();
    let batch = simulate_small(dir.path());
    let run = |name: &str, lab: bool| {
        let ext = dir.path().join(name);
        export(&batch, &ext, lab);
        let out = synergy(&[
            "analyze",
            ext.to_str().unwrap(),
            "--colmap",
            ext.join("map.toml").to_str().unwrap(),
            "--ab",
            "AB",
        ]);
        assert!(out.status.success(), "{}", text(&out.stderr));
        report_cells(&ext.join("report.json"))
    };
    let si = run("si", false);
    let lab = run("lab", true);
    assert_eq!(si.len(), 12);
    for (a, b) in si.iter().zip(&lab) {
        assert_eq!(a["controller"], b["controller"]);
        assert_eq!(a["target"], b["target"]);
        for (k, va) in a.as_object().unwrap() {
            if let Some(x) = va.as_f64() {
                let y = b[k].as_f64().unwrap();
                assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{k}: {x} vs {y}");
            }
        }
    }
}
