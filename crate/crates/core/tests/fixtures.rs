//! The bundled script fixtures must stay in sync with the planner. Set
//! `SYNERGY_REGEN_FIXTURES=1` to rewrite them after a planner change.

use std::path::PathBuf;

use synergy_core::controllers::ControllerKind;
use synergy_core::io::config::{RunConfig, ScriptOverride};
use synergy_core::simulator::Modality;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// TS-only, noise-free, one iteration per target, with the planned scripts
/// written out explicitly.
fn ts_straightness_config() -> RunConfig {
    let mut cfg = RunConfig {
        controllers: vec![ControllerKind::Ts],
        out_dir: "ts_straightness_out".into(),
        ..Default::default()
    };
    cfg.simulation.jitter_sigma = 0.0;
    cfg.task.iterations = 1;
    let sim = cfg.simulation();
    let ts = Modality::Prosthetic(ControllerKind::Ts);
    cfg.scripts = sim
        .task
        .reach_targets()
        .map(|t| ScriptOverride { controller: ts, target: t.to_string(), script: sim.default_script(t, ts).unwrap() })
        .collect();
    cfg
}

#[test]
fn ts_straightness_fixture_matches_planner() {
    let path = fixture("ts_straightness.toml");
    let expected = ts_straightness_config();
    if std::env::var_os("SYNERGY_REGEN_FIXTURES").is_some() {
        std::fs::write(&path, expected.to_toml()).unwrap();
    }
    let loaded = RunConfig::load(&path).unwrap();
    loaded.validate().unwrap();
    assert_eq!(loaded, expected, "fixture is stale; regenerate with SYNERGY_REGEN_FIXTURES=1");
}
