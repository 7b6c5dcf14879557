//! Scenario-to-files round trips.

use ckdv_core::field::{self, FieldFormat};
use ckdv_core::io;
use ckdv_core::scenario::{build_initial_state, ScenarioConfig};
use ckdv_core::solver::Scheme;

#[test]
fn config_survives_toml() {
    let mut cfg = ScenarioConfig::reference_tank();
    cfg.run.modes = vec![2, 4];
    cfg.scheme.kind = Scheme::OneStage;
    cfg.paddle.center = 0.1;
    let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn unknown_keys_rejected() {
    let text = ScenarioConfig::reference_tank().to_toml_string() + "\n[extra]\nfoo = 1\n";
    assert!(ScenarioConfig::from_toml_str(&text).is_err());
}

#[test]
fn invalid_config_lists_violations() {
    let mut cfg = ScenarioConfig::reference_tank();
    cfg.grid.dx = -1.0;
    cfg.run.modes = vec![];
    assert!(cfg.validate().len() >= 2);
    assert!(cfg.validated().is_err());
}

#[test]
fn initial_field_and_modes_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::reference_tank();
    cfg.grid.dx = 0.005;
    let basis = cfg.basis().unwrap();
    let grid = cfg.build_grid().unwrap();
    let ic = build_initial_state(&cfg, &basis, &grid).unwrap();

    let snap = field::synthesize(&basis, &ic.state, &grid, 17).unwrap();
    for format in [FieldFormat::GridText, FieldFormat::ColumnText] {
        let p = dir.path().join("f.dat");
        snap.export(&p, format).unwrap();
        assert_eq!(field::FieldSnapshot::import(&p, format).unwrap(), snap);
    }

    let p = io::snapshot_path(dir.path(), "rt", 0.0, "modes");
    io::write_text(&p, &io::modes_text(&ic.state, 0, Scheme::TwoStage, &grid)).unwrap();
    let (x, theta) = io::read_modes_text(&p).unwrap();
    assert_eq!(x, grid.coordinates());
    assert_eq!(theta, ic.state.theta);
}

#[test]
fn paddle_field_is_antisymmetric_about_mid_depth() {
    let cfg = ScenarioConfig::reference_tank();
    let basis = cfg.basis().unwrap();
    let grid = cfg.build_grid().unwrap();
    let ic = build_initial_state(&cfg, &basis, &grid).unwrap();
    let snap = field::synthesize(&basis, &ic.state, &grid, 65).unwrap();
    let last = snap.z.len() - 1;
    let scale = snap.max_abs();
    for q in 0..=last / 2 {
        for (a, b) in snap.psi[q].iter().zip(&snap.psi[last - q]) {
            assert!((a + b).abs() <= 1e-12 * scale);
        }
    }
}
