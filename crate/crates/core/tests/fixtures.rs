//! Bundled fixture data must equal the generator's output byte for byte.
//! Set `RECOVERY_LAB_REGEN_FIXTURES=1` to rewrite the files instead.

use recovery_lab::experiments::{default_fixture_dir, fixtures};

#[test]
fn bundled_fixtures_match_generator() {
    let dir = default_fixture_dir();
    if std::env::var_os("RECOVERY_LAB_REGEN_FIXTURES").is_some_and(|v| v == "1") {
        fixtures::write_all(&dir).unwrap();
    }
    for (name, text) in fixtures::render().unwrap() {
        let on_disk = std::fs::read_to_string(dir.join(&name)).unwrap_or_else(|e| {
            panic!("{name}: {e}; regenerate with RECOVERY_LAB_REGEN_FIXTURES=1")
        });
        assert!(on_disk == text, "{name} differs from generator output");
    }
}

#[test]
fn bundled_configs_parse() {
    use recovery_lab::experiments::{scenario_config, ScenarioId};
    for id in ScenarioId::ALL {
        let cfg = scenario_config(id, &default_fixture_dir()).unwrap();
        cfg.validate().unwrap();
    }
}
