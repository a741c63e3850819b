//! End-to-end behavior over the bundled fixtures.

use std::path::Path;

use recovery_lab::error::Error;
use recovery_lab::experiments::{
    default_fixture_dir, report_csv, run_scenario, scenario_config, ScenarioId,
};
use recovery_lab::io::data::{flows_csv, prices_csv, sector_flows_csv};
use recovery_lab::io::{evaluate, load_flow_table, load_prices, load_sector_flows, run_experiment};

#[test]
fn fixture_csvs_round_trip_byte_identical() {
    let dir = default_fixture_dir();
    for (_, file) in recovery_lab::experiments::fixtures::PRICE_FILES {
        let path = dir.join(file);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(prices_csv(&load_prices(&path).unwrap()), text, "{file}");
    }
    let path = dir.join("fii_dii_flows.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(flows_csv(&load_flow_table(&path).unwrap()), text);
    let path = dir.join("sector_flows.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(sector_flows_csv(&load_sector_flows(&path).unwrap()), text);
}

#[test]
fn join_never_fabricates_dates() {
    let cfg = scenario_config(ScenarioId::Bank, &default_fixture_dir()).unwrap();
    let run = cfg.resolve().unwrap();
    let join = run.join.unwrap();
    assert!(join.aligned <= join.price_rows.min(join.flow_rows));
    let prices = load_prices(&default_fixture_dir().join("nifty_bank.csv")).unwrap();
    assert!(run.dates.iter().all(|d| prices.dates().contains(d)));
    assert_eq!(run.psi.len() + 1, run.dates.len());
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn identical_configs_give_identical_bundles() {
    let cfg = scenario_config(ScenarioId::It, &default_fixture_dir()).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    assert_eq!(files(a.path()), files(b.path()));
    let names: Vec<String> = files(a.path()).into_iter().map(|(n, _)| n).collect();
    for want in [
        "path.csv",
        "overlay.svg",
        "imfs.csv",
        "imfs.svg",
        "sst.csv",
        "sst.svg",
        "timescales.csv",
        "correlation.csv",
        "manifest.toml",
    ] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
    let mem = evaluate(&cfg).unwrap();
    assert_eq!(mem.outputs, sa.outputs);
}

#[test]
fn sweep_bundle_has_one_path_per_grid_value() {
    let mut cfg = scenario_config(ScenarioId::PhiSweep, &default_fixture_dir()).unwrap();
    cfg.sweep.as_mut().unwrap().seeds = 5;
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let paths = files(dir.path())
        .into_iter()
        .filter(|(n, _)| n.starts_with("path_phi_") && n.ends_with(".csv"))
        .count();
    assert_eq!(paths, 4);
    assert!(dir.path().join("overlay.svg").exists());
}

#[test]
fn scenarios_are_deterministic_given_seeds() {
    let seeds: Vec<u64> = (40..60).collect();
    let dir = default_fixture_dir();
    let a = run_scenario(ScenarioId::LambdaSweep, &seeds, &dir).unwrap();
    let b = run_scenario(ScenarioId::LambdaSweep, &seeds, &dir).unwrap();
    assert_eq!(report_csv(std::slice::from_ref(&a)), report_csv(&[b]));
    let other = run_scenario(ScenarioId::LambdaSweep, &[1, 2, 3], &dir).unwrap();
    assert_ne!(report_csv(&[a]), report_csv(&[other]));
}

#[test]
fn missing_fixtures_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run_scenario(ScenarioId::Bank, &[], dir.path()),
        Err(Error::MissingFixture(_))
    ));
    std::fs::copy(
        default_fixture_dir().join("bank.toml"),
        dir.path().join("bank.toml"),
    )
    .unwrap();
    match run_scenario(ScenarioId::Bank, &[], dir.path()) {
        Err(Error::MissingFixture(p)) => assert!(p.ends_with("nifty_bank.csv")),
        other => panic!("expected MissingFixture, got {other:?}"),
    }
}

#[test]
fn every_expectation_is_machine_checked() {
    let dir = default_fixture_dir();
    for id in [ScenarioId::Bank, ScenarioId::TsSweep] {
        let r = run_scenario(id, &[1, 2, 3, 4, 5], &dir).unwrap();
        assert!(!r.checks.is_empty());
        assert!(r.checks.iter().all(|c| !c.detail.is_empty()));
    }
}
