use std::path::PathBuf;

use banzkp::adversary::{bystanders_complete, freshness, judge, secrecy_hits};
use banzkp::netsim::{run, Scenario};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load_all() -> Vec<Scenario> {
    let mut paths: Vec<_> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    assert!(paths.len() >= 11);
    paths
        .iter()
        .map(|p| {
            Scenario::from_path(p)
                .unwrap_or_else(|e| panic!("{e}"))
                .with_modulus_bits(1096)
        })
        .collect()
}

#[test]
fn presets_match_their_files() {
    for s in load_all().into_iter().filter(|s| s.adversaries.is_empty()) {
        let preset = Scenario::preset(&s.name, s.seed)
            .unwrap()
            .with_modulus_bits(1096);
        assert_eq!(preset, s, "{}", s.name);
    }
}

#[test]
fn control_runs_complete_in_every_attack_file() {
    for mut s in load_all().into_iter().filter(|s| !s.adversaries.is_empty()) {
        s.adversaries.clear();
        let t = run(&s).unwrap();
        assert!(bystanders_complete(&t, None), "{}", s.name);
    }
}

#[test]
fn attack_files_pass_their_verdicts() {
    for s in load_all().into_iter().filter(|s| !s.adversaries.is_empty()) {
        let t = run(&s).unwrap();
        let v = judge(&s.adversaries[0], &t);
        assert!(v.pass, "{}: {}", s.name, v.detail);
        assert_eq!(secrecy_hits(&t), 0, "{}", s.name);
        if s.name == "attack-guess" {
            assert!(freshness(&t).all_fresh());
        }
    }
}

#[test]
fn broken_file_reports_its_line() {
    let text = std::fs::read_to_string(scenario_dir().join("honest7.toml")).unwrap();
    let broken = text.replacen("at_ms = 130", "at_ms = \"soon\"", 1);
    let line = broken.lines().position(|l| l.contains("\"soon\"")).unwrap() + 1;
    let err = Scenario::from_toml_str(&broken, "honest7.toml").unwrap_err();
    assert_eq!(err.line, Some(line), "{err}");
    assert!(err
        .to_string()
        .starts_with(&format!("honest7.toml:{line}:")));
}
