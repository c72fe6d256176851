//! CLI-level behavior: subcommands, file outputs, exit codes.

use clap::Parser;
use std::fs;
use tempfile::TempDir;
use ums::cli::{run, Cli, EXIT_INFEASIBLE, EXIT_OK, EXIT_VALIDATION};

fn ums(args: &[&str]) -> anyhow::Result<i32> {
    let mut argv = vec!["ums"];
    argv.extend_from_slice(args);
    run(Cli::try_parse_from(argv).expect("arguments parse"))
}

#[test]
fn generate_is_deterministic_and_tight_matches_supply() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let code = ums(&[
            "generate", "--seed", "11", "--jobs", "5", "--machines", "2",
            "--supplies", "2", "--profile", "tight", "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let instance = ums::Instance::from_json_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let supply: ums::Rat = instance.supplies.iter().map(|s| s.quantity.clone()).sum();
    assert_eq!(supply, instance.total_demand());
}

#[test]
fn solve_writes_outputs_and_respects_max_guesses() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst.json");
    ums(&[
        "generate", "--seed", "4", "--jobs", "4", "--machines", "2",
        "--supplies", "2", "--out", inst.to_str().unwrap(),
    ])
    .unwrap();
    let sched = dir.path().join("sched.json");
    let report = dir.path().join("report.json");
    let configs = dir.path().join("configs.csv");
    let rounded = dir.path().join("rounded.json");
    let lp_dir = dir.path().join("lps");
    let code = ums(&[
        "solve", inst.to_str().unwrap(),
        "--preset", "desk", "--lp-mode", "float", "--max-guesses", "1",
        "--out", sched.to_str().unwrap(),
        "--report", report.to_str().unwrap(),
        "--dump-configs", configs.to_str().unwrap(),
        "--dump-rounded", rounded.to_str().unwrap(),
        "--dump-lp", lp_dir.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(code, EXIT_OK);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["guesses"].as_array().unwrap().len(), 1);
    assert!(report["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|w| w.as_str().unwrap().contains("truncated")));
    assert!(configs.exists() && rounded.exists());
    assert!(fs::read_dir(&lp_dir).unwrap().count() >= 1);

    // The written schedule verifies against the instance.
    let code = ums(&["verify", inst.to_str().unwrap(), sched.to_str().unwrap()]).unwrap();
    assert_eq!(code, EXIT_OK);
}

#[test]
fn undersupplied_instance_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("bad.json");
    fs::write(
        &inst,
        r#"{
            "jobs": [{"size":"2/1","demand":"5/1"}],
            "machines": [{"speed":"1/1"}],
            "supplies": [{"date":"0/1","quantity":"1/1"}],
            "params": {"epsilon":"1/1","psi":"1/2","phi":"2/1","rho":2}
        }"#,
    )
    .unwrap();
    let code = ums(&["solve", inst.to_str().unwrap()]).unwrap();
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn verify_flags_infeasible_schedules() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst.json");
    fs::write(
        &inst,
        r#"{
            "jobs": [{"size":"2/1","demand":"0/1"},{"size":"2/1","demand":"0/1"}],
            "machines": [{"speed":"1/1"}],
            "supplies": [{"date":"0/1","quantity":"1/1"}],
            "params": {"epsilon":"1/1","psi":"1/2","phi":"2/1","rho":2}
        }"#,
    )
    .unwrap();
    let sched = dir.path().join("overlap.json");
    fs::write(
        &sched,
        r#"{"assignments":[{"machine":0,"jobs":[
            {"job":0,"start":"0/1"},{"job":1,"start":"1/1"}
        ]}]}"#,
    )
    .unwrap();
    let code = ums(&["verify", inst.to_str().unwrap(), sched.to_str().unwrap()]).unwrap();
    assert_eq!(code, EXIT_INFEASIBLE);
}

#[test]
fn exact_refuses_oversized_instances() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("big.json");
    ums(&[
        "generate", "--seed", "1", "--jobs", "9", "--machines", "2",
        "--supplies", "2", "--out", inst.to_str().unwrap(),
    ])
    .unwrap();
    let code = ums(&["exact", inst.to_str().unwrap()]).unwrap();
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn bench_handles_empty_and_mixed_directories() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = dir.path().join("empty.csv");
    let code = ums(&["bench", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap();
    assert_eq!(code, EXIT_OK);
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1, "header-only CSV for an empty dir");
    assert!(csv.starts_with("instance,n,m,e,epsilon,alg_cost,exact_cost,ratio"));

    let mixed = dir.path().join("mixed");
    fs::create_dir(&mixed).unwrap();
    ums(&[
        "generate", "--seed", "2", "--jobs", "4", "--machines", "2",
        "--supplies", "2", "--out", mixed.join("ok.json").to_str().unwrap(),
    ])
    .unwrap();
    fs::write(mixed.join("broken.json"), "{ not json").unwrap();
    let out = dir.path().join("mixed.csv");
    let code = ums(&["bench", mixed.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap();
    assert_eq!(code, EXIT_OK, "bench is resilient to invalid files");
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("broken.json,,"), "invalid row flagged with blanks");
    let ok_line = csv.lines().find(|l| l.starts_with("ok.json")).unwrap();
    let ratio: f64 = ok_line.split(',').nth(7).unwrap().parse().unwrap();
    let bound: f64 = ok_line.split(',').nth(8).unwrap().parse().unwrap();
    assert!(ratio >= 1.0 && ratio <= bound, "ratio {ratio} within bound {bound}");
}
