//! End-to-end checks of the `ems` binary: exit codes, artifact layout,
//! plan replay, and byte determinism of the data files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ems_cli::scenario::ScenarioFile;
use ems_core::domain::{step_plant, Controls, PlantState};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn ems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ems"))
        .args(args)
        .output()
        .expect("failed to launch ems")
}

fn tiny_scenario() -> String {
    r#"
[system]
beta = 0.95
dt_s = 0.5
mission_s = 3.0

[weights]
omega1 = 0.001
omega2 = 0.01
omega3 = 0.1

[rho]
np = 3

[[generator]]
p_min_mw = 0.0
p_max_mw = 12.0
ramp_min_mw_per_s = -2.0
ramp_max_mw_per_s = 2.0
p_init_mw = 5.0

[[ess]]
kind = "bess"
p_min_mw = -4.0
p_max_mw = 4.0
ramp_min_mw_per_s = -5.0
ramp_max_mw_per_s = 5.0
energy_mj = 100.0
soc_min = 0.1
soc_max = 0.8
soc_init = 0.5

[[ess]]
kind = "scess"
p_min_mw = -4.0
p_max_mw = 4.0
ramp_min_mw_per_s = -100.0
ramp_max_mw_per_s = 100.0
energy_mj = 20.0
soc_min = 0.1
soc_max = 0.8
soc_init = 0.6
alpha = 2.0

[[load]]
weight = 2.0
rated_mw = 6.0
profile = { segments = [ { until_s = 1.5, mw = 4.0 }, { until_s = 3.0, mw = 5.5 } ] }

[[load]]
weight = 0.5
rated_mw = 4.0
profile = { constant_mw = 3.0 }
"#
    .to_string()
}

#[test]
fn validate_good_scenario_exits_zero() {
    let out = ems(&["validate", scenario_path("desk_small.scn").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("5 loads"), "{stdout}");
}

#[test]
fn invalid_scenario_exits_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    fs::write(&path, tiny_scenario().replace("soc_init = 0.5", "soc_init = 1.5")).unwrap();
    let out = ems(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("soc_init"), "{stderr}");
}

#[test]
fn unknown_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    fs::write(&path, tiny_scenario().replace("beta =", "betta =")).unwrap();
    let out = ems(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("betta"), "{stderr}");
}

#[test]
fn rho_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("tiny.scn");
    fs::write(&scn, tiny_scenario()).unwrap();
    let out_dir = dir.path().join("out");
    let out = ems(&["rho", scn.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["plan.csv", "solves.csv", "summary.csv"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("operability_rho,"));
    assert!(summary.contains("np,3"));
}

#[test]
fn compare_summary_has_delta_and_both_wall_times() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("tiny.scn");
    fs::write(&scn, tiny_scenario()).unwrap();
    let out_dir = dir.path().join("out");
    let out = ems(&["compare", scn.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("delta_f1,"), "{summary}");
    assert!(summary.contains("wall_time_fho_s,"), "{summary}");
    assert!(summary.contains("wall_time_rho_s,"), "{summary}");
    for name in ["plan_fho.csv", "plan_rho.csv", "solves_fho.csv", "solves_rho.csv"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
}

#[test]
fn tune_writes_iteration_log() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("tiny.scn");
    fs::write(&scn, tiny_scenario()).unwrap();
    let out_dir = dir.path().join("out");
    let out = ems(&[
        "tune",
        scn.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--max-iters",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = fs::read_to_string(out_dir.join("tune_log.csv")).unwrap();
    assert!(log.starts_with("iteration,omega1,omega2,omega3,f_bar"));
    assert!(log.lines().count() >= 3, "{log}");
}

/// Replaying plan.csv's controls through the plant integrator reproduces
/// its SoC columns.
#[test]
fn plan_csv_replays_through_the_integrator() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("tiny.scn");
    fs::write(&scn, tiny_scenario()).unwrap();
    let out_dir = dir.path().join("out");
    let out = ems(&["rho", scn.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success());

    let scenario = ScenarioFile::load(&scn).unwrap().resolve(None, None).unwrap();
    let sys = &scenario.system;
    let plan = fs::read_to_string(out_dir.join("plan.csv")).unwrap();
    let mut lines = plan.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();

    let mut state = PlantState::initial(sys);
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let ctrl = Controls {
            o: (0..sys.n_loads()).map(|i| cells[col(&format!("o_{i}"))]).collect(),
            p_ess: (0..sys.n_ess())
                .map(|e| cells[col(&format!("p_ess_{e}_mw"))] * 1e6)
                .collect(),
            p_gen: (0..sys.n_gens())
                .map(|g| cells[col(&format!("p_gen_{g}_mw"))] * 1e6)
                .collect(),
        };
        state = step_plant(&state, &ctrl, sys).unwrap();
        for e in 0..sys.n_ess() {
            let written = cells[col(&format!("soc_{e}"))];
            assert!(
                (state.soc[e] - written).abs() <= 1e-9,
                "SoC mismatch at step {}: {} vs {}",
                state.step - 1,
                state.soc[e],
                written
            );
        }
    }
}

/// Identical runs produce byte-identical data files; wall-clock columns are
/// the documented exception and get stripped before comparison.
#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("tiny.scn");
    fs::write(&scn, tiny_scenario()).unwrap();

    let strip_timing = |path: &Path, timing_cols: &[usize]| -> String {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|line| {
                line.split(',')
                    .enumerate()
                    .filter(|(k, _)| !timing_cols.contains(k))
                    .map(|(_, c)| c)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let strip_timing_rows = |path: &Path| -> String {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("wall_time") && !l.contains("peak_rss"))
            .collect::<Vec<_>>()
            .join("\n")
    };

    let mut snapshots = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("out{run}"));
        let out = ems(&[
            "compare",
            scn.to_str().unwrap(),
            "--seed",
            "7",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        snapshots.push((
            fs::read_to_string(out_dir.join("plan_fho.csv")).unwrap(),
            fs::read_to_string(out_dir.join("plan_rho.csv")).unwrap(),
            strip_timing(&out_dir.join("solves_fho.csv"), &[1]),
            strip_timing(&out_dir.join("solves_rho.csv"), &[1]),
            strip_timing_rows(&out_dir.join("summary.csv")),
        ));
    }
    assert_eq!(snapshots[0].0, snapshots[1].0, "plan_fho.csv differs");
    assert_eq!(snapshots[0].1, snapshots[1].1, "plan_rho.csv differs");
    assert_eq!(snapshots[0].2, snapshots[1].2, "solves_fho.csv differs");
    assert_eq!(snapshots[0].3, snapshots[1].3, "solves_rho.csv differs");
    assert_eq!(snapshots[0].4, snapshots[1].4, "summary.csv differs");
}

/// With flags omitted, a scenario without a `[rho]` block runs at the
/// reference defaults (60-step horizon, 0.5 s interval).
#[test]
fn flag_defaults_match_reference_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("tiny.scn");
    // Drop the [rho] block so the CLI default applies.
    let text = tiny_scenario().replace("[rho]\nnp = 3\n", "");
    fs::write(&scn, text).unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let a = ems(&["rho", scn.to_str().unwrap(), "--out-dir", out_a.to_str().unwrap()]);
    let b = ems(&[
        "rho",
        scn.to_str().unwrap(),
        "--np",
        "60",
        "--dt",
        "0.5",
        "--out-dir",
        out_b.to_str().unwrap(),
    ]);
    assert!(a.status.success() && b.status.success());
    let plan_a = fs::read_to_string(out_a.join("plan.csv")).unwrap();
    let plan_b = fs::read_to_string(out_b.join("plan.csv")).unwrap();
    assert_eq!(plan_a, plan_b);
    let summary_a = fs::read_to_string(out_a.join("summary.csv")).unwrap();
    assert!(summary_a.contains("np,60"), "{summary_a}");
}
