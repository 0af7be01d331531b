//! CSV artifact writers and run summaries.
//!
//! All data files are comma-separated with a header row, `.` decimal point
//! and `\n` terminators. Numeric cells use shortest-roundtrip formatting,
//! so a file is byte-reproducible for identical runs (wall-clock columns
//! are the documented exception; determinism checks skip them).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ems_core::domain::SystemSpec;
use ems_core::formulation::{objective_terms, ObjectiveTerms};
use ems_core::scheduler::{operability, DispatchPlan};
use ems_core::tuner::TuneLogEntry;

const MW: f64 = 1e6;

/// Plan table: one row per mission step with statuses, powers (MW), SoC
/// fractions and served power.
pub fn plan_csv(plan: &DispatchPlan, sys: &SystemSpec) -> String {
    let mut out = String::new();
    out.push_str("step");
    for i in 0..sys.n_loads() {
        let _ = write!(out, ",o_{i}");
    }
    for e in 0..sys.n_ess() {
        let _ = write!(out, ",p_ess_{e}_mw");
    }
    for e in 0..sys.n_ess() {
        let _ = write!(out, ",soc_{e}");
    }
    for g in 0..sys.n_gens() {
        let _ = write!(out, ",p_gen_{g}_mw");
    }
    out.push_str(",served_mw\n");
    for (t, ctrl) in plan.controls.iter().enumerate() {
        let _ = write!(out, "{t}");
        for o in &ctrl.o {
            let _ = write!(out, ",{o}");
        }
        for p in &ctrl.p_ess {
            let _ = write!(out, ",{}", p / MW);
        }
        for soc in &plan.soc[t] {
            let _ = write!(out, ",{soc}");
        }
        for p in &ctrl.p_gen {
            let _ = write!(out, ",{}", p / MW);
        }
        let _ = writeln!(out, ",{}", plan.served[t] / MW);
    }
    out
}

/// Solve table: one row per optimization solve.
pub fn solves_csv(plan: &DispatchPlan) -> String {
    let mut out = String::from("solve,wall_time_s,nodes,objective,status\n");
    for (k, r) in plan.reports.iter().enumerate() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{:?}",
            r.wall_time, r.nodes, r.objective, r.status
        );
    }
    out
}

/// Key/value summary rows for one plan.
pub fn summary_rows(label: &str, plan: &DispatchPlan, sys: &SystemSpec) -> Vec<(String, String)> {
    let terms: ObjectiveTerms = objective_terms(plan, sys);
    let mut rows = vec![
        (format!("operability_{label}"), format!("{}", operability(plan, sys))),
        (format!("f1_{label}"), format!("{}", terms.f1)),
        (format!("f2_{label}"), format!("{}", terms.f2)),
        (format!("f3_{label}"), format!("{}", terms.f3)),
        (format!("f4_{label}"), format!("{}", terms.f4)),
        (format!("solves_{label}"), format!("{}", plan.reports.len())),
        (format!("nodes_{label}"), format!("{}", plan.total_nodes())),
        (
            format!("wall_time_total_{label}_s"),
            format!("{}", plan.total_wall_time()),
        ),
        (
            format!("wall_time_max_step_{label}_s"),
            format!("{}", plan.max_step_wall_time()),
        ),
    ];
    if !plan.replay_violations.is_empty() {
        rows.push((
            format!("replay_violations_{label}"),
            format!("{}", plan.replay_violations.len()),
        ));
    }
    rows
}

pub fn summary_csv(rows: &[(String, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

/// Tuner iteration log.
pub fn tune_log_csv(log: &[TuneLogEntry]) -> String {
    let mut out =
        String::from("iteration,omega1,omega2,omega3,f_bar,f1_bar,f2_bar,f3_bar,f4_bar\n");
    for e in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.iteration,
            e.omega[0],
            e.omega[1],
            e.omega[2],
            e.f_bar,
            e.terms[0],
            e.terms[1],
            e.terms[2],
            e.terms[3]
        );
    }
    out
}

/// Write a file, creating the output directory if needed.
pub fn write_artifact(dir: &Path, name: &str, content: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

/// Peak resident set size in MiB, where the platform exposes it.
pub fn peak_rss_mib() -> Option<f64> {
    #[cfg(unix)]
    {
        let mut usage = std::mem::MaybeUninit::<libc::rusage>::uninit();
        let rc = unsafe { libc::getrusage(libc::RUSAGE_SELF, usage.as_mut_ptr()) };
        if rc == 0 {
            let usage = unsafe { usage.assume_init() };
            if usage.ru_maxrss > 0 {
                // ru_maxrss is kilobytes on Linux.
                return Some(usage.ru_maxrss as f64 / 1024.0);
            }
        }
    }
    let status = fs::read_to_string("/proc/self/status").ok()?;
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: f64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb / 1024.0);
        }
    }
    None
}

/// Best-effort reset of the peak-RSS counter so the next measurement spans
/// only the work after this call. Returns whether the reset took.
pub fn reset_peak_rss() -> bool {
    fs::write("/proc/self/clear_refs", "5").is_ok()
}
