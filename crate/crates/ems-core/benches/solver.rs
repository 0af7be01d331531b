//! Simplex kernel benchmarks: parallel pivot fan-out vs the sequential
//! path on dispatch-shaped programs of increasing horizon.
//!
//! Run with `cargo bench -p ems-core`. The parallel path only engages above
//! the tableau-size threshold, so the small instance doubles as a sanity
//! check that the dispatch overhead is not being paid where it cannot help.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ems_core::domain::{
    EssKind, EssSpec, GeneratorSpec, LoadSpec, PlantState, ScenarioTrace, SystemSpec,
};
use ems_core::formulation::{build_horizon, ObjectiveWeights};
use ems_core::lp::{solve_lp_with, SolverOptions};

fn bench_system(n_loads: usize, steps: usize) -> SystemSpec {
    let loads = (0..n_loads)
        .map(|i| {
            let rated = 1.0e6 + 0.25e6 * (i % 7) as f64;
            let profile = (0..steps)
                .map(|t| rated * (0.55 + 0.4 * ((t + i) % 5) as f64 / 5.0))
                .collect();
            LoadSpec {
                id: i,
                weight_w: 1.0 + (i % 5) as f64,
                rated_power: rated,
                discrete: false,
                granularity_n: 1,
                profile,
            }
        })
        .collect();
    let generators = (0..3)
        .map(|g| GeneratorSpec {
            id: g,
            p_min: 0.0,
            p_max: 15.0e6,
            ramp_min: -1.0e6,
            ramp_max: 1.0e6,
            p_init: 10.0e6,
        })
        .collect();
    let ess = (0..4)
        .map(|e| EssSpec {
            id: e,
            kind: if e < 2 { EssKind::Bess } else { EssKind::Scess },
            p_min: -10.0e6,
            p_max: 10.0e6,
            ramp_min: if e < 2 { -5.0e6 } else { -100.0e6 },
            ramp_max: if e < 2 { 5.0e6 } else { 100.0e6 },
            energy_capacity: if e < 2 { 1000.0e6 } else { 200.0e6 },
            soc_min: 0.1,
            soc_max: 0.8,
            alpha: if e < 2 { 1.0 } else { 2.0 },
            soc_init: 0.4 + 0.1 * e as f64,
            p_init: 0.0,
        })
        .collect();
    SystemSpec {
        loads,
        generators,
        ess,
        beta: 0.95,
        dt: 0.5,
        mission_steps: steps,
    }
}

fn window_solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("window_lp");
    group.sample_size(10);
    for &horizon in &[10usize, 20, 40] {
        let sys = bench_system(43, horizon);
        let trace = ScenarioTrace::from_system(&sys);
        let state = PlantState::initial(&sys);
        let w = ObjectiveWeights::new(0.005, 0.03, 0.05);
        let hp = build_horizon(&sys, &trace.window(0, horizon), &w, &state, horizon).unwrap();

        for parallel in [false, true] {
            // Force the fan-out on for the parallel arm regardless of the
            // production threshold; the comparison is the whole point.
            let opts = SolverOptions { parallel, parallel_threshold: 0 };
            let label = if parallel { "parallel" } else { "sequential" };
            group.bench_with_input(
                BenchmarkId::new(label, horizon),
                &hp.model.lp,
                |b, lp| b.iter(|| solve_lp_with(lp, &opts).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, window_solves);
criterion_main!(benches);
