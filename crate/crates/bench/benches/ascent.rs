use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use distbandit_core::rng::{substream, Lane};
use distbandit_core::*;
use std::hint::black_box;

fn instance(id: ScenarioId, wasserstein: bool) -> BanditInstance {
    let spec = if wasserstein {
        UtilitySpec::Wasserstein { reference: ArmLaw::uniform(0.0, 1.0).unwrap() }
    } else {
        UtilitySpec::Variance
    };
    BanditInstance::with_default_grid(ScenarioSpec::builtin(id, 0).unwrap().arms, spec).unwrap()
}

fn simplex_ops(c: &mut Criterion) {
    let fp = FloorParams::new(0.01, 30).unwrap();
    let w = Weights::from_unnormalized((1..=30).map(|i| (i as f64).powi(3)).collect()).unwrap();
    let g: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
    c.bench_function("mw_update_and_project_k30", |b| {
        b.iter(|| kl_project_floor(&mw_update(black_box(&w), black_box(&g), 0.5).unwrap(), &fp).unwrap())
    });
}

fn gradients(c: &mut Criterion) {
    for (name, wass) in [("variance", false), ("wasserstein", true)] {
        let inst = instance(ScenarioId::S4, wass);
        let w = Weights::uniform(inst.k());
        c.bench_function(&format!("exact_gc_s4_{name}"), |b| b.iter(|| inst.exact_gc(black_box(&w)).unwrap()));
    }
}

fn plugin_snapshot(c: &mut Criterion) {
    let inst = instance(ScenarioId::S2, true);
    let mut rng = substream(1, 0, Lane::Scenario);
    let mut state = PluginState::new(inst.k(), PriorConfig::default());
    for t in 0..2000 {
        let k = t % inst.k();
        state.record(k, inst.arms()[k].sample(&mut rng));
    }
    let w = Weights::uniform(inst.k());
    c.bench_function("plugin_snapshot_s2_wasserstein_2000_obs", |b| {
        b.iter(|| build_plugin_snapshot(black_box(&state), &w, &inst, 2000).unwrap())
    });
}

fn episodes(c: &mut Criterion) {
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    for (name, wass) in [("variance", false), ("wasserstein", true)] {
        let inst = instance(ScenarioId::S1, wass);
        let ustar = solve_offline(&inst, 0.03, &OracleOptions::default()).unwrap().ustar;
        for mode in [Mode::ExactIf, Mode::EstimatedIf] {
            let cfg = AscentConfig { horizon: 500, mode, bias_every: 0, ..AscentConfig::default() };
            group.bench_function(format!("s1_{name}_{}_T500", mode.label()), |b| {
                b.iter_batched(|| (), |_| run_episode(&cfg, &inst, ustar, 0, 0).unwrap(), BatchSize::SmallInput)
            });
        }
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for (name, wass) in [("variance", false), ("wasserstein", true)] {
        let inst = instance(ScenarioId::S3, wass);
        group.bench_function(format!("s3_{name}"), |b| b.iter(|| solve_offline(&inst, 0.03, &OracleOptions::default()).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, simplex_ops, gradients, plugin_snapshot, episodes, oracle);
criterion_main!(benches);
