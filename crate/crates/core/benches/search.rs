use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use guidedplan_core::oracle::tiger::{HEAR_LEFT, LISTEN};
use guidedplan_core::oracle::TigerModel;
use guidedplan_core::{particle_bayes_update, run_search, Belief, DiscountSpec, SearchConfig, UniformProvider};

fn config(parallel: bool) -> SearchConfig {
    SearchConfig {
        scenario_count: 500,
        discount: DiscountSpec {
            gamma: 0.95,
            max_horizon: 30,
            search_depth: 8,
        },
        max_trials: Some(50),
        time_budget: None,
        parallel,
        ..SearchConfig::default()
    }
}

fn search(c: &mut Criterion) {
    let model = TigerModel::default();
    let belief = Belief::uniform(vec![0u8, 1]).unwrap();
    let provider = UniformProvider::new(3);
    let mut group = c.benchmark_group("tiger_search");
    for parallel in [false, true] {
        let cfg = config(parallel);
        let label = if parallel { "parallel" } else { "sequential" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &cfg, |b, cfg| {
            b.iter(|| run_search(&belief, &[HEAR_LEFT], cfg, &provider, &model, 11).unwrap())
        });
    }
    group.finish();
}

fn particle_filter(c: &mut Criterion) {
    let model = TigerModel::default();
    let belief = Belief::uniform(vec![0u8, 1]).unwrap();
    let mut group = c.benchmark_group("particle_update");
    for parallel in [false, true] {
        let label = if parallel { "parallel" } else { "sequential" };
        group.bench_function(label, |b| {
            b.iter(|| particle_bayes_update(&belief, LISTEN, &HEAR_LEFT, &model, 10_000, 3, parallel).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, search, particle_filter);
criterion_main!(benches);
