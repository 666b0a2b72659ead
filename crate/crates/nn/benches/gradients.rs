use criterion::{criterion_group, criterion_main, Criterion};
use guidedplan_nn::{loss_ssl_policy, loss_ssl_value, ApproximatorParams, NetworkConfig, PolicySample, ValueSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INPUT: usize = 96;
const ACTIONS: usize = 9;
const BATCH: usize = 256;

fn batch() -> (Vec<Vec<f64>>, Vec<usize>, Vec<(f64, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs = (0..BATCH)
        .map(|_| (0..INPUT).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let actions = (0..BATCH).map(|_| rng.random_range(0..ACTIONS)).collect();
    let values = (0..BATCH)
        .map(|_| (rng.random_range(-1.0..0.0), if rng.random_bool(0.1) { -5.0 } else { 0.0 }))
        .collect();
    (xs, actions, values)
}

fn losses(c: &mut Criterion) {
    let params = ApproximatorParams::new(INPUT, ACTIONS, &NetworkConfig::default(), 1);
    let (xs, actions, values) = batch();
    let policy: Vec<PolicySample> = xs
        .iter()
        .zip(&actions)
        .map(|(x, &action)| PolicySample { x, action })
        .collect();
    let value: Vec<ValueSample> = xs
        .iter()
        .zip(&values)
        .map(|(x, &(safe, collision))| ValueSample { x, safe, collision })
        .collect();
    let mut group = c.benchmark_group("batch_gradients");
    for parallel in [false, true] {
        let label = if parallel { "parallel" } else { "sequential" };
        group.bench_function(format!("policy/{label}"), |b| {
            b.iter(|| loss_ssl_policy(&params.policy, &policy, 0.1, parallel))
        });
        group.bench_function(format!("value/{label}"), |b| {
            b.iter(|| loss_ssl_value(&params.value, &value, parallel))
        });
    }
    group.finish();
}

criterion_group!(benches, losses);
criterion_main!(benches);
