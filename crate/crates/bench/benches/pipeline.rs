//! Criterion benchmarks for the hot paths: environment stepping, the
//! exact dynamic-programming solver and one minibatch gradient step.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use evqn_core::battery::BatteryModel;
use evqn_core::data::{synth_generate, SynthProfile};
use evqn_core::env::{Action, Env, EnvConfig, FeatureScaling};
use evqn_core::learner::{BatchItem, Gradients, Mlp};
use evqn_core::oracle::dp_optimal;
use evqn_core::stats::BehaviorStats;
use evqn_core::tariff::TariffSchedule;

fn bench_env_rollout(c: &mut Criterion) {
    let episodes = synth_generate(17, 1, 30, &SynthProfile::default()).unwrap();
    let tariff = TariffSchedule::austin_2018();
    let stats = BehaviorStats::build(&episodes, &tariff, 0.1).unwrap();
    let config = EnvConfig::default();
    let battery = BatteryModel::default();
    let mut env = Env::new(&episodes[0], &stats, &config, &battery, &tariff).unwrap();
    c.bench_function("env_full_day_rollout", |b| {
        b.iter(|| {
            env.reset();
            let mut total = 0.0;
            for t in 0..96 {
                let a = if t % 3 == 0 { Action::Charge } else { Action::Idle };
                total += env.step(a).unwrap().reward;
            }
            black_box(total)
        })
    });
}

fn bench_dp_optimal(c: &mut Criterion) {
    let episodes = synth_generate(23, 1, 30, &SynthProfile::default()).unwrap();
    let tariff = TariffSchedule::austin_2018();
    let stats = BehaviorStats::build(&episodes, &tariff, 0.1).unwrap();
    let config = EnvConfig::default();
    let battery = BatteryModel::default();
    let env = Env::new(&episodes[0], &stats, &config, &battery, &tariff).unwrap();
    c.bench_function("dp_optimal_full_day", |b| {
        b.iter(|| black_box(dp_optimal(&env, 0.99)))
    });
}

fn bench_gradient_step(c: &mut Criterion) {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let net = Mlp::init(&[7, 64, 64, 2], &mut rng).unwrap();
    let states: Vec<Vec<f64>> = (0..64)
        .map(|_| (0..7).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let batch: Vec<BatchItem> = states
        .iter()
        .enumerate()
        .map(|(i, s)| BatchItem {
            state: s,
            action: i % 2,
            target: (i as f64).sin(),
        })
        .collect();
    let mut grads = Gradients::zeros_like(&net);
    let mut ws = net.workspace();
    c.bench_function("minibatch_64_backward", |b| {
        b.iter(|| black_box(net.loss_and_gradients(&batch, &mut grads, &mut ws).unwrap()))
    });
}

fn bench_feature_scaling(c: &mut Criterion) {
    let episodes = synth_generate(29, 3, 120, &SynthProfile::default()).unwrap();
    let tariff = TariffSchedule::austin_2018();
    c.bench_function("stats_and_scaling_from_360_days", |b| {
        b.iter(|| {
            let stats = BehaviorStats::build(&episodes, &tariff, 0.1).unwrap();
            let scaling = FeatureScaling::from_episodes(&episodes, &tariff);
            black_box((stats, scaling))
        })
    });
}

criterion_group!(
    benches,
    bench_env_rollout,
    bench_dp_optimal,
    bench_gradient_step,
    bench_feature_scaling
);
criterion_main!(benches);
