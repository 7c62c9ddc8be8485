use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use enercoop_bench::busy_roles;
use enercoop_core::allocation::{allocate, AllocationInput};
use enercoop_core::{ControlParam, Policy, PrioritySet, SimConfig, VirtualQueues};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn allocation(c: &mut Criterion) {
    let cfg = SimConfig::default();
    let grid = cfg.grid().unwrap();
    let loss = cfg.loss_model(&grid).unwrap();
    let n = cfg.station_count();
    let roles = busy_roles(n);
    let consumption = vec![15_000.0; n];
    let input = AllocationInput {
        grid: &grid,
        loss: &loss,
        roles: &roles,
        consumption_j: &consumption,
    };
    let priority = PrioritySet::default();
    let queues = VirtualQueues::new(n);
    let lambda = ControlParam::new(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for policy in [Policy::Lyapunov, Policy::Radial, Policy::Random] {
        c.bench_function(&format!("allocate_{}", policy.name()), |b| {
            b.iter(|| allocate(policy, black_box(&input), &priority, &queues, lambda, &mut rng))
        });
    }
}

criterion_group!(benches, allocation);
criterion_main!(benches);
