use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use taskdecomp::decomposability::decomposability_report;
use taskdecomp::exec::Execution;
use taskdecomp::testkit::{differential_suite, gen_scenario, GenParams};

const STRATEGIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn suite(c: &mut Criterion) {
    let params = GenParams {
        agent_count: 3,
        ..GenParams::default()
    };
    let mut group = c.benchmark_group("differential_suite");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new(name, 64), &exec, |b, &exec| {
            b.iter(|| differential_suite(&params, 64, exec).unwrap())
        });
    }
    group.finish();
}

fn report(c: &mut Criterion) {
    let params = GenParams {
        agent_count: 4,
        max_states: 12,
        max_events: 6,
        ..GenParams::default()
    };
    let s = gen_scenario(&params).unwrap();
    let mut group = c.benchmark_group("decomposability_report");
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new(name, "4 agents"), &exec, |b, &exec| {
            b.iter(|| decomposability_report(s.task(), s.sets(), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, suite, report);
criterion_main!(benches);
