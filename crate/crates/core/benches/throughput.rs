use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mortstat::media::{phrase_scan_with, Document};
use mortstat::par::Execution;
use mortstat::sim::{bias_experiment_with, SimConfig};
use std::hint::black_box;

fn modes() -> Vec<(&'static str, Execution)> {
    #[cfg_attr(not(feature = "parallel"), allow(unused_mut))]
    let mut v = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Execution::Parallel));
    v
}

fn bias(c: &mut Criterion) {
    let config = SimConfig {
        n_positive: 500,
        n_negative: 500,
        baseline_hazard: 0.01,
        hazard_ratio_true: 1.5,
        asymptomatic_fraction: 0.4,
        asymptomatic_hazard_multiplier: 0.2,
        follow_up_days: 180.0,
        seed: 2020,
        certificate_fraction: 0.0,
    };
    let replicates = 32;
    let mut group = c.benchmark_group("bias_experiment");
    group.sample_size(10);
    group.throughput(Throughput::Elements(replicates as u64));
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, replicates), &exec, |b, &exec| {
            b.iter(|| bias_experiment_with(exec, black_box(&config), replicates).unwrap())
        });
    }
    group.finish();
}

fn corpus(n: usize) -> Vec<Document> {
    let filler = "officials reported new figures today and the count of deaths with covid rose again; ";
    (0..n)
        .map(|i| {
            let mut text = filler.repeat(40);
            match i % 3 {
                0 => text.push_str("Deaths FROM Covid were also noted."),
                1 => text.push_str("deaths of covid"),
                _ => {}
            }
            Document {
                publisher: format!("publisher{}", i % 16),
                bytes: text.into_bytes(),
            }
        })
        .collect()
}

fn scan(c: &mut Criterion) {
    let docs = corpus(4000);
    let bytes: usize = docs.iter().map(|d| d.bytes.len()).sum();
    let mut group = c.benchmark_group("phrase_scan");
    group.throughput(Throughput::Bytes(bytes as u64));
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, docs.len()), &exec, |b, &exec| {
            b.iter(|| phrase_scan_with(exec, black_box(&docs)))
        });
    }
    group.finish();
}

criterion_group!(benches, bias, scan);
criterion_main!(benches);
