use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use moebius::metatheory::{check_lemma_with, Lemma, Mode};

const SAMPLES: usize = 64;

fn schedules(c: &mut Criterion) {
    for lemma in [Lemma::Preservation, Lemma::CommutingSubst, Lemma::UnifySound, Lemma::RoundTrip] {
        let mut group = c.benchmark_group(lemma.name());
        group.sample_size(10);
        for (label, mode) in [("parallel", Mode::Parallel), ("sequential", Mode::Sequential)] {
            group.bench_with_input(BenchmarkId::new(label, SAMPLES), &mode, |b, &mode| {
                b.iter(|| check_lemma_with(lemma, SAMPLES, 11, mode))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, schedules);
criterion_main!(benches);
