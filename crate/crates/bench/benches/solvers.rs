use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rdm_bench::{curve, quadratic_source, toy_layer_set};
use rdm_core::task_appropriateness::Metric;
use rdm_core::theorem_suite::{check_instance, generate_instance};
use rdm_core::{bd_rate, compute_report, rate_at, sweep, Fit, RdSolverConfig, TheoremId};

fn blahut_arimoto(c: &mut Criterion) {
    let config = RdSolverConfig::default();
    let mut group = c.benchmark_group("sweep");
    for n in [4, 8, 16] {
        let (p, d) = quadratic_source(n, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| sweep(&p, &d, &config).unwrap()));
    }
    group.finish();

    let (p, d) = quadratic_source(8, 8);
    c.bench_function("rate_at/8", |b| b.iter(|| rate_at(&p, &d, 0.01, &config).unwrap()));
}

fn theorem_checks(c: &mut Criterion) {
    let config = RdSolverConfig::default();
    let instance = generate_instance(&TheoremId::Thm1.default_spec(2)).unwrap();
    c.bench_function("check/thm1", |b| b.iter(|| check_instance(TheoremId::Thm1, &instance, 5, 2, &config).unwrap()));
}

fn appropriateness(c: &mut Criterion) {
    let set = toy_layer_set(100_000);
    c.bench_function("compute_report/toy_1e5", |b| b.iter(|| compute_report(&set, Metric::Mse).unwrap()));
}

fn bd(c: &mut Criterion) {
    let (anchor, test) = (curve(1.0), curve(1.3));
    c.bench_function("bd_rate/cubic", |b| b.iter(|| bd_rate(&anchor, &test, Fit::Cubic).unwrap()));
    c.bench_function("bd_rate/pchip", |b| b.iter(|| bd_rate(&anchor, &test, Fit::Pchip).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = blahut_arimoto, theorem_checks, appropriateness, bd
}
criterion_main!(benches);
