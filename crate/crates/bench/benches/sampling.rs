use criterion::{criterion_group, criterion_main, Criterion};
use rkhs_radon::kernels::points_1d;
use rkhs_radon::radon::{grt_mc, AffineConditioning, FunctionalSpec};
use rkhs_radon::wiener::tail_mass;
use rkhs_radon::Kernel;

fn bench_sup(c: &mut Criterion) {
    let cond = AffineConditioning::unconditioned(Kernel::brownian_min(1.0).unwrap()).unwrap();
    let mut group = c.benchmark_group("grt_mc_sup");
    group.sample_size(10);
    for n in [100usize, 1000] {
        let grid = points_1d(&(1..=n).map(|i| i as f64 / n as f64).collect::<Vec<_>>()).unwrap();
        let f = FunctionalSpec::Sup { over: grid };
        group.bench_function(format!("grid{n}_10k"), |b| b.iter(|| grt_mc(&cond, &f, 10_000, 1).unwrap()));
    }
    group.finish();
}

fn bench_tail_mass(c: &mut Criterion) {
    c.bench_function("tail_mass/100k", |b| b.iter(|| tail_mass(100, 10, 0.1, 100_000, 1).unwrap()));
}

criterion_group!(benches, bench_sup, bench_tail_mass);
criterion_main!(benches);
