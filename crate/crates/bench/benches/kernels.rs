use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use forward_ec::kernels::assemble_direction;
use forward_ec::{DirectionLaw, GradientFrame, KernelSpec, OrthogonalKernel, OrthogonalVariant, ParallelKernel};
use forward_ec_bench::{direction, gradient, rng, DIMS};

fn kernels(c: &mut Criterion) {
    let law = DirectionLaw::UniformSphere;
    let specs = [
        ("bps", KernelSpec::bps(law)),
        (
            "direct+switch",
            KernelSpec::new(ParallelKernel::Direct, OrthogonalKernel::positive(OrthogonalVariant::Switch), law),
        ),
        (
            "direct+full",
            KernelSpec::new(ParallelKernel::Direct, OrthogonalKernel::naive(OrthogonalVariant::Full), law),
        ),
    ];
    let mut group = c.benchmark_group("assemble_direction");
    for dim in DIMS {
        let mut r = rng(dim as u64);
        let frame = GradientFrame::new(&gradient(dim, &mut r)).unwrap();
        let y = direction(dim, &mut r);
        let mut out = vec![0.0; dim];
        for (name, spec) in &specs {
            group.bench_with_input(BenchmarkId::new(*name, dim), &dim, |b, _| {
                b.iter(|| {
                    assemble_direction(spec, &frame, &y, &mut out, &mut r).unwrap();
                    black_box(&out);
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
