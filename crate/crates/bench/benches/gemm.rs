use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use panelforge::rng::{random_matrix, Lcg64};
use panelforge::{
    gemm_blocked, gemm_naive, CacheSpec, Dims, ElemType, GemmPlan, MatrixView, MatrixViewMut,
    PackConfig, Variant,
};

const N: usize = 256;

fn operands() -> (Vec<f32>, Vec<f32>) {
    let mut rng = Lcg64::new(42);
    (random_matrix(N, N, &mut rng), random_matrix(N, N, &mut rng))
}

fn variants(c: &mut Criterion) {
    let dims = Dims::new(N, N, N).unwrap();
    let (a, b) = operands();
    let mut out = vec![0.0f32; N * N];
    let mut group = c.benchmark_group("variants");
    group.throughput(Throughput::Elements((2 * N * N * N) as u64));
    group.sample_size(20);
    group.bench_function("naive", |bench| {
        bench.iter(|| {
            let (av, bv) = (
                MatrixView::dense(&a, N, N).unwrap(),
                MatrixView::dense(&b, N, N).unwrap(),
            );
            gemm_naive(dims, av, bv, MatrixViewMut::dense(&mut out, N, N).unwrap()).unwrap();
        })
    });
    for v in Variant::ALL {
        let plan = GemmPlan::auto(v, ElemType::F32, dims, &CacheSpec::carmel()).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(v.name()),
            &plan,
            |bench, plan| {
                bench.iter(|| {
                    let (av, bv) = (
                        MatrixView::dense(&a, N, N).unwrap(),
                        MatrixView::dense(&b, N, N).unwrap(),
                    );
                    gemm_blocked(
                        plan,
                        dims,
                        av,
                        bv,
                        MatrixViewMut::dense(&mut out, N, N).unwrap(),
                    )
                    .unwrap();
                })
            },
        );
    }
    group.finish();
}

fn packing(c: &mut Criterion) {
    let dims = Dims::new(N, N, N).unwrap();
    let (a, b) = operands();
    let mut out = vec![0.0f32; N * N];
    let mut group = c.benchmark_group("packing");
    group.throughput(Throughput::Elements((2 * N * N * N) as u64));
    group.sample_size(20);
    for (name, pack) in [
        ("both", PackConfig::BOTH),
        ("a", PackConfig::A_ONLY),
        ("b", PackConfig::B_ONLY),
        ("none", PackConfig::NONE),
    ] {
        let mut plan =
            GemmPlan::auto(Variant::B3A2C0, ElemType::F32, dims, &CacheSpec::carmel()).unwrap();
        plan.pack = pack;
        group.bench_with_input(BenchmarkId::from_parameter(name), &plan, |bench, plan| {
            bench.iter(|| {
                let (av, bv) = (
                    MatrixView::dense(&a, N, N).unwrap(),
                    MatrixView::dense(&b, N, N).unwrap(),
                );
                gemm_blocked(
                    plan,
                    dims,
                    av,
                    bv,
                    MatrixViewMut::dense(&mut out, N, N).unwrap(),
                )
                .unwrap();
            })
        });
    }
    group.finish();
}

criterion_group!(benches, variants, packing);
criterion_main!(benches);
