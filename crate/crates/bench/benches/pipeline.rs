use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rbmortar_core::discretize::AffineSystem;
use rbmortar_core::material::ParamId;
use rbmortar_core::reduced::{greedy_enrich, pod_init, solve_reduced};
use rbmortar_core::{
    build_test_geometry, Aggregation, DetailedModel, GreedyConfig, ParameterBox, ParameterSample, TestGeometry,
};

fn study_box() -> ParameterBox {
    ParameterBox::p1()
        .with_range(ParamId::Thickness, 0.5, 2.0)
        .restricted_to(&[ParamId::EY, ParamId::GXy, ParamId::Thickness], &ParameterSample::reference())
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    for geometry in [TestGeometry::Slab2, TestGeometry::Bracket3] {
        let model = build_test_geometry(geometry).unwrap();
        g.bench_function(geometry.name(), |b| b.iter(|| AffineSystem::assemble(black_box(&model)).unwrap()));
    }
    g.finish();
}

fn detailed_solve(c: &mut Criterion) {
    let detailed = DetailedModel::new(build_test_geometry(TestGeometry::Bracket3).unwrap()).unwrap();
    let mu = ParameterSample::reference().with_thickness(1.3);
    let mut g = c.benchmark_group("detailed_solve");
    g.sample_size(10);
    g.bench_function("bracket3_k5", |b| b.iter(|| detailed.solve(black_box(&mu), 5).unwrap()));
    g.finish();
}

fn online_query(c: &mut Criterion) {
    let detailed = DetailedModel::new(build_test_geometry(TestGeometry::Bracket3).unwrap()).unwrap();
    let bx = study_box();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = GreedyConfig {
        k: 5,
        training: bx.sample_many(60, &mut rng).unwrap(),
        n_init: 25,
        n_max: 60,
        tolerance: 0.0,
        aggregation: Aggregation::Relative,
        stability: 1.0,
        seed: 1,
        reference: ParameterSample::reference(),
    };
    let rm = greedy_enrich(&detailed, pod_init(&detailed, &cfg).unwrap(), &cfg).unwrap();
    let mut g = c.benchmark_group("online");
    g.bench_function("bracket3_n60_k5", |b| {
        b.iter_batched(
            || bx.sample(&mut rng).unwrap(),
            |mu| {
                let pairs = solve_reduced(&rm, &mu, 5).unwrap();
                rm.estimate(&mu, &pairs).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, assembly, detailed_solve, online_query);
criterion_main!(benches);
