use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairalloc::analysis::{confidence_bounds, BoundsMode, BoundsModel};
use fairalloc::cutting::solve_sadr;
use fairalloc::presets::{azure_generator, azure_like};
use fairalloc::scenarios::{generate, sample_moments};
use fairalloc::{ambiguity::MomentAmbiguity, par, FairnessParams};

fn bench(c: &mut Criterion) {
    let (inst, _, _) = azure_like(4).unwrap();
    let params = FairnessParams::coupled(2.0, 0.95, 1e-4);
    let gen = azure_generator(4, true, 50, 3).unwrap();
    let sc = generate(&gen).unwrap();
    let (m, v) = sample_moments(&sc, None).unwrap();
    let set = MomentAmbiguity::from_moments(&m, &v, 0.2).unwrap();

    let mut g = c.benchmark_group("sadr_azure4_50");
    g.sample_size(10);
    for seq in [false, true] {
        let name = if seq { "sequential" } else { "parallel" };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| solve_sadr(&inst, &sc, &set, &params, 1).unwrap());
        });
    }
    g.finish();

    let mut g = c.benchmark_group("saa_bounds_azure4_50x5");
    g.sample_size(10);
    for seq in [false, true] {
        let name = if seq { "sequential" } else { "parallel" };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| {
                confidence_bounds(
                    &BoundsModel::Saa,
                    &inst,
                    &gen,
                    &params,
                    5,
                    BoundsMode::SaaPoint,
                )
                .unwrap()
            });
        });
    }
    g.finish();
    par::set_sequential(false);
}

criterion_group!(benches, bench);
criterion_main!(benches);
