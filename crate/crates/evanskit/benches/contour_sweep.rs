use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use evanskit::evalsys::assemble;
use evanskit::evans::{default_radii, evans_along, Contour, EvansSampler};
use evanskit::model::{Gnl2x2, Model};
use evanskit::profile::solve_profile;

fn sweep(c: &mut Criterion) {
    let model = Model::viscous(Gnl2x2::default());
    let eps = 0.2;
    let es = assemble(Arc::new(solve_profile(&model, eps, None).unwrap()), &model).unwrap();
    let (r_min, r_max) = default_radii(&es, eps);
    let sampler = EvansSampler::new(&es, 1e-9);
    let mut group = c.benchmark_group("contour_sweep");
    group.sample_size(10);
    for points in [32, 128] {
        let contour = Contour::half_annulus(r_min, r_max, points);
        for (label, jobs) in [("sequential", Some(1)), ("parallel", None)] {
            group.bench_with_input(BenchmarkId::new(label, points), &contour, |b, contour| {
                b.iter(|| evans_along(&sampler, black_box(&contour.points), jobs).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
