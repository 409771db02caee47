use criterion::{criterion_group, criterion_main, Criterion};
use sdcalc_bench::{helix_tube, scalar_field, torus, torus_points, vector_field};
use sdcalc_core::asymptotics::{LayerFields, LayerGeometry, LayerOp, LayerPoint};
use sdcalc_core::{Collar, Projector, ScalarField, SurfaceOp, TubeOp};
use std::hint::black_box;

fn projection(c: &mut Criterion) {
    let chart = torus();
    let pts = torus_points(64);
    let proj = Projector::new(&chart);
    c.bench_function("project 64 points onto a torus", |b| {
        b.iter(|| pts.iter().map(|x| proj.project(black_box(x)).unwrap().sigma).sum::<f64>())
    });
    let near = proj.project(&pts[0]).unwrap();
    c.bench_function("project near a known foot", |b| b.iter(|| proj.project_near(black_box(&pts[0]), near.s).unwrap()));
}

fn surface_ops(c: &mut Criterion) {
    let chart = torus();
    let (f, u) = (scalar_field(), vector_field());
    c.bench_function("collar setup", |b| b.iter(|| Collar::at(&chart, black_box([0.7, 1.9]), 0.2).unwrap()));
    let collar = Collar::at(&chart, [0.7, 1.9], 0.2).unwrap();
    let mut g = c.benchmark_group("surface operator");
    for (op, field) in [(SurfaceOp::Laplacian, &f), (SurfaceOp::Hessian, &f), (SurfaceOp::VectorLaplacian, &u), (SurfaceOp::Curl, &u)] {
        g.bench_function(op.name(), |b| b.iter(|| collar.apply(op, black_box(field)).unwrap()));
    }
    g.finish();
}

fn tube_ops(c: &mut Criterion) {
    let tube = helix_tube();
    let (f, u) = (scalar_field(), vector_field());
    let mut g = c.benchmark_group("tube operator");
    for (op, field) in [(TubeOp::Laplacian, &f), (TubeOp::VectorLaplacian, &u)] {
        g.bench_function(op.name(), |b| b.iter(|| op.apply(&tube, Some(field), black_box(1.3), 0.4, 0.3).unwrap()));
    }
    g.finish();
    c.bench_function("bishop angle lookup", |b| b.iter(|| tube.bishop.phi(black_box(2.345)).unwrap()));
}

fn expansion(c: &mut Criterion) {
    let chart = torus();
    let fields = LayerFields::scalar(ScalarField::parse("xi*xi*cos(s1 + s2) + xi*sin(s2)").unwrap());
    let pt = LayerPoint::new([0.7, 1.9], 0.7);
    let geo = LayerGeometry::Surface(&chart);
    c.bench_function("laplacian series to order 2", |b| {
        b.iter(|| geo.expand(LayerOp::ScalarLap, black_box(&fields), &pt, 2).unwrap())
    });
}

criterion_group!(kernels, projection, surface_ops, tube_ops, expansion);
criterion_main!(kernels);
