//! Compares element-loop throughput on the default rayon pool against a
//! single-thread pool.
//!
//! Run with `cargo bench -p macrostokes --features parallel`.  The parallel
//! paths collect per-cell contributions in order and merge sequentially, so
//! the outputs are bitwise identical to the serial ones; only the map over
//! cells is distributed.

use criterion::{criterion_group, criterion_main, Criterion};
use macrostokes::assembly::{assemble_load, assemble_stiffness, error_norms};
use macrostokes::dofs::DofMap;
use macrostokes::manufactured::{ManufacturedSolution, ProblemId};
use macrostokes::mesh::build_structured_square;
use macrostokes::quadrature::QuadratureRule;
use macrostokes::split::powell_sabin_split;

fn bench_assembly(c: &mut Criterion) {
    let sm = powell_sabin_split(&build_structured_square(24).unwrap()).unwrap();
    let dofs = DofMap::new(&sm);
    let ms = ManufacturedSolution::new(ProblemId::Ps2d, 1.0);
    let rule = QuadratureRule::triangle_degree6();
    let serial_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool");

    let mut group = c.benchmark_group("assembly_n24");
    group.bench_function("stiffness_parallel", |b| {
        b.iter(|| assemble_stiffness(&sm, &dofs, 1.0))
    });
    group.bench_function("stiffness_serial", |b| {
        b.iter(|| serial_pool.install(|| assemble_stiffness(&sm, &dofs, 1.0)))
    });
    group.bench_function("load_parallel", |b| {
        b.iter(|| assemble_load(&sm, &dofs, |p| ms.source(p), &rule))
    });
    group.bench_function("load_serial", |b| {
        b.iter(|| serial_pool.install(|| assemble_load(&sm, &dofs, |p| ms.source(p), &rule)))
    });
    group.finish();

    let mut group = c.benchmark_group("norms_n24");
    let free = vec![0.0; dofs.n_velocity];
    let p = vec![0.0; dofs.n_pressure_raw];
    group.bench_function("error_norms_parallel", |b| {
        b.iter(|| error_norms(&sm, &dofs, &free, &p, &ms, &rule))
    });
    group.bench_function("error_norms_serial", |b| {
        b.iter(|| serial_pool.install(|| error_norms(&sm, &dofs, &free, &p, &ms, &rule)))
    });
    group.finish();

    // sanity: identical results with and without the pool
    let par = assemble_stiffness(&sm, &dofs, 1.0);
    let ser = serial_pool.install(|| assemble_stiffness(&sm, &dofs, 1.0));
    assert!(par.same_pattern(&ser));
    assert_eq!(par.max_abs_diff(&ser), 0.0);
}

criterion_group!(benches, bench_assembly);
criterion_main!(benches);
