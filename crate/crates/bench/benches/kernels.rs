use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oseen_bench::{bench_grid, vortex};
use oseen_core::comparable::truncate_field;
use oseen_core::cutoff::CutoffProfile;
use oseen_core::lorentz::{lp_norm, weak_lp_quasinorm};
use oseen_core::solver::{Mode, SimConfig, SimState, Solver};
use oseen_core::Spectral;

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for n in [128, 256] {
        let sp = Spectral::new(bench_grid(n));
        let v = vortex(&sp);
        g.bench_with_input(BenchmarkId::new("leray_project", n), &v, |b, v| b.iter(|| sp.leray_project(v)));
        g.bench_with_input(BenchmarkId::new("nonlinear_term", n), &v, |b, v| b.iter(|| sp.nonlinear_term(v)));
    }
    g.finish();
}

fn stepping(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    g.sample_size(20);
    let grid = bench_grid(256);
    let sp = Spectral::new(grid);
    let v = vortex(&sp);
    let plane = Solver::new(SimConfig::new(grid, Mode::Plane, 1e-3, 1.0).unwrap()).unwrap();
    let ext = Solver::new(SimConfig::new(grid, Mode::Exterior, 1e-3, 1.0).unwrap()).unwrap();
    let w = SimState::vorticity(0.0, sp.curl(&v));
    let u = SimState::velocity(0.0, v);
    g.bench_function("plane_256", |b| b.iter(|| plane.step_plane(&w, 1e-3).unwrap()));
    g.bench_function("exterior_256", |b| b.iter(|| ext.step_exterior(&u, 1e-3).unwrap()));
    g.finish();
}

fn norms(c: &mut Criterion) {
    let grid = bench_grid(256);
    let sp = Spectral::new(grid);
    let v = vortex(&sp);
    let f = CutoffProfile::new(grid).unwrap();
    c.bench_function("lp_norm_4_256", |b| b.iter(|| lp_norm(&v, 4.0).unwrap()));
    c.bench_function("weak_l2_256", |b| b.iter(|| weak_lp_quasinorm(&v, 2.0).unwrap()));
    c.bench_function("truncate_field_256", |b| b.iter(|| truncate_field(&sp, &v, &f).unwrap()));
}

criterion_group!(benches, spectral, stepping, norms);
criterion_main!(benches);
