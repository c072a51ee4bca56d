use coophunt::dispersion::turing_curve;
use coophunt::par::Exec;
use coophunt::params::{ModelParams, SpatialParams};
use coophunt::pde::{Grid1D, InitialCondition, Laplacian, SimConfig, Simulator};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn pde_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("pde_100_steps");
    group.sample_size(10);
    for n in [4096usize, 32768] {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let cfg = SimConfig {
                model: ModelParams::baseline(),
                spatial: SpatialParams::new(1.0, 10.0, 10.0),
                grid: Grid1D::new(200.0, n).unwrap(),
                dt: 0.01,
                t_end: 1.0,
                stride: 100,
                ic: InitialCondition::Noise { epsilon: 1e-3, seed: 0 },
                laplacian: Laplacian::default(),
                exec,
            };
            let init = cfg.initial_state().unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &cfg, |b, cfg| {
                let mut sim = Simulator::new(cfg).unwrap();
                b.iter(|| {
                    let mut s = init.clone();
                    sim.advance(&mut s, 100).unwrap();
                    s
                })
            });
        }
    }
    group.finish();
}

fn turing_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("turing_curve_64");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| turing_curve(&ModelParams::baseline(), 10.0, 50.0, (0.01, 0.5), 64, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pde_steps, turing_sweep);
criterion_main!(benches);
