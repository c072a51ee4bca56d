use approx::assert_relative_eq;
use coophunt::dispersion::sinc;
use coophunt::model;
use coophunt::ode::OdeOptions;
use coophunt::par::Exec;
use coophunt::params::{ModelParams, SpatialParams, State2};
use coophunt::pde::{
    convolve_kernel, make_noise_ic, make_step_ic, simulate, step, FieldState, Grid1D, InitialCondition, Laplacian, SimConfig, Simulator,
};
use coophunt::temporal::integrate_sampled;
use coophunt::Error;
use proptest::prelude::*;

fn config(spatial: SpatialParams, grid: Grid1D, t_end: f64, ic: InitialCondition) -> SimConfig {
    SimConfig {
        model: ModelParams::baseline(),
        spatial,
        grid,
        dt: 0.01,
        t_end,
        stride: 100,
        ic,
        laplacian: Laplacian::default(),
        exec: Exec::default(),
    }
}

fn noise(seed: u64) -> InitialCondition {
    InitialCondition::Noise { epsilon: 1e-3, seed }
}

fn mean(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

#[test]
fn pure_diffusion_conserves_mass_each_step() {
    let grid = Grid1D::new(50.0, 256).unwrap();
    for laplacian in [Laplacian::Central, Laplacian::Spectral] {
        let cfg = SimConfig {
            laplacian,
            ..config(SpatialParams::local(1.0, 10.0), grid, 1.0, noise(1))
        };
        let mut s = make_step_ic(&grid, State2::new(0.8, 3.0), State2::new(0.1, 0.5), 10.0).unwrap();
        let mut sim = Simulator::new(&cfg).unwrap().without_reaction();
        let (mut mu, mut mv) = (mean(&s.u), mean(&s.v));
        for _ in 0..100 {
            sim.step(&mut s).unwrap();
            let (nu, nv) = (mean(&s.u), mean(&s.v));
            assert!((nu - mu).abs() < 1e-12 * mu && (nv - mv).abs() < 1e-12 * mv);
            (mu, mv) = (nu, nv);
        }
        assert_eq!(sim.stats().clamps, 0, "{laplacian:?}");
    }
}

#[test]
fn homogeneous_state_follows_the_ode() {
    let p = ModelParams::baseline();
    let x0 = State2::new(0.3, 2.0);
    let times: Vec<f64> = (1..=5).map(|i| i as f64 * 4.0).collect();
    let ode = integrate_sampled(x0, &p, &times, &OdeOptions::with_tol(1e-12, 1e-14)).unwrap();
    for delta in [0.0, 10.0] {
        let cfg = SimConfig {
            dt: 1e-3,
            stride: 4000,
            ..config(SpatialParams::new(1.0, 10.0, delta), Grid1D::new(50.0, 64).unwrap(), 20.0, noise(0))
        };
        let mut sim = Simulator::new(&cfg).unwrap();
        let mut s = FieldState::homogeneous(64, x0);
        let mut seen = Vec::new();
        sim.run(&mut s, cfg.t_end, cfg.stride, |x| {
            seen.push(x.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), times.len() + 1);
        for (snap, want) in seen[1..].iter().zip(&ode.states) {
            assert!(snap.u.iter().all(|&u| u == snap.u[0]), "stays homogeneous");
            assert_relative_eq!(snap.u[0], want.u, max_relative = 1e-6);
            assert_relative_eq!(snap.v[0], want.v, max_relative = 1e-6);
        }
    }
}

#[test]
fn vanishing_kernel_matches_the_local_model() {
    let grid = Grid1D::new(50.0, 256).unwrap();
    let run = |delta: f64| {
        let cfg = config(SpatialParams::new(0.1, 10.0, delta), grid, 20.0, noise(3));
        simulate(&cfg).unwrap().snapshots.pop().unwrap()
    };
    let (a, b) = (run(0.0), run(1e-9));
    let worst = a.u.iter().chain(&a.v).zip(b.u.iter().chain(&b.v)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn noise_ic_is_seeded_and_centered() {
    let grid = Grid1D::new(100.0, 4096).unwrap();
    let p = ModelParams::baseline();
    let e = model::unique_interior(&p).unwrap().point;
    let eps = 1e-5;
    let a = make_noise_ic(&grid, &p, eps, 42).unwrap();
    assert_eq!(a, make_noise_ic(&grid, &p, eps, 42).unwrap());
    assert_ne!(a, make_noise_ic(&grid, &p, eps, 43).unwrap());
    let bound = 4.0 * eps / (grid.n as f64).sqrt();
    assert!((mean(&a.u) - e.u).abs() < bound);
    assert!((mean(&a.v) - e.v).abs() < bound);
    let sd = (a.u.iter().map(|x| (x - e.u).powi(2)).sum::<f64>() / grid.n as f64).sqrt();
    assert!((sd / eps - 1.0).abs() < 0.1, "{sd}");
    assert_eq!(a.time, 0.0);
}

#[test]
fn step_ic_layout() {
    let grid = Grid1D::new(100.0, 200).unwrap();
    let (inner, outer) = (State2::new(0.4, 5.0), State2::new(1.0, 0.0));
    let s = make_step_ic(&grid, inner, outer, 10.0).unwrap();
    for (j, x) in grid.positions().into_iter().enumerate() {
        let want = if x.abs() < 10.0 { inner } else { outer };
        assert_eq!((s.u[j], s.v[j]), (want.u, want.v), "x = {x}");
    }
    assert!(make_step_ic(&grid, inner, outer, 100.0).is_err());
    assert!(make_step_ic(&grid, State2::new(-1.0, 0.0), outer, 10.0).is_err());
}

#[test]
fn execution_modes_are_bitwise_identical() {
    let grid = Grid1D::new(200.0, 8192).unwrap();
    let run = |exec| {
        let cfg = SimConfig {
            exec,
            ..config(SpatialParams::new(0.05, 10.0, 20.0), grid, 5.0, noise(9))
        };
        simulate(&cfg).unwrap()
    };
    let (a, b) = (run(Exec::Sequential), run(Exec::Parallel));
    assert_eq!(a.stats, b.stats);
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert!(x.u.iter().zip(&y.u).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert!(x.v.iter().zip(&y.v).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn snapshots_follow_the_stride() {
    let grid = Grid1D::new(50.0, 128).unwrap();
    let cfg = SimConfig {
        stride: 30,
        ..config(SpatialParams::local(1.0, 10.0), grid, 1.0, noise(0))
    };
    let run = simulate(&cfg).unwrap();
    let times: Vec<f64> = run.snapshots.iter().map(|s| s.time).collect();
    assert_eq!(times.len(), 5);
    for (t, want) in times.iter().zip([0.0, 0.3, 0.6, 0.9, 1.0]) {
        assert_relative_eq!(*t, want, epsilon = 1e-12);
    }
    assert_eq!(run.stats.steps, 100);
    assert_eq!(cfg.total_steps(), 100);
}

#[test]
fn runaway_values_abort_and_keep_earlier_snapshots() {
    let grid = Grid1D::new(50.0, 128).unwrap();
    let ic = InitialCondition::Step {
        inner: State2::new(0.5, 2e8),
        outer: State2::new(0.5, 1.0),
        l1: 5.0,
    };
    let err = simulate(&config(SpatialParams::local(1.0, 10.0), grid, 1.0, ic)).unwrap_err();
    assert!(matches!(err.error, Error::SimulationBlowUp { .. }), "{err}");

    // A stiff explicit step diverges after a few snapshots.
    let cfg = SimConfig {
        dt: 60.0,
        t_end: 6000.0,
        stride: 1,
        ..config(SpatialParams::local(1.0, 10.0), grid, 1.0, noise(0))
    };
    let err = simulate(&cfg).unwrap_err();
    assert!(matches!(err.error, Error::SimulationBlowUp { .. } | Error::NonFinite { .. }), "{err}");
    assert!(!err.snapshots.is_empty());
}

#[test]
fn invalid_configs_are_rejected() {
    let grid = Grid1D::new(50.0, 128).unwrap();
    let ok = config(SpatialParams::local(1.0, 10.0), grid, 1.0, noise(0));
    for bad in [
        SimConfig { dt: 0.0, ..ok.clone() },
        SimConfig { t_end: -1.0, ..ok.clone() },
        SimConfig { stride: 0, ..ok.clone() },
        SimConfig { spatial: SpatialParams::new(1.0, 10.0, 80.0), ..ok.clone() },
    ] {
        assert!(matches!(Simulator::new(&bad), Err(Error::InvalidParameter { .. })));
    }
    assert!(Grid1D::new(50.0, 32).is_err());
    let mut sim = Simulator::new(&ok).unwrap();
    assert!(sim.step(&mut FieldState::homogeneous(64, State2::new(0.4, 5.0))).is_err());
}

#[test]
fn one_step_convenience_matches_the_stepper() {
    let grid = Grid1D::new(50.0, 128).unwrap();
    let cfg = config(SpatialParams::new(0.5, 10.0, 4.0), grid, 1.0, noise(5));
    let s0 = cfg.initial_state().unwrap();
    let a = step(&s0, &cfg).unwrap();
    let mut b = s0.clone();
    Simulator::new(&cfg).unwrap().step(&mut b).unwrap();
    assert_eq!(a, b);
    assert_relative_eq!(a.time, 0.01);
}

#[test]
fn kernel_averages_cosines_by_their_symbol() {
    let grid = Grid1D::new(100.0, 1024).unwrap();
    let xs = grid.positions();
    for (m, delta) in [(1usize, 3.0), (7, 13.0), (40, 50.0)] {
        let k = grid.wavenumber(m);
        let f: Vec<f64> = xs.iter().map(|x| (k * x).cos()).collect();
        let g = convolve_kernel(&f, delta, &grid).unwrap();
        for (gi, x) in g.iter().zip(&xs) {
            assert!((gi - sinc(k * delta) * (k * x).cos()).abs() < 1e-12);
        }
    }
    assert!(convolve_kernel(&xs, 0.0, &grid).is_err());
    assert!(convolve_kernel(&xs[..10], 1.0, &grid).is_err());
}

/// Smooth Turing-unstable run resolved on two meshes (dx and dt halved).
#[test]
fn mesh_refinement_changes_little() {
    let p = ModelParams::baseline();
    let e = model::unique_interior(&p).unwrap().point;
    let run = |n: usize, dt: f64| {
        let grid = Grid1D::new(50.0, n).unwrap();
        let cfg = SimConfig {
            dt,
            ..config(SpatialParams::local(0.12, 10.0), grid, 150.0, noise(0))
        };
        let xs = grid.positions();
        let bump = |x: f64| 1e-2 * ((0.4 * x).cos() + 0.5 * (0.26 * x + 0.3).sin().powi(2) * (std::f64::consts::PI * x / 50.0).cos());
        let mut s = FieldState {
            time: 0.0,
            u: xs.iter().map(|&x| e.u + bump(x)).collect(),
            v: vec![e.v; n],
        };
        Simulator::new(&cfg).unwrap().advance(&mut s, cfg.total_steps()).unwrap();
        s
    };
    let coarse = run(512, 0.01);
    let fine = run(1024, 0.005);
    let dev: f64 = coarse.u.iter().map(|c| (c - e.u).powi(2)).sum::<f64>().sqrt();
    let diff: f64 = coarse.u.iter().enumerate().map(|(j, c)| (c - fine.u[2 * j]).powi(2)).sum::<f64>().sqrt();
    assert!(dev > 1e-2, "pattern should have grown ({dev})");
    assert!(diff < 0.01 * coarse.u.iter().map(|c| c * c).sum::<f64>().sqrt(), "{diff} vs {dev}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_preserves_mean_and_is_linear(
        seed in any::<u64>(), delta in 0.5..40.0f64, a in -3.0..3.0f64,
    ) {
        let grid = Grid1D::new(50.0, 128).unwrap();
        let p = ModelParams::baseline();
        let f = make_noise_ic(&grid, &p, 1.0, seed).unwrap().u;
        let g = make_noise_ic(&grid, &p, 1.0, seed.wrapping_add(1)).unwrap().v;
        let cf = convolve_kernel(&f, delta, &grid).unwrap();
        prop_assert!((mean(&cf) - mean(&f)).abs() < 1e-12);
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + y).collect();
        let lhs = convolve_kernel(&combo, delta, &grid).unwrap();
        let cg = convolve_kernel(&g, delta, &grid).unwrap();
        for i in 0..grid.n {
            prop_assert!((lhs[i] - (a * cf[i] + cg[i])).abs() < 1e-11);
        }
    }

    #[test]
    fn fields_stay_non_negative(seed in any::<u64>(), delta in prop_oneof![Just(0.0), 1.0..20.0f64], l1 in 2.0..30.0f64) {
        let grid = Grid1D::new(50.0, 256).unwrap();
        let p = ModelParams::baseline();
        let e = model::unique_interior(&p).unwrap().point;
        let outer = if seed % 2 == 0 { State2::new(1.0, 0.0) } else { State2::new(0.0, p.beta / p.gamma) };
        let cfg = config(SpatialParams::new(1.0, 10.0, delta), grid, 10.0, InitialCondition::Step { inner: e, outer, l1 });
        let run = simulate(&cfg).unwrap();
        prop_assert_eq!(run.stats.clamps, 0);
        for s in &run.snapshots {
            prop_assert!(s.u.iter().chain(&s.v).all(|&x| x >= 0.0));
        }
    }
}

/// The spotty pattern regime on two meshes. Noise is drawn per node, so the
/// two runs differ pointwise; their L2 norms (∫u² dx)^½ must not.
#[test]
fn mesh_refinement_keeps_the_pattern_norm() {
    let norm = |n: usize, dt: f64| {
        let grid = Grid1D::new(100.0, n).unwrap();
        let cfg = SimConfig {
            dt,
            stride: 1_000_000,
            ..config(SpatialParams::local(0.01, 10.0), grid, 500.0, InitialCondition::Noise { epsilon: 1e-5, seed: 0 })
        };
        let run = simulate(&cfg).unwrap();
        assert_eq!(run.stats.clamps, 0);
        let s = run.snapshots.last().unwrap();
        (s.u.iter().map(|u| u * u).sum::<f64>() * grid.dx()).sqrt()
    };
    let coarse = norm(2048, 0.01);
    let fine = norm(4096, 0.005);
    assert!((coarse - fine).abs() < 0.01 * fine, "{coarse} vs {fine}");
}
