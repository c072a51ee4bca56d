use std::io::{self, Write};

use coophunt::bifurcation::{
    branch_diagram, hopf_criticality, hopf_thresholds_in, saddle_node_scan, transcritical_threshold, BranchOptions, CriticalityOptions,
    CriticalityReport, ThresholdResult,
};
use coophunt::dispersion::{
    dispersion as dispersion_curve, turing_curve as turing_sweep, turing_threshold_local, turing_threshold_nonlocal, wavespeed_boundary,
    wavespeed_coexistence, write_turing_curve_csv, WaveSpeedPrediction, WaveTarget,
};
use coophunt::model::{self, EquilibriumReport};
use coophunt::pde::{InitialCondition, SimConfig, SimStats, Simulator};
use coophunt::temporal::{detect_limit_cycle, trace_heteroclinic, CycleOptions, Direction, HeteroclinicOptions, LimitCycleReport, Source, Terminal};
use coophunt::waves::{estimate_speed, tail_len, Classification, Field, FrontTrack, RegimeAccumulator, Side, SpeedEstimate};
use coophunt::{Parameter, State2};
use serde::Serialize;

use crate::config::{BifurcateConfig, DispersionConfig, EquilibriaConfig, SimulateConfig, TuringCurveConfig, WaveSpeedConfig};
use crate::output::RunDir;
use crate::{CliError, Ctx};

fn write_row(w: &mut dyn Write, head: &str, xs: &[f64]) -> io::Result<()> {
    w.write_all(head.as_bytes())?;
    for x in xs {
        write!(w, ",{x}")?;
    }
    w.write_all(b"\n")
}

fn write_equilibria_csv(w: &mut dyn Write, eqs: &[EquilibriumReport]) -> io::Result<()> {
    writeln!(w, "kind,u,v,j11,j12,j21,j22,eig1_re,eig1_im,eig2_re,eig2_im,stability")?;
    for e in eqs {
        let j = &e.jacobian;
        let [l1, l2] = e.eigenvalues;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            e.kind.label(),
            e.point.u,
            e.point.v,
            j.a11(),
            j.a12(),
            j.a21(),
            j.a22(),
            l1.re,
            l1.im,
            l2.re,
            l2.im,
            e.stability.label()
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CycleRecord {
    seed: State2,
    direction: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<LimitCycleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct HeteroclinicRecord {
    source: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    launch: Option<State2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terminal: Option<Terminal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closest_to_e1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn equilibria(cfg: &EquilibriaConfig, dir: &mut RunDir, ctx: &Ctx) -> Result<(), CliError> {
    let p = &cfg.model;
    p.validate()?;
    let eqs = model::all_equilibria(p);
    dir.write_with("equilibria.csv", |w| write_equilibria_csv(w, &eqs))?;
    for e in &eqs {
        ctx.say(format!("  {:<3} ({:.6}, {:.6}) {}", e.kind.label(), e.point.u, e.point.v, e.stability));
    }

    if !cfg.cycles.is_empty() {
        let star = model::unique_interior(p)?.point;
        let records: Vec<CycleRecord> = cfg
            .cycles
            .iter()
            .map(|c| {
                let seed = State2::new(c.u_factor * star.u, c.v_factor * star.v);
                let r = detect_limit_cycle(p, seed, c.direction, &CycleOptions::with_budget(c.t_budget));
                if let Ok(rep) = &r {
                    ctx.say(format!("  cycle from {:?} seed: exists {}, period {:.4}", c.direction, rep.exists, rep.period));
                }
                CycleRecord {
                    seed,
                    direction: c.direction,
                    error: r.as_ref().err().map(|e| e.to_string()),
                    report: r.ok(),
                }
            })
            .collect();
        dir.write_json("cycles.json", &records)?;
    }

    if let Some(h) = &cfg.heteroclinic {
        let opts = HeteroclinicOptions {
            t_budget: h.t_budget,
            ..HeteroclinicOptions::default()
        };
        let mut records = Vec::new();
        for &src in &h.sources {
            match trace_heteroclinic(src, p, h.offset, &opts) {
                Ok(rep) => {
                    let name = format!("heteroclinic_{src:?}.csv");
                    dir.write_with(&name, |w| rep.trajectory.write_csv(w))?;
                    ctx.say(format!("  orbit from {src:?} ends at {:?}", rep.terminal));
                    records.push(HeteroclinicRecord {
                        source: src,
                        launch: Some(rep.launch),
                        terminal: Some(rep.terminal),
                        closest_to_e1: Some(rep.closest_to_e1),
                        trajectory_file: Some(name),
                        error: None,
                    });
                }
                Err(e) => records.push(HeteroclinicRecord {
                    source: src,
                    launch: None,
                    terminal: None,
                    closest_to_e1: None,
                    trajectory_file: None,
                    error: Some(e.to_string()),
                }),
            }
        }
        dir.write_json("heteroclinic.json", &records)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ThresholdRecord {
    #[serde(flatten)]
    threshold: ThresholdResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    criticality: Option<CriticalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    criticality_error: Option<String>,
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<(), CliError> {
    if lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must satisfy 0 < lo < hi, got ({lo}, {hi})")))
    }
}

pub fn bifurcate(cfg: &BifurcateConfig, dir: &mut RunDir, ctx: &Ctx) -> Result<(), CliError> {
    let p = &cfg.model;
    let b = &cfg.bifurcate;
    p.validate()?;
    check_range("bifurcate.range", b.range)?;

    let opts = BranchOptions {
        cycle: CycleOptions::with_budget(b.cycle_budget),
        refine: b.refine,
        exec: ctx.exec,
    };
    let diagram = branch_diagram(p, b.parameter, b.range, b.points, &opts)?;
    dir.write_with("branch.csv", |w| diagram.write_csv(w))?;

    let mut found: Vec<ThresholdResult> = hopf_thresholds_in(p, b.parameter, b.range, b.hopf_samples);
    if let Ok(tc) = transcritical_threshold(p, b.parameter) {
        if tc.value >= b.range.0 && tc.value <= b.range.1 {
            found.push(tc);
        }
    }
    if b.parameter == Parameter::Alpha {
        found.extend(saddle_node_scan(p, b.range, 4000)?);
    }
    found.sort_by(|x, y| x.value.total_cmp(&y.value));

    let copts = CriticalityOptions {
        cycle: CycleOptions::with_budget(b.criticality_budget),
        ..CriticalityOptions::with_offset(b.criticality_offset)
    };
    let records: Vec<ThresholdRecord> = found
        .into_iter()
        .map(|th| {
            let crit = (b.criticality && th.kind == coophunt::bifurcation::ThresholdKind::Hopf).then(|| hopf_criticality(p, &th, &copts));
            let (criticality, criticality_error) = match crit {
                Some(Ok(r)) => (Some(r), None),
                Some(Err(e)) => (None, Some(e.to_string())),
                None => (None, None),
            };
            ctx.say(format!(
                "  {:?} at {} = {:.9}{}",
                th.kind,
                th.parameter,
                th.value,
                criticality.as_ref().map(|r| format!(" ({:?})", r.criticality)).unwrap_or_default()
            ));
            ThresholdRecord {
                threshold: th,
                criticality,
                criticality_error,
            }
        })
        .collect();
    dir.write_json("thresholds.json", &records)
}

#[derive(Serialize)]
struct TuringRecord {
    delta: f64,
    d2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    d1_critical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_critical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    /// Fastest-growing sampled mode for the configured d1.
    most_unstable_k: Option<f64>,
    most_unstable_growth: Option<f64>,
}

pub fn dispersion(cfg: &DispersionConfig, dir: &mut RunDir, ctx: &Ctx) -> Result<(), CliError> {
    let (p, sp, d) = (&cfg.model, &cfg.spatial, &cfg.dispersion);
    if !(d.k_max > 0.0 && d.k_max.is_finite()) || d.points < 2 {
        return Err(CliError::Config(format!(
            "dispersion needs k_max > 0 and points >= 2, got {} and {}",
            d.k_max, d.points
        )));
    }
    let ks: Vec<f64> = (0..d.points).map(|i| d.k_max * i as f64 / (d.points - 1) as f64).collect();
    let curve = dispersion_curve(p, sp, &ks)?;
    dir.write_with("dispersion.csv", |w| curve.write_csv(w))?;

    let th = if sp.delta > 0.0 {
        turing_threshold_nonlocal(p, sp.d2, sp.delta)
    } else {
        turing_threshold_local(p, sp.d2)
    };
    let best = curve.most_unstable();
    let rec = TuringRecord {
        delta: sp.delta,
        d2: sp.d2,
        d1_critical: th.as_ref().ok().map(|t| t.d1_critical),
        k_critical: th.as_ref().ok().map(|t| t.k_critical),
        error: th.as_ref().err().map(|e| e.to_string()),
        most_unstable_k: best.map(|s| s.k),
        most_unstable_growth: best.map(|s| s.growth()),
    };
    match (&rec.d1_critical, &rec.error) {
        (Some(d1c), _) => ctx.say(format!("  d1c = {d1c:.9}, k_c = {:.9}", rec.k_critical.unwrap_or(f64::NAN))),
        (None, Some(e)) => ctx.say(format!("  no threshold: {e}")),
        _ => {}
    }
    dir.write_json("turing.json", &rec)
}

pub fn turing_curve(cfg: &TuringCurveConfig, dir: &mut RunDir, ctx: &Ctx) -> Result<(), CliError> {
    let t = &cfg.turing_curve;
    check_range("turing_curve.alpha_range", t.alpha_range)?;
    let pts = turing_sweep(&cfg.model, t.d2, t.delta, t.alpha_range, t.points, ctx.exec)?;
    ctx.say(format!(
        "  {} points, {} without a threshold",
        pts.len(),
        pts.iter().filter(|x| x.d1_critical.is_none()).count()
    ));
    dir.write_with("turing_curve.csv", |w| write_turing_curve_csv(&pts, w))
}

#[derive(Serialize)]
struct RunStats {
    #[serde(flatten)]
    stats: SimStats,
    snapshots: usize,
    snapshots_written: usize,
    completed: bool,
}

#[derive(Serialize)]
struct ClassificationRecord {
    tail_fraction: f64,
    #[serde(flatten)]
    classification: Classification,
    label_text: &'static str,
}

pub fn simulate(cfg: &SimulateConfig, dir: &mut RunDir, ctx: &Ctx) -> Result<(), CliError> {
    let o = &cfg.output;
    if o.snapshot_every == 0 || !(o.tail_fraction > 0.0 && o.tail_fraction <= 1.0) {
        return Err(CliError::Config(format!(
            "output needs snapshot_every >= 1 and tail_fraction in (0, 1], got {} and {}",
            o.snapshot_every, o.tail_fraction
        )));
    }
    let sim_cfg = SimConfig {
        model: cfg.model,
        spatial: cfg.spatial,
        grid: cfg.grid,
        dt: cfg.dt,
        t_end: cfg.t_end,
        stride: cfg.stride,
        ic: cfg.ic,
        laplacian: cfg.laplacian,
        exec: ctx.exec,
    };
    let mut sim = Simulator::new(&sim_cfg)?;
    let mut state = sim_cfg.initial_state()?;

    // Same count the stepper produces: the initial state, one per stride, and the last.
    let steps = sim_cfg.total_steps();
    let count = 1 + steps.div_ceil(cfg.stride.max(1) as u64) as usize;
    let tail_from = count - tail_len(count, o.tail_fraction);

    let xs = cfg.grid.positions();
    let mut uf = dir.open("u.csv")?;
    let mut vf = dir.open("v.csv")?;
    let mut io_err: Option<io::Error> = None;
    for f in [&mut uf, &mut vf] {
        if let Err(e) = write_row(f.writer(), "t", &xs) {
            io_err.get_or_insert(e);
        }
    }
    let mut acc = RegimeAccumulator::new(cfg.grid.n);
    let (mut index, mut written) = (0usize, 0usize);
    let outcome = sim.run(&mut state, cfg.t_end, cfg.stride, |s| {
        if index % o.snapshot_every == 0 || index + 1 == count {
            let t = s.time.to_string();
            if io_err.is_none() {
                if let Err(e) = write_row(uf.writer(), &t, &s.u).and_then(|_| write_row(vf.writer(), &t, &s.v)) {
                    io_err = Some(e);
                }
            }
            written += 1;
        }
        if o.classify && index >= tail_from {
            acc.push(&s.u);
        }
        index += 1;
        Ok(())
    });
    if let Some(e) = io_err {
        return Err(CliError::io("writing snapshots", e));
    }
    // Snapshots up to a failure are kept.
    uf.commit(dir)?;
    vf.commit(dir)?;
    dir.write_json(
        "stats.json",
        &RunStats {
            stats: sim.stats(),
            snapshots: index,
            snapshots_written: written,
            completed: outcome.is_ok(),
        },
    )?;
    outcome?;
    ctx.say(format!("  {} snapshots, {} clamps", index, sim.stats().clamps));

    if o.classify {
        let c = acc.finish()?;
        ctx.say(format!(
            "  regime {} (Vx {:.3e}, Vt {:.3e})",
            c.label.label(),
            c.spatial_variance,
            c.temporal_variance
        ));
        dir.write_json(
            "classification.json",
            &ClassificationRecord {
                tail_fraction: o.tail_fraction,
                classification: c,
                label_text: c.label.label(),
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Measured {
    #[serde(flatten)]
    fit: SpeedEstimate,
    level: f64,
    window: (f64, f64),
    clamps: u64,
}

#[derive(Serialize)]
struct SpeedRecord {
    target: WaveTarget,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted: Option<WaveSpeedPrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured: Option<Measured>,
}

pub fn wave_speed(cfg: &WaveSpeedConfig, dir: &mut RunDir, ctx: &Ctx) -> Result<(), CliError> {
    let (p, sp) = (&cfg.model, &cfg.spatial);
    let target = cfg.wave_speed.target;
    let predicted = match target {
        WaveTarget::CoexistenceEnvelope => wavespeed_coexistence(p, sp),
        _ => wavespeed_boundary(p, sp, target),
    };
    match &predicted {
        Ok(w) => ctx.say(format!("  predicted {:?} speed {:.6}", target, w.speed_min)),
        Err(e) => ctx.say(format!("  no prediction: {e}")),
    }
    let mut rec = SpeedRecord {
        target,
        predicted: predicted.as_ref().ok().copied(),
        prediction_error: predicted.as_ref().err().map(|e| e.to_string()),
        measured: None,
    };

    let Some(m) = &cfg.wave_speed.measure else {
        dir.write_json("speed.json", &rec)?;
        return predicted.map(|_| ()).map_err(CliError::from);
    };
    if !(m.window_start >= 0.0 && m.window_start < 1.0) {
        return Err(CliError::Config(format!("measure.window_start must lie in [0, 1), got {}", m.window_start)));
    }
    let e = model::unique_interior(p)?.point;
    let (inner, outer) = match target {
        WaveTarget::PredatorFreeFront => (e, State2::new(1.0, 0.0)),
        WaveTarget::PreyFreeFront => (e, State2::new(0.0, p.beta / p.gamma)),
        WaveTarget::CoexistenceEnvelope => (State2::new(e.u + m.perturbation, e.v), e),
    };
    let envelope = target == WaveTarget::CoexistenceEnvelope;
    let level = m.level.unwrap_or(if envelope { 1e-4 } else { 0.5 * (inner.u + outer.u) });
    let sim_cfg = SimConfig {
        model: *p,
        spatial: *sp,
        grid: m.grid,
        dt: m.dt,
        t_end: m.t_end,
        stride: m.stride,
        ic: InitialCondition::Step { inner, outer, l1: m.l1 },
        laplacian: m.laplacian,
        exec: ctx.exec,
    };
    let mut sim = Simulator::new(&sim_cfg)?;
    let mut s = sim_cfg.initial_state()?;
    let grid = m.grid;
    let xs = grid.positions();
    let mut track = FrontTrack::new(level);
    sim.run(&mut s, m.t_end, m.stride, |x| {
        if envelope {
            // Outermost node on the right whose deviation from E* exceeds the level.
            if let Some(j) = (grid.n / 2..grid.n).rev().find(|&j| (x.u[j] - e.u).abs() > level) {
                track.times.push(x.time);
                track.positions.push(xs[j]);
            }
            Ok(())
        } else {
            track.record(x, &grid, Field::U, Side::Right).map(|_| ())
        }
    })?;
    dir.write_with("front.csv", |w| track.write_csv(w))?;
    let window = (m.window_start * m.t_end, m.t_end);
    let fit = estimate_speed(&track, window, &grid, sp.delta)?;
    ctx.say(format!("  measured speed {:.6} over {} samples", fit.speed, fit.samples));
    rec.measured = Some(Measured {
        fit,
        level,
        window,
        clamps: sim.stats().clamps,
    });
    dir.write_json("speed.json", &rec)
}
