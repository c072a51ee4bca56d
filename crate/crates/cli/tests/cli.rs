use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coophunt")).args(args).arg("--quiet").output().expect("spawn")
}

struct Case {
    dir: TempDir,
}

impl Case {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn exec(&self, cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
        let mut args = vec![cmd, "-c", config.to_str().unwrap(), "-o", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        run(&args)
    }
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL_SIM: &str = r#"
dt = 0.01
t_end = 20.0
stride = 50

[spatial]
d1 = 0.05
d2 = 10.0
delta = 8.0

[grid]
half_length = 50.0
n = 256

[ic]
kind = "noise"
epsilon = 1e-3
seed = 3

[output]
snapshot_every = 2
classify = false
tail_fraction = 0.25
"#;

#[test]
fn equilibria_lists_all_four_points() {
    let c = Case::new();
    let cfg = c.config("eq.toml", "");
    let out = c.out("eq");
    let o = c.exec("equilibria", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("equilibria.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("kind,u,v,j11"));
    let star: Vec<&str> = rows[4].split(',').collect();
    assert_eq!(star[0], "E*");
    assert!((star[1].parse::<f64>().unwrap() - 0.44292727719006302).abs() < 1e-12);
    assert!((star[2].parse::<f64>().unwrap() - 5.6615909648757878).abs() < 1e-10);
    assert_eq!(star[11], "stable_focus");

    let m = json(out.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "equilibria");
    assert_eq!(m["config"]["model"]["alpha"], 0.04);
    assert!(!out.join("FAILED").exists());
}

#[test]
fn schema_errors_name_the_field() {
    let c = Case::new();
    let cfg = c.config("bad.toml", "[spatial]\nd1 = \"fast\"\nd2 = 10.0\ndelta = 0.0\n");
    let out = c.out("bad");
    let o = c.exec("dispersion", &cfg, &out, &[]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("spatial.d1"), "{err}");
    assert!(fs::read_to_string(out.join("FAILED")).unwrap().contains("spatial.d1"));
    assert_eq!(json(out.join("manifest.json"))["status"], "failed");

    let typo = c.config("typo.toml", "[spatial]\nd1 = 0.1\nd2 = 10.0\ndelta = 0.0\nd3 = 1.0\n");
    let o = c.exec("dispersion", &typo, &c.out("typo"), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("d3"));
}

#[test]
fn invalid_values_are_configuration_errors() {
    let c = Case::new();
    let cfg = c.config("neg.toml", "[model]\nc = 0.05\nm = 0.08\ns = 0.05\ngamma = -0.08\nbeta = 0.01\nalpha = 0.04\n");
    assert_eq!(code(&c.exec("equilibria", &cfg, &c.out("neg"), &[])), 2);
}

#[test]
fn missing_config_is_an_io_error() {
    let c = Case::new();
    let o = c.exec("equilibria", &c.out("nowhere.toml"), &c.out("missing"), &[]);
    assert_eq!(code(&o), 3);
    assert!(c.out("missing").join("FAILED").exists());
}

#[test]
fn a_later_success_clears_the_failed_marker() {
    let c = Case::new();
    let out = c.out("retry");
    let bad = c.config("bad.toml", "[modle]\n");
    assert_eq!(code(&c.exec("equilibria", &bad, &out, &[])), 2);
    assert!(out.join("FAILED").exists());
    let good = c.config("good.toml", "");
    assert_eq!(code(&c.exec("equilibria", &good, &out, &[])), 0);
    assert!(!out.join("FAILED").exists());
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let c = Case::new();
    let cfg = c.config("sim.toml", SMALL_SIM);
    let (a, b) = (c.out("a"), c.out("b"));
    assert_eq!(code(&c.exec("simulate", &cfg, &a, &["--workers", "1"])), 0);
    assert_eq!(code(&c.exec("simulate", &cfg, &b, &["--workers", "2"])), 0);
    for f in ["u.csv", "v.csv", "stats.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // 2000 steps at stride 50 give 41 snapshots; every second one plus the last.
    let u = fs::read_to_string(a.join("u.csv")).unwrap();
    assert_eq!(u.lines().count(), 1 + 21);
    assert_eq!(u.lines().next().unwrap().split(',').count(), 257);
    let stats = json(a.join("stats.json"));
    assert_eq!(stats["snapshots"], 41);
    assert_eq!(stats["completed"], true);
}

#[test]
fn seed_flag_overrides_the_noise_seed() {
    let c = Case::new();
    let cfg = c.config("sim.toml", SMALL_SIM);
    let (a, b) = (c.out("a"), c.out("b"));
    assert_eq!(code(&c.exec("simulate", &cfg, &a, &[])), 0);
    assert_eq!(code(&c.exec("simulate", &cfg, &b, &["--seed", "11"])), 0);
    assert_ne!(fs::read(a.join("u.csv")).unwrap(), fs::read(b.join("u.csv")).unwrap());
    assert_eq!(json(b.join("manifest.json"))["config"]["ic"]["seed"], 11);

    let step = SMALL_SIM.replace(
        "kind = \"noise\"\nepsilon = 1e-3\nseed = 3",
        "kind = \"step\"\ninner = { u = 0.44, v = 5.66 }\nouter = { u = 1.0, v = 0.0 }\nl1 = 5.0",
    );
    let cfg = c.config("step.toml", &step);
    assert_eq!(code(&c.exec("simulate", &cfg, &c.out("s"), &[])), 0);
    assert_eq!(code(&c.exec("simulate", &cfg, &c.out("t"), &["--seed", "1"])), 2);
}

#[test]
fn blow_up_exits_with_its_own_code_and_keeps_partial_output() {
    let c = Case::new();
    let cfg = c.config("sim.toml", &SMALL_SIM.replace("dt = 0.01\nt_end = 20.0", "dt = 60.0\nt_end = 6000.0").replace("stride = 50", "stride = 1"));
    let out = c.out("boom");
    let o = c.exec("simulate", &cfg, &out, &[]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("FAILED").exists());
    assert_eq!(json(out.join("stats.json"))["completed"], false);
    assert!(fs::read_to_string(out.join("u.csv")).unwrap().lines().count() >= 2);
}

#[test]
fn classification_needs_a_long_enough_tail() {
    let c = Case::new();
    let cfg = c.config("sim.toml", &SMALL_SIM.replace("classify = false", "classify = true"));
    let out = c.out("short");
    assert_eq!(code(&c.exec("simulate", &cfg, &out, &[])), 4);
    assert!(out.join("u.csv").exists());
}

#[test]
fn turing_curve_matches_known_thresholds() {
    let c = Case::new();
    for (delta, want) in [(0.0, 0.16954145932502252), (10.0, 0.17412435849760111), (50.0, 0.17397475325430906)] {
        let cfg = c.config("tc.toml", &format!("[turing_curve]\ndelta = {delta:?}\nalpha_range = [0.04, 0.4]\npoints = 2\n"));
        let out = c.out(&format!("tc{delta}"));
        assert_eq!(code(&c.exec("turing-curve", &cfg, &out, &[])), 0);
        let text = fs::read_to_string(out.join("turing_curve.csv")).unwrap();
        let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[0], "0.04");
        let d1c: f64 = first[1].parse().unwrap();
        assert!((d1c - want).abs() < 1e-6, "delta {delta}: {d1c}");
        assert_eq!(first[3], "0");
    }
}

#[test]
fn dispersion_reports_threshold_and_unstable_band() {
    let c = Case::new();
    let cfg = c.config("d.toml", "[spatial]\nd1 = 0.15\nd2 = 10.0\ndelta = 0.0\n\n[dispersion]\nk_max = 1.0\npoints = 201\n");
    let out = c.out("d");
    assert_eq!(code(&c.exec("dispersion", &cfg, &out, &[])), 0);
    let t = json(out.join("turing.json"));
    assert!((t["d1_critical"].as_f64().unwrap() - 0.16954145932502252).abs() < 1e-9);
    assert!((t["k_critical"].as_f64().unwrap() - 0.35106320694537361).abs() < 1e-7);
    assert!(t["most_unstable_growth"].as_f64().unwrap() > 0.0);
    assert_eq!(fs::read_to_string(out.join("dispersion.csv")).unwrap().lines().count(), 202);
}

#[test]
fn bifurcation_thresholds_along_c() {
    let c = Case::new();
    let cfg = c.config("b.toml", "[bifurcate]\nparameter = \"c\"\nrange = [0.01, 0.7]\npoints = 20\ncriticality = false\n");
    let out = c.out("b");
    assert_eq!(code(&c.exec("bifurcate", &cfg, &out, &[])), 0);
    let th = json(out.join("thresholds.json"));
    let got: Vec<(String, f64)> = th
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["kind"].as_str().unwrap().to_string(), r["value"].as_f64().unwrap()))
        .collect();
    let want = [("Hopf", 0.050452361646535343), ("Hopf", 0.45799737174742307), ("Transcritical", 0.63681592039800995)];
    assert_eq!(got.len(), want.len(), "{got:?}");
    for ((k, v), (wk, wv)) in got.iter().zip(want) {
        assert_eq!(k, wk);
        assert!((v - wv).abs() < 1e-8, "{k} {v} vs {wv}");
    }
    assert!(fs::read_to_string(out.join("branch.csv")).unwrap().starts_with("param,branch_id"));
}

#[test]
fn wave_speed_prediction_and_undefined_front() {
    let c = Case::new();
    let cfg = c.config("w.toml", "[spatial]\nd1 = 1.0\nd2 = 10.0\ndelta = 0.0\n\n[wave_speed]\ntarget = \"PreyFreeFront\"\n");
    let out = c.out("w");
    assert_eq!(code(&c.exec("wave-speed", &cfg, &out, &[])), 0);
    let s = json(out.join("speed.json"));
    assert!((s["predicted"]["speed_min"].as_f64().unwrap() - 1.9198795535137094).abs() < 1e-9);

    let stable_e2 = "[model]\nc = 0.05\nm = 0.08\ns = 0.05\ngamma = 0.08\nbeta = 0.01\nalpha = 200.0\n\n[spatial]\nd1 = 1.0\nd2 = 10.0\ndelta = 0.0\n\n[wave_speed]\ntarget = \"PreyFreeFront\"\n";
    let cfg = c.config("w2.toml", stable_e2);
    let out = c.out("w2");
    assert_eq!(code(&c.exec("wave-speed", &cfg, &out, &[])), 4);
    assert!(json(out.join("speed.json"))["prediction_error"].as_str().unwrap().contains("prey-free front undefined"));
}

#[test]
fn checked_in_configs_parse() {
    // Every shipped config must load; the cheap ones also run.
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let c = Case::new();
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let (cmd, extra): (&str, &[&str]) = match name.split('_').next().unwrap() {
            "equilibria" | "nested" => ("equilibria", &[]),
            "bifurcate" => ("bifurcate", &[]),
            "dispersion" => ("dispersion", &[]),
            "turing" => ("turing-curve", &[]),
            "pattern" => ("simulate", &["--dry-run"]),
            "wave" => ("wave-speed", &["--dry-run"]),
            other => panic!("unexpected config {other}"),
        };
        let out = c.out(&name);
        let o = c.exec(cmd, &path, &out, extra);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let status = json(out.join("manifest.json"))["status"].clone();
        assert_eq!(status, if extra.is_empty() { "ok" } else { "validated" });
        seen += 1;
    }
    assert_eq!(seen, 19);
}
