use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jjdyn::classifier::{Center, CycleInfo, Thresholds};
use jjdyn::gridfile::{read_grid, read_sidecar, write_grid};
use jjdyn::render::{decode_ppm, ZERO_STABLE};
use jjdyn::sweep::{evaluate_point, GridSpec, Integration, Provenance, StabilityGrid};
use jjdyn::AttractorLabel;
use serde_json::Value;

const FAST: [&str; 4] = ["--tau-transient", "300", "--tau-measure", "125.66370614359172"];

fn jjdyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jjdyn")).current_dir(dir).args(args).env_remove("JJDYN_WORKERS").output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = jjdyn(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn synthetic_grid(dir: &Path, name: &str, w: usize, h: usize, f: impl Fn(usize, usize) -> AttractorLabel) -> String {
    let grid = StabilityGrid {
        spec: GridSpec::desk_stability(w, h),
        labels: (0..w * h).map(|i| f(i % w, i / w)).collect(),
        bisection_level: 0,
        provenance: Provenance::default(),
    };
    write_grid(&dir.join(name), &grid).unwrap();
    name.to_string()
}

fn one_cycle() -> AttractorLabel {
    AttractorLabel::NCycle(CycleInfo { n: 1, turning: 1, winding: 1, center: Center::Pi, period: 4.0 * PI })
}

#[test]
fn undriven_trajectory_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["trajectory", "--eps", "0", "--phi0", "0.3", "--v0", "0", "--out", "t.csv", "--full", "--tau-transient", "10", "--tau-measure", "200"]);
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,phi,v"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[1], 0.3 * PI);
        assert_eq!(f[2], 0.0);
        rows += 1;
    }
    assert!(rows > 1000);
}

#[test]
fn trajectory_summary_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    for (eps, phi0) in [(0.27, 0.5), (0.27, 0.8), (0.58, 0.8), (0.37, 0.54), (0.318828, 0.727783)] {
        let out = ok(dir.path(), &["trajectory", "--eps", &eps.to_string(), "--phi0", &phi0.to_string(), "--out", "t.csv"]);
        let label = evaluate_point(eps, phi0 * PI, 0.0, 1e-2, &Thresholds::default(), &Integration::default()).label;
        assert!(out.starts_with(&format!("label={label} code={}", label.code())), "{out}");
    }
}

#[test]
fn trajectory_portrait() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["trajectory", "--eps", "0.27", "--phi0", "0.8", "--out", "t.csv", "--portrait", "p.ppm"];
    args.extend(FAST);
    ok(dir.path(), &args);
    let (w, h, _) = decode_ppm(&fs::read(dir.path().join("p.ppm")).unwrap()).unwrap();
    assert_eq!((w, h), (512, 512));
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!jjdyn(dir.path(), &["trajectory", "--eps", "x", "--phi0", "0", "--out", "t.csv"]).status.success());
    assert!(!jjdyn(dir.path(), &["trajectory", "--phi0", "0", "--out", "t.csv"]).status.success());
    assert!(!jjdyn(dir.path(), &["trajectory", "--eps", "-1", "--phi0", "0", "--out", "t.csv"]).status.success());
    assert!(!jjdyn(dir.path(), &["sweep", "--nx", "1", "--out", "s.csv"]).status.success());
    assert!(!jjdyn(dir.path(), &["bogus"]).status.success());
    assert!(!jjdyn(dir.path(), &["freq", "--grid", "missing.csv"]).status.success());
}

#[test]
fn uniform_patch_renders_single_colour() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--phi-min", "0.01", "--phi-max", "0.02", "--eps-min", "0.26", "--eps-max", "0.27", "--nx", "2", "--ny", "2",
        "--out", "s.csv", "--image", "s.ppm", "--workers", "1",
    ];
    ok(dir.path(), &args);
    let (w, h, px) = decode_ppm(&fs::read(dir.path().join("s.ppm")).unwrap()).unwrap();
    assert_eq!((w, h), (2, 2));
    assert!(px.iter().all(|p| *p == ZERO_STABLE));
}

#[test]
fn sweep_manifest_replays_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--nx", "3", "--ny", "3", "--out", "s.csv", "--eps-min", "0.361176755"];
    args.extend(FAST);
    let d = dir.path();
    let first = ok(d, &args);
    let m = manifest(&d.join("s.csv.manifest.json"));
    assert_eq!(m["subcommand"], "sweep");
    assert_eq!(m["command"]["sweep"]["eps_min"].as_f64(), Some(0.361176755));
    assert_eq!(m["command"]["sweep"]["tau_measure"].as_f64(), Some(125.66370614359172));
    assert!(m["settings_digest"].as_str().unwrap().len() == 64);
    let saved: Vec<Vec<u8>> = ["s.csv", "s.csv.json", "s.ppm", "s.csv.manifest.json"].iter().map(|f| fs::read(d.join(f)).unwrap()).collect();
    for f in ["s.csv", "s.csv.json", "s.ppm"] {
        fs::remove_file(d.join(f)).unwrap();
    }
    let again = ok(d, &["rerun", "--from", "s.csv.manifest.json"]);
    assert_eq!(first, again);
    for (f, bytes) in ["s.csv", "s.csv.json", "s.ppm", "s.csv.manifest.json"].iter().zip(&saved) {
        assert_eq!(&fs::read(d.join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn trajectory_manifest_replays() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut args = vec!["trajectory", "--eps", "0.318828", "--phi0", "0.727783", "--v0", "-0.125", "--out", "t.csv", "--stride", "7"];
    args.extend(FAST);
    ok(d, &args);
    let m = manifest(&d.join("t.csv.manifest.json"));
    assert_eq!(m["command"]["trajectory"]["phi0"].as_f64(), Some(0.727783));
    assert_eq!(m["command"]["trajectory"]["v0"].as_f64(), Some(-0.125));
    let before = fs::read(d.join("t.csv")).unwrap();
    ok(d, &["rerun", "--from", "t.csv.manifest.json", "--manifest", "again.json"]);
    assert_eq!(fs::read(d.join("t.csv")).unwrap(), before);
    assert_eq!(manifest(&d.join("again.json")), m);
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["basin", "--eps", "0.509253", "--nx", "2", "--ny", "2", "--out", "b.csv"];
    args.extend(FAST);
    let out = Command::new(env!("CARGO_BIN_EXE_jjdyn")).current_dir(dir.path()).args(&args).env("JJDYN_WORKERS", "3").output().unwrap();
    assert!(out.status.success());
    assert_eq!(manifest(&dir.path().join("b.csv.manifest.json"))["command"]["basin"]["workers"], 3);
    args.extend(["--workers", "2"]);
    ok(dir.path(), &args);
    assert_eq!(manifest(&dir.path().join("b.csv.manifest.json"))["command"]["basin"]["workers"], 2);
}

#[test]
fn bisection_checkpoint_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = |out: &'static str, levels: &'static str| {
        let mut a = vec!["basin", "--eps", "0.509253", "--bisect-levels", levels, "--out", out, "--workers", "1"];
        a.extend(FAST);
        a
    };
    ok(d, &base("one.csv", "1"));
    let one = read_grid(&d.join("one.csv")).unwrap();
    assert_eq!((one.width(), one.height(), one.bisection_level), (3, 3, 1));
    assert_eq!(read_sidecar(&d.join("one.csv")).unwrap().provenance.evaluated, 5);

    let mut resumed = base("resumed.csv", "2");
    resumed.extend(["--resume", "one.csv"]);
    ok(d, &resumed);
    ok(d, &base("direct.csv", "2"));
    let (r, direct) = (read_grid(&d.join("resumed.csv")).unwrap(), read_grid(&d.join("direct.csv")).unwrap());
    assert_eq!((r.width(), r.bisection_level), (5, 2));
    assert_eq!(r.codes(), direct.codes());
    assert_eq!(read_sidecar(&d.join("resumed.csv")).unwrap().provenance.evaluated, 16);

    let mut mismatch = vec!["basin", "--eps", "0.4", "--bisect-levels", "2", "--out", "x.csv", "--resume", "one.csv"];
    mismatch.extend(FAST);
    let out = jjdyn(d, &mismatch);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match"));
}

#[test]
fn dimension_of_straight_border() {
    let dir = tempfile::tempdir().unwrap();
    let g = synthetic_grid(dir.path(), "half.csv", 128, 128, |x, _| {
        if x < 64 { AttractorLabel::ZeroStable } else { AttractorLabel::Unstable }
    });
    let out = ok(dir.path(), &["dimension", "--grid", &g, "--labels", "unstable", "--json", "d.json", "--csv", "d.csv"]);
    let rec: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    let slope = rec["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.05, "{slope}");
    assert!(out.starts_with("delta_H="));
    assert!(fs::read_to_string(dir.path().join("d.csv")).unwrap().starts_with("r,n_b,"));
}

#[test]
fn dimension_of_empty_border_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = synthetic_grid(dir.path(), "u.csv", 16, 16, |_, _| AttractorLabel::ZeroStable);
    let out = jjdyn(dir.path(), &["dimension", "--grid", &g, "--labels", "all-cycles"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn freq_tables() {
    let dir = tempfile::tempdir().unwrap();
    let g = synthetic_grid(dir.path(), "c.csv", 4, 4, |_, _| one_cycle());
    let out = ok(dir.path(), &["freq", "--grid", &g, "--csv", "f.csv"]);
    assert!(out.contains("      1        16    100.000"), "{out}");
    assert!(fs::read_to_string(dir.path().join("f.csv")).unwrap().contains("cycle,1,16,100.0"));
    let g = synthetic_grid(dir.path(), "z.csv", 4, 4, |_, _| AttractorLabel::Unstable);
    let out = ok(dir.path(), &["freq", "--grid", &g]);
    assert!(out.contains("cycles=0") && out.contains("denominator 0"), "{out}");
    assert!(dir.path().join("z.csv.freq.manifest.json").exists());
}

#[test]
fn render_from_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = synthetic_grid(dir.path(), "r.csv", 5, 3, |_, _| AttractorLabel::ZeroStable);
    ok(dir.path(), &["render", "--grid", &g, "--out", "r.ppm"]);
    let (w, h, px) = decode_ppm(&fs::read(dir.path().join("r.ppm")).unwrap()).unwrap();
    assert_eq!((w, h), (5, 3));
    assert!(px.iter().all(|p| *p == ZERO_STABLE));
}
