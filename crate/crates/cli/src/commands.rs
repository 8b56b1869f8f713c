use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use jjdyn::classifier::Thresholds;
use jjdyn::dynamics::{integrate_window, DynParams, PhaseState};
use jjdyn::fractal::{counts_csv, estimate_dimension, extract_border, DimensionRecord, LabelSet};
use jjdyn::gridfile::{read_grid, write_grid};
use jjdyn::render::{render_grid, render_portrait};
use jjdyn::sweep::{
    evaluate_point, frequency_table, run_bisection, run_sweep, Axis, FrequencyTable, GridSpec, Integration,
    StabilityGrid,
};
use jjdyn::AttractorLabel;

use crate::manifest::{default_path, RunManifest};
use crate::{
    BasinArgs, Command, DimensionArgs, FreqArgs, GridArgs, IntegrationArgs, RenderArgs, SweepArgs, TrajectoryArgs,
};

/// Paths touched by a command and the settings digest of a grid run.
struct Outcome {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    digest: Option<String>,
}

pub fn run(command: Command, manifest: Option<PathBuf>) -> Result<()> {
    let (command, outcome) = match command {
        Command::Rerun(args) => {
            let m = RunManifest::read(&args.from)?;
            if matches!(m.command, Command::Rerun(_)) {
                bail!("manifest {} records a rerun", args.from.display());
            }
            return run(m.command, manifest);
        }
        Command::Trajectory(a) => {
            let o = trajectory(&a)?;
            (Command::Trajectory(a), o)
        }
        Command::Sweep(mut a) => {
            resolve(&mut a.grid);
            let o = grid_command(eps_phi_spec(&a)?, &a.grid)?;
            (Command::Sweep(a), o)
        }
        Command::Basin(mut a) => {
            resolve(&mut a.grid);
            let o = grid_command(basin_spec(&a)?, &a.grid)?;
            (Command::Basin(a), o)
        }
        Command::Dimension(a) => {
            let o = dimension(&a)?;
            (Command::Dimension(a), o)
        }
        Command::Freq(a) => {
            let o = freq(&a)?;
            (Command::Freq(a), o)
        }
        Command::Render(a) => {
            let o = render(&a)?;
            (Command::Render(a), o)
        }
    };
    let path = manifest.unwrap_or_else(|| default_path(&primary_output(&command)));
    let m = RunManifest {
        subcommand: subcommand_name(&command).into(),
        tool_version: jjdyn::VERSION.into(),
        command,
        inputs: outcome.inputs,
        outputs: outcome.outputs,
        settings_digest: outcome.digest,
    };
    m.write(&path)
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Trajectory(_) => "trajectory",
        Command::Sweep(_) => "sweep",
        Command::Basin(_) => "basin",
        Command::Dimension(_) => "dimension",
        Command::Freq(_) => "freq",
        Command::Render(_) => "render",
        Command::Rerun(_) => "rerun",
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn primary_output(c: &Command) -> PathBuf {
    match c {
        Command::Trajectory(a) => a.out.clone(),
        Command::Sweep(SweepArgs { grid, .. }) | Command::Basin(BasinArgs { grid, .. }) => grid.out.clone(),
        Command::Dimension(a) => a.json.clone().or(a.csv.clone()).unwrap_or_else(|| with_suffix(&a.grid, ".dimension")),
        Command::Freq(a) => a.csv.clone().unwrap_or_else(|| with_suffix(&a.grid, ".freq")),
        Command::Render(a) => a.out.clone(),
        Command::Rerun(a) => a.from.clone(),
    }
}

fn resolve(g: &mut GridArgs) {
    g.workers.get_or_insert_with(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    g.timestamp.get_or_insert_with(|| {
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
    });
    if g.image.is_none() {
        g.image = Some(g.out.with_extension("ppm"));
    }
}

fn integration(a: &IntegrationArgs, retry: bool) -> Integration {
    Integration { dtau: a.dt, tau_transient: a.tau_transient, tau_measure: a.tau_measure, retry }
}

fn summary(label: &AttractorLabel) -> String {
    let mut s = format!("label={label} code={}", label.code());
    if let Some(c) = label.cycle() {
        let _ = write!(s, " n={} t={} w={} period={:?}", c.n, c.turning, c.winding, c.period);
    }
    s
}

fn trajectory(a: &TrajectoryArgs) -> Result<Outcome> {
    let integ = integration(&a.integration, true);
    let d = DynParams::new(a.eps, a.integration.kappa);
    d.validate()?;
    if a.stride == 0 {
        bail!("--stride must be positive");
    }
    let phi0 = a.phi0 * PI;
    let outcome = evaluate_point(a.eps, phi0, a.v0, d.kappa, &Thresholds::default(), &integ);

    let end = integ.tau_transient + integ.tau_measure;
    let from = if a.full { 0.0 } else { integ.tau_transient };
    let ic = PhaseState::new(phi0, a.v0);
    let traj = integrate_window(ic, &d, from, end, integ.dtau, a.stride)?;
    let mut csv = String::from("tau,phi,v\n");
    for (i, s) in traj.samples.iter().enumerate() {
        let _ = writeln!(csv, "{:?},{:?},{:?}", traj.tau_at(i), s.phi, s.v);
    }
    fs::write(&a.out, csv).with_context(|| format!("writing {}", a.out.display()))?;
    let mut outputs = vec![a.out.clone()];
    if let Some(p) = &a.portrait {
        let window = integrate_window(ic, &d, integ.tau_transient, end, integ.dtau, 1)?;
        fs::write(p, render_portrait(&window, 512)).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    println!("{}", summary(&outcome.label));
    Ok(Outcome { inputs: vec![], outputs, digest: None })
}

fn lattice_counts(nx: usize, ny: usize, full: (usize, usize), g: &GridArgs, use_full: bool) -> (usize, usize) {
    match (use_full, g.bisect_levels) {
        (true, _) => full,
        (false, Some(_)) => (g.base_nx, g.base_ny),
        (false, None) => (nx, ny),
    }
}

fn eps_phi_spec(a: &SweepArgs) -> Result<GridSpec> {
    let (nx, ny) = lattice_counts(a.nx, a.ny, (896, 2048), &a.grid, a.full_resolution);
    let mut spec = GridSpec::eps_phi(Axis::new(a.phi_min * PI, a.phi_max * PI, nx), Axis::new(a.eps_min, a.eps_max, ny));
    spec.v0 = a.v0;
    finish_spec(spec, &a.grid)
}

fn basin_spec(a: &BasinArgs) -> Result<GridSpec> {
    let (nx, ny) = lattice_counts(a.nx, a.ny, (1024, 1024), &a.grid, a.full_resolution);
    let spec = GridSpec::basin(a.eps, Axis::new(a.phi_min * PI, a.phi_max * PI, nx), Axis::new(a.v_min, a.v_max, ny));
    finish_spec(spec, &a.grid)
}

fn finish_spec(mut spec: GridSpec, g: &GridArgs) -> Result<GridSpec> {
    spec.kappa = g.integration.kappa;
    spec.integration = integration(&g.integration, !g.no_retry);
    spec.validate()?;
    Ok(spec)
}

fn grid_command(spec: GridSpec, g: &GridArgs) -> Result<Outcome> {
    let workers = g.workers.unwrap_or(1);
    let stamp = |grid: &mut StabilityGrid| grid.provenance.timestamp = g.timestamp.unwrap_or(0);
    let mut inputs = vec![];
    let mut grid = match g.bisect_levels {
        None => {
            if g.resume.is_some() {
                bail!("--resume requires --bisect-levels");
            }
            run_sweep(&spec, workers)?
        }
        Some(levels) => {
            let resume = match &g.resume {
                Some(p) => {
                    inputs.push(p.clone());
                    Some(read_grid(p).with_context(|| format!("reading resume grid {}", p.display()))?)
                }
                None => None,
            };
            run_bisection(&spec, levels, workers, resume, |level| {
                let mut level = level.clone();
                stamp(&mut level);
                write_grid(&g.out, &level)?;
                eprintln!("level {} written ({}x{})", level.bisection_level, level.width(), level.height());
                Ok(())
            })?
        }
    };
    stamp(&mut grid);
    write_grid(&g.out, &grid).with_context(|| format!("writing {}", g.out.display()))?;
    let image = g.image.clone().unwrap_or_else(|| g.out.with_extension("ppm"));
    fs::write(&image, render_grid(&grid)).with_context(|| format!("writing {}", image.display()))?;
    print!("{}", freq_report(&frequency_table(&grid)));
    Ok(Outcome {
        inputs,
        outputs: vec![g.out.clone(), jjdyn::gridfile::sidecar_path(&g.out), image],
        digest: Some(grid.provenance.settings_digest.clone()),
    })
}

fn dimension(a: &DimensionArgs) -> Result<Outcome> {
    let grid = read_grid(&a.grid).with_context(|| format!("reading {}", a.grid.display()))?;
    let labels: LabelSet = a.labels.parse()?;
    let mask = extract_border(&grid, &labels);
    if mask.is_empty() {
        bail!("border of {:?} is empty: no cell in the set touches a cell outside it", a.labels);
    }
    let (counts, est) = estimate_dimension(&mask)?;
    println!("delta_H={:.6} r2={:.6} border_cells={}", est.slope, est.r_squared, mask.count());
    let mut outputs = vec![];
    if let Some(p) = &a.csv {
        fs::write(p, counts_csv(&counts, &est)).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    if let Some(p) = &a.json {
        let rec = DimensionRecord::new(labels, &mask, &est);
        fs::write(p, serde_json::to_string_pretty(&rec)? + "\n").with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    Ok(Outcome { inputs: vec![a.grid.clone()], outputs, digest: None })
}

pub fn freq_report(t: &FrequencyTable) -> String {
    let mut s = format!(
        "cells={} unstable={} 0-stable={} pi-stable={} unclassified={} cycles={}\n",
        t.total, t.unstable, t.zero_stable, t.pi_stable, t.unclassified, t.cycle_total
    );
    if t.cycle_total == 0 {
        s.push_str("no cycle cells: relative frequencies undefined (denominator 0)\n");
        return s;
    }
    s.push_str("n-cycle  absolute  relative%\n");
    for c in &t.cycles {
        let _ = writeln!(s, "{:>7}  {:>8}  {:>9.3}", c.n, c.count, c.relative);
    }
    s
}

fn freq_csv(t: &FrequencyTable) -> String {
    let mut s = String::from("label,n,count,relative\n");
    for (name, count) in [
        ("unstable", t.unstable),
        ("0-stable", t.zero_stable),
        ("pi-stable", t.pi_stable),
        ("unclassified", t.unclassified),
    ] {
        let _ = writeln!(s, "{name},,{count},");
    }
    for c in &t.cycles {
        let _ = writeln!(s, "cycle,{},{},{:?}", c.n, c.count, c.relative);
    }
    s
}

fn freq(a: &FreqArgs) -> Result<Outcome> {
    let grid = read_grid(&a.grid).with_context(|| format!("reading {}", a.grid.display()))?;
    let t = frequency_table(&grid);
    print!("{}", freq_report(&t));
    let mut outputs = vec![];
    if let Some(p) = &a.csv {
        fs::write(p, freq_csv(&t)).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    Ok(Outcome { inputs: vec![a.grid.clone()], outputs, digest: None })
}

fn render(a: &RenderArgs) -> Result<Outcome> {
    let grid = read_grid(&a.grid).with_context(|| format!("reading {}", a.grid.display()))?;
    fs::write(&a.out, render_grid(&grid)).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(Outcome { inputs: vec![a.grid.clone()], outputs: vec![a.out.clone()], digest: None })
}
