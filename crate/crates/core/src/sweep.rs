//! Stability diagrams and basins of attraction over parameter lattices.
//!
//! Cells are evaluated at exact lattice values with inclusive endpoints, laid
//! out row-major with `x` the fast index. Evaluation is a pure function of the
//! cell coordinates and the [`GridSpec`], so the grid does not depend on the worker
//! count or on scheduling.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{classify, AttractorLabel, Thresholds};
use crate::dynamics::{integrate_window, DynParams, PhaseState, DEFAULT_DTAU};
use crate::error::{Error, Result};

/// Default damping used throughout.
pub const DEFAULT_KAPPA: f64 = 1e-2;
/// Default transient discarded before classification.
pub const DEFAULT_TAU_TRANSIENT: f64 = 4000.0;
/// Default measurement window: 80 drive periods.
pub const DEFAULT_TAU_MEASURE: f64 = 160.0 * PI;
/// Half-width of the default basin velocity axis.
pub const DEFAULT_BASIN_V0: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// x = initial phase, y = drive amplitude, fixed initial velocity.
    EpsPhi,
    /// x = initial phase, y = initial velocity, fixed drive amplitude.
    Basin,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::EpsPhi => "epsphi",
            SweepMode::Basin => "basin",
        }
    }

    pub fn axis_names(self) -> (&'static str, &'static str) {
        match self {
            SweepMode::EpsPhi => ("phi0", "eps"),
            SweepMode::Basin => ("phi0", "v0"),
        }
    }
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsphi" => Ok(SweepMode::EpsPhi),
            "basin" => Ok(SweepMode::Basin),
            other => Err(Error::Format(format!("unknown sweep mode {other:?}"))),
        }
    }
}

/// Inclusive lattice `min..=max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    /// Lattice value `i`. Written as a weighted mean so that endpoints are exact,
    /// refined lattices reproduce coarse values bit-for-bit and symmetric
    /// ranges give exactly negated mirror values.
    pub fn value(&self, i: usize) -> f64 {
        let last = (self.count - 1) as f64;
        let i = i as f64;
        ((last - i) * self.min + i * self.max) / last
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.count < 2 || !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidParameter(format!("axis {name}: need count >= 2 and min < max, got {self:?}")));
        }
        Ok(())
    }

    /// `k` if `count == 2^k + 1`.
    pub fn bisection_level(&self) -> Option<u32> {
        let intervals = self.count.checked_sub(1)?;
        intervals.is_power_of_two().then(|| intervals.trailing_zeros())
    }

    fn refined(&self) -> Self {
        Self { count: 2 * (self.count - 1) + 1, ..*self }
    }
}

/// Integration horizon used for every cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integration {
    pub dtau: f64,
    pub tau_transient: f64,
    pub tau_measure: f64,
    /// Retry unclassified cells once with both durations doubled.
    pub retry: bool,
}

impl Default for Integration {
    fn default() -> Self {
        Self { dtau: DEFAULT_DTAU, tau_transient: DEFAULT_TAU_TRANSIENT, tau_measure: DEFAULT_TAU_MEASURE, retry: true }
    }
}

impl Integration {
    pub fn doubled(&self) -> Self {
        Self { tau_transient: 2.0 * self.tau_transient, tau_measure: 2.0 * self.tau_measure, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub mode: SweepMode,
    pub x: Axis,
    pub y: Axis,
    pub kappa: f64,
    /// Initial velocity in `EpsPhi` mode.
    pub v0: f64,
    /// Drive amplitude in `Basin` mode.
    pub eps: f64,
    pub thresholds: Thresholds,
    pub integration: Integration,
}

impl GridSpec {
    /// Drive amplitude against initial phase at fixed initial velocity.
    pub fn eps_phi(phi0: Axis, eps: Axis) -> Self {
        Self {
            mode: SweepMode::EpsPhi,
            x: phi0,
            y: eps,
            kappa: DEFAULT_KAPPA,
            v0: 0.0,
            eps: 0.0,
            thresholds: Thresholds::default(),
            integration: Integration::default(),
        }
    }

    /// Initial phase against initial velocity at fixed drive amplitude.
    pub fn basin(eps: f64, phi0: Axis, v0: Axis) -> Self {
        Self {
            mode: SweepMode::Basin,
            x: phi0,
            y: v0,
            kappa: DEFAULT_KAPPA,
            v0: 0.0,
            eps,
            thresholds: Thresholds::default(),
            integration: Integration::default(),
        }
    }

    /// Desk-resolution replica of the main stability diagram.
    pub fn desk_stability(nx: usize, ny: usize) -> Self {
        Self::eps_phi(Axis::new(0.5 * PI, PI, nx), Axis::new(0.3, 0.56, ny))
    }

    /// Desk-resolution basin over a full phase turn and `|v0| <= 0.5`.
    pub fn desk_basin(eps: f64, n: usize) -> Self {
        Self::basin(eps, Axis::new(-PI, PI, n), Axis::new(-DEFAULT_BASIN_V0, DEFAULT_BASIN_V0, n))
    }

    pub fn width(&self) -> usize {
        self.x.count
    }

    pub fn height(&self) -> usize {
        self.y.count
    }

    pub fn cells(&self) -> usize {
        self.width() * self.height()
    }

    pub fn validate(&self) -> Result<()> {
        let (xn, yn) = self.mode.axis_names();
        self.x.validate(xn)?;
        self.y.validate(yn)?;
        self.thresholds.validate()?;
        let fixed = match self.mode {
            SweepMode::EpsPhi => self.v0,
            SweepMode::Basin => self.eps,
        };
        if !fixed.is_finite() || !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter("fixed sweep values must be finite and kappa >= 0".into()));
        }
        let i = &self.integration;
        if !(i.dtau > 0.0 && i.tau_transient >= 0.0 && i.tau_measure > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid integration settings {i:?}")));
        }
        Ok(())
    }

    /// `(eps, phi0, v0)` for a lattice point.
    pub fn cell_parameters(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match self.mode {
            SweepMode::EpsPhi => (y, x, self.v0),
            SweepMode::Basin => (self.eps, x, y),
        }
    }

    pub fn cell_coords(&self, ix: usize, iy: usize) -> (f64, f64) {
        (self.x.value(ix), self.y.value(iy))
    }

    /// Hex SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Outcome of one cell, with whether the retry path was needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOutcome {
    pub label: AttractorLabel,
    pub retried: bool,
    pub failed: bool,
}

fn run_point(eps: f64, phi0: f64, v0: f64, kappa: f64, th: &Thresholds, integ: &Integration) -> (AttractorLabel, bool) {
    let d = DynParams::new(eps, kappa);
    let end = integ.tau_transient + integ.tau_measure;
    match integrate_window(PhaseState::new(phi0, v0), &d, integ.tau_transient, end, integ.dtau, 1) {
        Ok(traj) => match classify(&traj, th) {
            Ok(label) => (label, false),
            Err(_) => (AttractorLabel::Unclassified, true),
        },
        // Non-finite states carry no phase information to confirm an escape.
        Err(_) => (AttractorLabel::Unclassified, true),
    }
}

/// Classify the orbit from one initial condition, retrying once with doubled
/// horizons when `integ.retry` is set and the first pass is unclassified.
pub fn evaluate_point(eps: f64, phi0: f64, v0: f64, kappa: f64, th: &Thresholds, integ: &Integration) -> CellOutcome {
    let (label, failed) = run_point(eps, phi0, v0, kappa, th, integ);
    if label == AttractorLabel::Unclassified && integ.retry {
        let (label, failed) = run_point(eps, phi0, v0, kappa, th, &integ.doubled());
        return CellOutcome { label, retried: true, failed };
    }
    CellOutcome { label, retried: false, failed }
}

pub fn evaluate_cell_detailed(x: f64, y: f64, spec: &GridSpec) -> CellOutcome {
    let (eps, phi0, v0) = spec.cell_parameters(x, y);
    evaluate_point(eps, phi0, v0, spec.kappa, &spec.thresholds, &spec.integration)
}

/// Integrate and classify one lattice point.
pub fn evaluate_cell(x: f64, y: f64, spec: &GridSpec) -> AttractorLabel {
    evaluate_cell_detailed(x, y, spec).label
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    /// Seconds since the Unix epoch when the grid was completed.
    pub timestamp: u64,
    pub settings_digest: String,
    /// Cells whose integration or classification raised an error.
    pub failures: usize,
    /// Cells that needed the doubled-horizon retry.
    pub retried: usize,
    /// Cells integrated to produce this grid (excludes carried-over cells).
    pub evaluated: usize,
}

impl Provenance {
    fn new(spec: &GridSpec) -> Self {
        Self {
            tool_version: crate::VERSION.to_string(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            settings_digest: spec.digest(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub spec: GridSpec,
    /// Row-major, index `iy * width + ix`.
    pub labels: Vec<AttractorLabel>,
    /// Number of bisection refinements that produced this grid.
    pub bisection_level: u32,
    pub provenance: Provenance,
}

impl StabilityGrid {
    pub fn width(&self) -> usize {
        self.spec.width()
    }

    pub fn height(&self) -> usize {
        self.spec.height()
    }

    pub fn get(&self, ix: usize, iy: usize) -> &AttractorLabel {
        &self.labels[iy * self.width() + ix]
    }

    pub fn codes(&self) -> Vec<u8> {
        self.labels.iter().map(AttractorLabel::code).collect()
    }

    /// Cells with their lattice indices and coordinates.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64, f64, &AttractorLabel)> + '_ {
        let w = self.width();
        self.labels.iter().enumerate().map(move |(i, l)| {
            let (ix, iy) = (i % w, i / w);
            let (x, y) = self.spec.cell_coords(ix, iy);
            (ix, iy, x, y, l)
        })
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn evaluate_indices(spec: &GridSpec, indices: &[usize], workers: usize) -> Vec<CellOutcome> {
    let w = spec.width();
    with_pool(workers, || {
        indices
            .par_iter()
            .map(|&i| {
                let (x, y) = spec.cell_coords(i % w, i / w);
                evaluate_cell_detailed(x, y, spec)
            })
            .collect()
    })
}

fn tally(prov: &mut Provenance, outcomes: &[CellOutcome]) {
    prov.evaluated += outcomes.len();
    prov.failures += outcomes.iter().filter(|o| o.failed).count();
    prov.retried += outcomes.iter().filter(|o| o.retried).count();
}

/// Evaluate every cell of `spec` on a pool of `workers` threads.
pub fn run_sweep(spec: &GridSpec, workers: usize) -> Result<StabilityGrid> {
    spec.validate()?;
    let indices: Vec<usize> = (0..spec.cells()).collect();
    let outcomes = evaluate_indices(spec, &indices, workers);
    let mut provenance = Provenance::new(spec);
    tally(&mut provenance, &outcomes);
    Ok(StabilityGrid {
        spec: spec.clone(),
        labels: outcomes.into_iter().map(|o| o.label).collect(),
        bisection_level: 0,
        provenance,
    })
}

/// Bisect both axes: `2^k + 1` points become `2^(k+1) + 1`.
///
/// Cells of `prev` land on the even lattice indices unchanged; only the new
/// cells are integrated.
pub fn refine(prev: &StabilityGrid, workers: usize) -> Result<StabilityGrid> {
    let (w, h) = (prev.width(), prev.height());
    if prev.spec.x.bisection_level().is_none() || prev.spec.y.bisection_level().is_none() || prev.labels.len() != w * h {
        return Err(Error::Shape { width: w, height: h });
    }
    let mut spec = prev.spec.clone();
    spec.x = spec.x.refined();
    spec.y = spec.y.refined();
    let nw = spec.width();

    let mut labels = vec![AttractorLabel::Unclassified; spec.cells()];
    let mut fresh = Vec::with_capacity(spec.cells() - w * h);
    for (i, slot) in labels.iter_mut().enumerate() {
        let (ix, iy) = (i % nw, i / nw);
        if ix % 2 == 0 && iy % 2 == 0 {
            *slot = *prev.get(ix / 2, iy / 2);
        } else {
            fresh.push(i);
        }
    }
    let outcomes = evaluate_indices(&spec, &fresh, workers);
    for (&i, o) in fresh.iter().zip(&outcomes) {
        labels[i] = o.label;
    }

    let mut provenance = Provenance::new(&spec);
    provenance.failures = prev.provenance.failures;
    provenance.retried = prev.provenance.retried;
    tally(&mut provenance, &outcomes);
    Ok(StabilityGrid { spec, labels, bisection_level: prev.bisection_level + 1, provenance })
}

/// Run the bisection scheme from `base` (2^a+1 by 2^b+1 points) through
/// `levels` refinements, calling `checkpoint` after every completed level.
///
/// A `resume` grid replaces the base evaluation; it must be a level of the same
/// lattice.
pub fn run_bisection(
    base: &GridSpec,
    levels: u32,
    workers: usize,
    resume: Option<StabilityGrid>,
    mut checkpoint: impl FnMut(&StabilityGrid) -> Result<()>,
) -> Result<StabilityGrid> {
    let mut grid = match resume {
        Some(g) => {
            let expected = lattice_at_level(base, g.bisection_level)?;
            if !same_lattice(&g.spec, &expected) {
                return Err(Error::Format(format!(
                    "resume grid {}x{} at level {} does not match the requested lattice",
                    g.width(),
                    g.height(),
                    g.bisection_level
                )));
            }
            g
        }
        None => {
            if base.x.bisection_level().is_none() || base.y.bisection_level().is_none() {
                return Err(Error::Shape { width: base.width(), height: base.height() });
            }
            let g = run_sweep(base, workers)?;
            checkpoint(&g)?;
            g
        }
    };
    while grid.bisection_level < levels {
        grid = refine(&grid, workers)?;
        checkpoint(&grid)?;
    }
    Ok(grid)
}

fn lattice_at_level(base: &GridSpec, level: u32) -> Result<GridSpec> {
    let mut spec = base.clone();
    for _ in 0..level {
        spec.x = spec.x.refined();
        spec.y = spec.y.refined();
    }
    Ok(spec)
}

fn same_lattice(a: &GridSpec, b: &GridSpec) -> bool {
    let settings = |s: &GridSpec| (s.mode, s.kappa.to_bits(), s.v0.to_bits(), s.eps.to_bits(), s.thresholds, s.integration);
    a.x == b.x && a.y == b.y && settings(a) == settings(b)
}

/// Label key used in frequency tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelKey {
    Unstable,
    ZeroStable,
    PiStable,
    Cycle(u32),
    Unclassified,
}

impl From<&AttractorLabel> for LabelKey {
    fn from(l: &AttractorLabel) -> Self {
        match l {
            AttractorLabel::Unstable => LabelKey::Unstable,
            AttractorLabel::ZeroStable => LabelKey::ZeroStable,
            AttractorLabel::PiStable => LabelKey::PiStable,
            AttractorLabel::NCycle(c) => LabelKey::Cycle(c.n),
            AttractorLabel::Unclassified => LabelKey::Unclassified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleFrequency {
    pub n: u32,
    pub count: usize,
    /// Percent of all cycle cells.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub total: usize,
    pub unstable: usize,
    pub zero_stable: usize,
    pub pi_stable: usize,
    pub unclassified: usize,
    /// Denominator of the relative cycle frequencies.
    pub cycle_total: usize,
    pub cycles: Vec<CycleFrequency>,
}

impl FrequencyTable {
    pub fn relative(&self, n: u32) -> f64 {
        self.cycles.iter().find(|c| c.n == n).map_or(0.0, |c| c.relative)
    }

    pub fn count(&self, n: u32) -> usize {
        self.cycles.iter().find(|c| c.n == n).map_or(0, |c| c.count)
    }
}

/// Counts per label; n-cycle shares are relative to the number of cycle cells.
pub fn frequency_table(grid: &StabilityGrid) -> FrequencyTable {
    let mut counts: BTreeMap<LabelKey, usize> = BTreeMap::new();
    for l in &grid.labels {
        *counts.entry(l.into()).or_default() += 1;
    }
    let get = |k: LabelKey| counts.get(&k).copied().unwrap_or(0);
    let cycle_total: usize = counts.iter().filter(|(k, _)| matches!(k, LabelKey::Cycle(_))).map(|(_, c)| c).sum();
    let cycles = counts
        .iter()
        .filter_map(|(k, &count)| match k {
            LabelKey::Cycle(n) => Some(CycleFrequency { n: *n, count, relative: 100.0 * count as f64 / cycle_total as f64 }),
            _ => None,
        })
        .collect();
    FrequencyTable {
        total: grid.labels.len(),
        unstable: get(LabelKey::Unstable),
        zero_stable: get(LabelKey::ZeroStable),
        pi_stable: get(LabelKey::PiStable),
        unclassified: get(LabelKey::Unclassified),
        cycle_total,
        cycles,
    }
}
