//! Attractor classification of post-transient trajectories.
//!
//! Labels follow a fixed order: escape of the unwrapped phase first, then the
//! two fixed points, then limit cycles around 0 or pi. Limit cycles are further
//! characterized by their period, the number `n` of zero-velocity crossing
//! pairs per period, the turning number `t` of the orbit and its winding number
//! `w` around the center.
//!
//! For every n-cycle `t = n` and `1 <= w <= t`. Multiple-nodding counts `n_A`
//! used elsewhere in the literature relate to these by `n = 2 n_A - w`.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Velocity band treated as "still on the same side" when counting crossings.
pub const CROSSING_HYSTERESIS: f64 = 1e-6;
/// A spectral peak must reach this fraction of the strongest peak.
pub const PEAK_FRACTION: f64 = 0.05;
/// Minimum post-transient coverage accepted by [`classify`], in drive periods.
pub const MIN_DRIVE_PERIODS: f64 = 10.0;
/// Largest `n` representable in the one-byte label code.
pub const MAX_CYCLE_ORDER: u32 = 154;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Phase tolerance for fixed points (rad).
    pub phi_th: f64,
    /// Velocity tolerance separating fixed points from cycles.
    pub v_th: f64,
    /// Unwrapped-phase bound beyond which a solution is unstable (rad).
    pub escape: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { phi_th: 1e-2, v_th: 5e-3, escape: TWO_PI }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.phi_th > 0.0 && self.phi_th < PI / 2.0 && self.v_th > 0.0 && self.escape >= TWO_PI;
        if ok && self.phi_th.is_finite() && self.v_th.is_finite() && self.escape.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid thresholds {self:?}")))
        }
    }
}

/// Fixed point a limit cycle revolves around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Center {
    Zero,
    Pi,
}

impl Center {
    pub fn phase(self) -> f64 {
        match self {
            Center::Zero => 0.0,
            Center::Pi => PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub n: u32,
    pub turning: u32,
    pub winding: u32,
    pub center: Center,
    /// Orbit period in dimensionless time.
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttractorLabel {
    Unstable,
    ZeroStable,
    PiStable,
    NCycle(CycleInfo),
    Unclassified,
}

impl AttractorLabel {
    /// Serialization code: 0 unstable, 1 0-stable, 2 pi-stable, 100 + n for
    /// n-cycles, 255 unclassified.
    pub fn code(&self) -> u8 {
        match self {
            AttractorLabel::Unstable => 0,
            AttractorLabel::ZeroStable => 1,
            AttractorLabel::PiStable => 2,
            AttractorLabel::NCycle(c) => (100 + c.n.min(MAX_CYCLE_ORDER)) as u8,
            AttractorLabel::Unclassified => 255,
        }
    }

    pub fn cycle(&self) -> Option<&CycleInfo> {
        match self {
            AttractorLabel::NCycle(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_cycle(&self) -> bool {
        matches!(self, AttractorLabel::NCycle(_))
    }

    /// Same tag and, for cycles, the same topological numbers.
    pub fn same_class(&self, other: &AttractorLabel) -> bool {
        match (self, other) {
            (AttractorLabel::NCycle(a), AttractorLabel::NCycle(b)) => {
                a.n == b.n && a.turning == b.turning && a.winding == b.winding && a.center == b.center
            }
            _ => self.code() == other.code(),
        }
    }
}

impl fmt::Display for AttractorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttractorLabel::Unstable => write!(f, "unstable"),
            AttractorLabel::ZeroStable => write!(f, "0-stable"),
            AttractorLabel::PiStable => write!(f, "pi-stable"),
            AttractorLabel::NCycle(c) => {
                let center = match c.center {
                    Center::Zero => "0",
                    Center::Pi => "pi",
                };
                write!(f, "{}-cycle (t={}, w={}, center={}, period={:.6})", c.n, c.turning, c.winding, center, c.period)
            }
            AttractorLabel::Unclassified => write!(f, "unclassified"),
        }
    }
}

/// Shift of the unwrapped phase onto the branch whose mean lies in [-pi/2, 3pi/2).
fn branch_shift(mean: f64) -> f64 {
    TWO_PI * ((mean + PI / 2.0) / TWO_PI).floor()
}

/// Classify a post-transient trajectory.
pub fn classify(traj: &Trajectory, th: &Thresholds) -> Result<AttractorLabel> {
    th.validate()?;
    if traj.len() < 3 || traj.duration() < MIN_DRIVE_PERIODS * TWO_PI - 0.5 * traj.dtau {
        return Err(Error::TooShort(format!(
            "{:.3} time units; need at least {MIN_DRIVE_PERIODS} drive periods",
            traj.duration()
        )));
    }

    if traj.phases().any(|p| p.abs() > th.escape) {
        return Ok(AttractorLabel::Unstable);
    }

    let mean = traj.phases().sum::<f64>() / traj.len() as f64;
    let shift = branch_shift(mean);
    let folded_max = traj.phases().map(|p| p - shift).fold(f64::NEG_INFINITY, f64::max);
    let max_speed = traj.velocities().map(f64::abs).fold(0.0, f64::max);

    if max_speed < th.v_th {
        if (folded_max - PI).abs() < th.phi_th {
            return Ok(AttractorLabel::PiStable);
        }
        if folded_max.abs() < th.phi_th {
            return Ok(AttractorLabel::ZeroStable);
        }
        return Ok(AttractorLabel::Unclassified);
    }

    let center = if mean - shift < PI / 2.0 { Center::Zero } else { Center::Pi };
    let offset = shift + center.phase();
    let excursion = traj.phases().map(|p| (p - offset).abs()).fold(0.0, f64::max);
    if excursion >= PI / 2.0 {
        return Ok(AttractorLabel::Unclassified);
    }

    Ok(characterize_cycle(traj, center, offset).map_or(AttractorLabel::Unclassified, AttractorLabel::NCycle))
}

fn characterize_cycle(traj: &Trajectory, center: Center, offset: f64) -> Result<CycleInfo> {
    let estimate = estimate_period(traj)?;
    let period = resolve_period(traj, estimate)?;
    let n = count_crossings(traj, period)?;
    let turning = turning_number(traj, period)?;
    let winding = winding_number_about(traj, offset, period)?;
    if n == 0 || n > MAX_CYCLE_ORDER {
        return Err(Error::InconsistentCrossings(2 * n as usize));
    }
    Ok(CycleInfo { n, turning, winding, center, period })
}

/// Dominant period from the lowest significant peak of the phase spectrum.
///
/// The mean-removed phase is Hann-windowed and zero-padded; a peak is a local
/// maximum of the magnitude reaching [`PEAK_FRACTION`] of the strongest one,
/// refined by three-point parabolic interpolation.
pub fn estimate_period(traj: &Trajectory) -> Result<f64> {
    let n = traj.len();
    if n < 8 {
        return Err(Error::TooShort(format!("{n} samples")));
    }
    let mean = traj.phases().sum::<f64>() / n as f64;
    let size = (n.next_power_of_two() * 4).max(64);
    let denom = (n - 1) as f64;
    let mut buf: Vec<Complex<f64>> = traj
        .phases()
        .enumerate()
        .map(|(i, p)| {
            let w = 0.5 * (1.0 - (TWO_PI * i as f64 / denom).cos());
            Complex::new((p - mean) * w, 0.0)
        })
        .collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);

    let half = size / 2;
    let mag: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();
    let global = mag[1..].iter().copied().fold(0.0, f64::max);
    if !(global > 0.0) || !global.is_finite() {
        return Err(Error::NoPeriod);
    }
    let floor = PEAK_FRACTION * global;
    let peak = (1..half).find(|&k| mag[k] >= floor && mag[k] > mag[k - 1] && mag[k] >= mag[k + 1]).ok_or(Error::NoPeriod)?;

    let (a, b, c) = (mag[peak - 1], mag[peak], mag[peak + 1]);
    let curvature = a - 2.0 * b + c;
    let delta = if curvature < 0.0 { (0.5 * (a - c) / curvature).clamp(-0.5, 0.5) } else { 0.0 };
    let bin = peak as f64 + delta;
    if bin <= 0.0 {
        return Err(Error::NoPeriod);
    }
    Ok(size as f64 * traj.dtau / bin)
}

/// Largest state mismatch between the orbit and itself shifted by `lag` samples.
fn closure_mismatch(traj: &Trajectory, lag: usize) -> f64 {
    traj.samples
        .iter()
        .zip(&traj.samples[lag..])
        .map(|(a, b)| (a.phi - b.phi).abs().max((a.v - b.v).abs()))
        .fold(0.0, f64::max)
}

/// Relative closure tolerance of an orbit, scaled by its extent in phase space.
const CLOSURE_TOLERANCE: f64 = 1e-2;

fn orbit_scale(traj: &Trajectory) -> f64 {
    let (lo, hi) = traj.phases().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
    let vmax = traj.velocities().map(f64::abs).fold(0.0, f64::max);
    (hi - lo).max(vmax).max(1e-12)
}

/// Turn a spectral estimate into a verified orbit period.
///
/// Subharmonic orbits lock to a multiple of the drive period, so the estimate is
/// first snapped to the nearest multiple of 2 pi when within 2%. The result must
/// close the orbit; if it does not, integer multiples of it are tried (a weak
/// fundamental can hide below the peak threshold).
pub fn resolve_period(traj: &Trajectory, estimate: f64) -> Result<f64> {
    let drive_multiple = (estimate / TWO_PI).round();
    let base = if drive_multiple >= 1.0 && (estimate - drive_multiple * TWO_PI).abs() <= 0.02 * estimate {
        drive_multiple * TWO_PI
    } else {
        estimate
    };
    let tol = CLOSURE_TOLERANCE * orbit_scale(traj);
    let mut best = f64::INFINITY;
    for mult in 1.. {
        let period = base * mult as f64;
        let lag = (period / traj.dtau).round() as usize;
        if lag == 0 {
            continue;
        }
        if 2 * lag > traj.len() {
            break;
        }
        let mismatch = closure_mismatch(traj, lag);
        if mismatch < tol {
            return Ok(period);
        }
        best = best.min(mismatch);
    }
    Err(Error::NotPeriodic(best))
}

fn period_samples(traj: &Trajectory, period: f64) -> Result<usize> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
    }
    let lag = (period / traj.dtau).round() as usize;
    if lag < 4 || lag + 2 >= traj.len() {
        return Err(Error::TooShort(format!("period of {lag} samples with {} available", traj.len())));
    }
    Ok(lag)
}

/// Start of a one-period window, placed where the speed is largest so that no
/// zero-velocity crossing sits on the window edge.
fn window_start(traj: &Trajectory, lag: usize) -> usize {
    // Leaves one sample on each side for centered differences.
    let span = (traj.len() - lag - 1).min(lag + 1);
    (1..span.max(2)).max_by(|&a, &b| traj.samples[a].v.abs().total_cmp(&traj.samples[b].v.abs())).unwrap_or(1)
}

/// Number `n` such that the velocity changes sign `2n` times in one period.
pub fn count_crossings(traj: &Trajectory, period: f64) -> Result<u32> {
    let lag = period_samples(traj, period)?;
    let start = window_start(traj, lag);
    let mut last_sign = 0i8;
    let mut raw = 0usize;
    for s in &traj.samples[start..=start + lag] {
        let sign = if s.v > CROSSING_HYSTERESIS {
            1
        } else if s.v < -CROSSING_HYSTERESIS {
            -1
        } else {
            continue;
        };
        if last_sign != 0 && sign != last_sign {
            raw += 1;
        }
        last_sign = sign;
    }
    if raw % 2 == 1 {
        return Err(Error::InconsistentCrossings(raw));
    }
    Ok((raw / 2) as u32)
}

/// Net number of turns of a planar vector sequence, rounded to an integer.
fn net_turns(vectors: impl Iterator<Item = (f64, f64)>) -> Result<u32> {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for (x, y) in vectors {
        if x == 0.0 && y == 0.0 {
            return Err(Error::NotPeriodic(0.0));
        }
        let angle = y.atan2(x);
        if let Some(p) = prev {
            let mut d = angle - p;
            if d > PI {
                d -= TWO_PI;
            } else if d < -PI {
                d += TWO_PI;
            }
            total += d;
        }
        prev = Some(angle);
    }
    Ok((total / TWO_PI).round().abs() as u32)
}

/// Velocity scale that balances the orbit's phase and velocity extents.
fn aspect_scale(traj: &Trajectory, offset: f64, range: std::ops::RangeInclusive<usize>) -> f64 {
    let window = &traj.samples[range];
    let amp_phi = window.iter().map(|s| (s.phi - offset).abs()).fold(0.0, f64::max);
    let amp_v = window.iter().map(|s| s.v.abs()).fold(0.0, f64::max);
    if amp_v > 0.0 && amp_phi > 0.0 {
        amp_phi / amp_v
    } else {
        1.0
    }
}

fn check_closed(traj: &Trajectory, start: usize, lag: usize) -> Result<()> {
    let a = traj.samples[start];
    let b = traj.samples[start + lag];
    let mismatch = (a.phi - b.phi).abs().max((a.v - b.v).abs());
    if mismatch > CLOSURE_TOLERANCE * orbit_scale(traj) {
        return Err(Error::NotPeriodic(mismatch));
    }
    Ok(())
}

/// Rotations of the orbit around the fixed point `(center, 0)` over one period.
pub fn winding_number(traj: &Trajectory, center: Center, period: f64) -> Result<u32> {
    let mean = traj.phases().sum::<f64>() / traj.len() as f64;
    winding_number_about(traj, branch_shift(mean) + center.phase(), period)
}

/// Winding number around `(offset, 0)` in unwrapped phase coordinates.
pub fn winding_number_about(traj: &Trajectory, offset: f64, period: f64) -> Result<u32> {
    let lag = period_samples(traj, period)?;
    let start = window_start(traj, lag);
    check_closed(traj, start, lag)?;
    let s = aspect_scale(traj, offset, start..=start + lag);
    net_turns(traj.samples[start..=start + lag].iter().map(|p| (p.phi - offset, p.v * s)))
}

/// Rotations of the orbit's tangent vector over one period.
///
/// The tangent is taken from centered differences of the samples, so the
/// result depends only on the sampled curve.
pub fn turning_number(traj: &Trajectory, period: f64) -> Result<u32> {
    let lag = period_samples(traj, period)?;
    let start = window_start(traj, lag);
    check_closed(traj, start, lag)?;
    let mean = traj.phases().sum::<f64>() / traj.len() as f64;
    let scale = aspect_scale(traj, mean, start..=start + lag);
    let s = &traj.samples;
    net_turns((start..=start + lag).map(|i| (s[i + 1].phi - s[i - 1].phi, (s[i + 1].v - s[i - 1].v) * scale)))
}
