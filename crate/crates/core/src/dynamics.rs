//! Circuit parameter mapping, equations of motion and the fixed-step integrator.
//!
//! The reduced dynamics is written in terms of the phase `phi = phi_I - phi_g/2`
//! and the dimensionless time `tau = omega_g t / 2`:
//!
//! ```text
//! d2phi/dtau2 = -(alpha + eps_bar cos tau) sin phi - kappa dphi/dtau
//! ```
//!
//! With `alpha = 0` this is the voltage-biased junction pair. A non-zero `alpha`
//! gives the parametrically driven pendulum with gravity; its drive phase is
//! shifted by half a period relative to the usual `alpha - beta cos tau` form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Superconducting flux quantum h / 2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

/// Default integration step: 400 steps per drive period.
pub const DEFAULT_DTAU: f64 = 2.0 * std::f64::consts::PI / 400.0;

/// Physical parameters of two identical junctions in series under a voltage bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Josephson energy of each junction (J).
    pub e_j: f64,
    /// Capacitance of the junction between the source and the island (F).
    pub c_j1: f64,
    /// Capacitance of the junction between the island and ground (F).
    pub c_j2: f64,
    /// Bias voltage (V).
    pub v_g: f64,
    /// Shunt resistance of each junction (ohm). `None` is lossless.
    pub r: Option<f64>,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("e_j", self.e_j)?;
        positive("c_j1", self.c_j1)?;
        positive("c_j2", self.c_j2)?;
        if !self.v_g.is_finite() {
            return Err(Error::InvalidParameter(format!("v_g must be finite, got {}", self.v_g)));
        }
        if self.v_g == 0.0 {
            return Err(Error::ZeroBias);
        }
        if let Some(r) = self.r {
            positive("r", r)?;
        }
        Ok(())
    }
}

/// Energy and frequency scales derived from [`CircuitParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Charging energy e^2 / [2 (C_J1 + C_J2)] (J).
    pub e_c: f64,
    /// Josephson angular frequency sqrt(8 E_C E_J) / hbar (rad/s).
    pub omega_j: f64,
    /// Drive angular frequency 2 pi V_g / Phi_0 (rad/s). Carries the sign of V_g.
    pub omega_g: f64,
    /// Cooper pairs supplied by the source to the series capacitance.
    pub n_multiplier: f64,
}

/// Dimensionless parameters of the reduced equation of motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynParams {
    pub eps_bar: f64,
    pub kappa: f64,
    pub alpha: f64,
}

impl DynParams {
    /// Circuit case: no gravity term.
    pub fn new(eps_bar: f64, kappa: f64) -> Self {
        Self { eps_bar, kappa, alpha: 0.0 }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_bar.is_finite() && self.kappa.is_finite() && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite dynamics parameters {self:?}")));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParameter(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Phase and phase velocity. The phase is never wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub phi: f64,
    pub v: f64,
}

impl PhaseState {
    pub const fn new(phi: f64, v: f64) -> Self {
        Self { phi, v }
    }

    fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.v.is_finite()
    }
}

impl std::ops::Neg for PhaseState {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.phi, -self.v)
    }
}

/// Uniformly sampled trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub tau0: f64,
    pub dtau: f64,
    pub samples: Vec<PhaseState>,
    pub params: DynParams,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn tau_at(&self, i: usize) -> f64 {
        self.tau0 + i as f64 * self.dtau
    }

    /// Time span covered by the samples.
    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dtau
    }

    pub fn phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.phi)
    }

    pub fn velocities(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.v)
    }

    /// Samples from `tau_from` (inclusive) onward.
    pub fn tail_from(&self, tau_from: f64) -> Trajectory {
        let skip = (((tau_from - self.tau0) / self.dtau).ceil().max(0.0) as usize).min(self.len().saturating_sub(1));
        Trajectory {
            tau0: self.tau_at(skip),
            dtau: self.dtau,
            samples: self.samples[skip..].to_vec(),
            params: self.params,
        }
    }
}

/// Energy and frequency scales of a circuit.
pub fn derive_scales(p: &CircuitParams) -> Result<DerivedScales> {
    p.validate()?;
    let e = ELEMENTARY_CHARGE;
    let c_sum = p.c_j1 + p.c_j2;
    let e_c = e * e / (2.0 * c_sum);
    let omega_j = (8.0 * e_c * p.e_j).sqrt() / HBAR;
    let omega_g = 2.0 * std::f64::consts::PI * p.v_g / FLUX_QUANTUM;
    let n_multiplier = p.c_j1 * p.c_j2 * p.v_g / (2.0 * e * c_sum);
    Ok(DerivedScales { e_c, omega_j, omega_g, n_multiplier })
}

/// Dimensionless drive amplitude and damping of the reduced equation.
///
/// Time is scaled with |omega_g| so a negative bias gives the same dynamics as a
/// positive one (the drive `cos tau` is even).
pub fn to_dimensionless(p: &CircuitParams) -> Result<DynParams> {
    let s = derive_scales(p)?;
    let eps_bar = 8.0 * s.omega_j * s.omega_j / (s.omega_g * s.omega_g);
    let kappa = match p.r {
        Some(r) => 4.0 / (s.omega_g.abs() * r * (p.c_j1 + p.c_j2)),
        None => 0.0,
    };
    Ok(DynParams { eps_bar, kappa, alpha: 0.0 })
}

/// Initial phase for a static flux threading the loop before the bias is applied.
///
/// `flux_ratio` is Phi_B / Phi_0; the phase is `pi * flux_ratio`.
pub fn flux_to_phase(flux_ratio: f64) -> f64 {
    std::f64::consts::PI * flux_ratio
}

#[inline]
fn accel(phi: f64, v: f64, cos_tau: f64, d: &DynParams) -> f64 {
    -(d.alpha + d.eps_bar * cos_tau) * phi.sin() - d.kappa * v
}

/// Right-hand side `(dphi/dtau, dv/dtau)` of the reduced equation.
pub fn rotor_rhs(s: PhaseState, tau: f64, d: &DynParams) -> (f64, f64) {
    (s.v, accel(s.phi, s.v, tau.cos(), d))
}

/// Integration horizon and output sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub dtau: f64,
    pub steps: usize,
}

impl StepPlan {
    pub fn new(tau_end: f64, dtau: f64) -> Result<Self> {
        if !(dtau.is_finite() && dtau > 0.0) {
            return Err(Error::InvalidParameter(format!("dtau must be positive, got {dtau}")));
        }
        if !(tau_end.is_finite() && tau_end > 0.0) {
            return Err(Error::InvalidParameter(format!("tau_end must be positive, got {tau_end}")));
        }
        let steps = ((tau_end / dtau).round() as usize).max(1);
        Ok(Self { dtau, steps })
    }
}

/// Classical RK4 stepper for the reduced equation.
///
/// Times are `k * dtau` rather than accumulated sums, so runs with equal inputs
/// are bit-identical and the drive stays in phase over long horizons. When the
/// step divides the drive period the drive values are tabulated per period.
#[derive(Debug, Clone)]
pub struct Rk4 {
    params: DynParams,
    dtau: f64,
    /// `cos(j dtau)` and `cos((j + 1/2) dtau)` for one drive period.
    drive: Option<(Vec<f64>, Vec<f64>)>,
}

impl Rk4 {
    pub fn new(params: DynParams, dtau: f64) -> Self {
        let per_period = 2.0 * std::f64::consts::PI / dtau;
        let n = per_period.round();
        let drive = ((per_period - n).abs() < 1e-9 && (1.0..=1e6).contains(&n)).then(|| {
            let n = n as usize;
            let whole = (0..n).map(|j| (j as f64 * dtau).cos()).collect();
            let half = (0..n).map(|j| ((j as f64 + 0.5) * dtau).cos()).collect();
            (whole, half)
        });
        Self { params, dtau, drive }
    }

    #[inline]
    fn drive_at(&self, k: usize) -> (f64, f64, f64) {
        match &self.drive {
            Some((whole, half)) => {
                let n = whole.len();
                let j = k % n;
                (whole[j], half[j], whole[(j + 1) % n])
            }
            None => {
                let h = self.dtau;
                let tau = k as f64 * h;
                (tau.cos(), (tau + 0.5 * h).cos(), ((k + 1) as f64 * h).cos())
            }
        }
    }

    /// One step from time index `k`.
    #[inline]
    pub fn step(&self, s: PhaseState, k: usize) -> PhaseState {
        let h = self.dtau;
        let d = &self.params;
        let (c0, c_half, c1) = self.drive_at(k);

        let k1p = s.v;
        let k1v = accel(s.phi, s.v, c0, d);
        let p2 = s.phi + 0.5 * h * k1p;
        let v2 = s.v + 0.5 * h * k1v;
        let k2p = v2;
        let k2v = accel(p2, v2, c_half, d);
        let p3 = s.phi + 0.5 * h * k2p;
        let v3 = s.v + 0.5 * h * k2v;
        let k3p = v3;
        let k3v = accel(p3, v3, c_half, d);
        let p4 = s.phi + h * k3p;
        let v4 = s.v + h * k3v;
        let k4p = v4;
        let k4v = accel(p4, v4, c1, d);

        PhaseState::new(
            s.phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
            s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    }

    /// Advance from step index `from` to `to` without recording.
    pub fn advance(&self, mut s: PhaseState, from: usize, to: usize) -> Result<PhaseState> {
        for k in from..to {
            s = self.step(s, k);
            if !s.is_finite() {
                return Err(Error::Diverged { tau: (k + 1) as f64 * self.dtau });
            }
        }
        Ok(s)
    }
}

/// Integrate the reduced equation from `tau = 0` to `tau_end`, keeping every
/// `sample_stride`-th state (the initial state is always kept).
pub fn integrate(ic: PhaseState, d: &DynParams, tau_end: f64, dtau: f64, sample_stride: usize) -> Result<Trajectory> {
    integrate_window(ic, d, 0.0, tau_end, dtau, sample_stride)
}

/// Integrate to `tau_end` but keep only samples at or after `tau_record`.
///
/// This is the transient-then-measure pattern used by classification: the
/// transient is stepped without allocation.
pub fn integrate_window(
    ic: PhaseState,
    d: &DynParams,
    tau_record: f64,
    tau_end: f64,
    dtau: f64,
    sample_stride: usize,
) -> Result<Trajectory> {
    d.validate()?;
    if sample_stride == 0 {
        return Err(Error::InvalidParameter("sample_stride must be >= 1".into()));
    }
    if !ic.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite initial state {ic:?}")));
    }
    let plan = StepPlan::new(tau_end, dtau)?;
    let first = if tau_record <= 0.0 {
        0
    } else {
        // First stride-aligned step at or after tau_record.
        let k = (tau_record / dtau).round() as usize;
        k.div_ceil(sample_stride) * sample_stride
    }
    .min(plan.steps);

    let rk = Rk4::new(*d, dtau);
    let mut s = rk.advance(ic, 0, first)?;
    let mut samples = Vec::with_capacity((plan.steps - first) / sample_stride + 1);
    samples.push(s);
    let mut k = first;
    while k + sample_stride <= plan.steps {
        s = rk.advance(s, k, k + sample_stride)?;
        k += sample_stride;
        samples.push(s);
    }
    Ok(Trajectory { tau0: first as f64 * dtau, dtau: dtau * sample_stride as f64, samples, params: *d })
}

/// Integrate the island-node equation directly.
///
/// State is `(phi_I, dphi_I/dtau)` with the source phase `phi_g(tau) = phi_g0 + 2 tau`:
///
/// ```text
/// d2phi_I/dtau2 = -(eps_bar / 2) [sin phi_I + sin(phi_I - phi_g)] - kappa (dphi_I/dtau - 1)
/// ```
///
/// The damping acts on the island velocity relative to half the source
/// velocity, as the resistive shunts see it. `ic` is given in reduced
/// coordinates and converted with `phi_I = phi + phi_g0 / 2`, `dphi_I = v + 1`.
pub fn integrate_node_equations(d: &DynParams, phi_g0: f64, ic: PhaseState, tau_end: f64, dtau: f64) -> Result<Trajectory> {
    d.validate()?;
    let plan = StepPlan::new(tau_end, dtau)?;
    let h = dtau;
    let half_eps = 0.5 * d.eps_bar;
    let f = |phi_i: f64, w: f64, tau: f64| -> f64 {
        let phi_g = phi_g0 + 2.0 * tau;
        -half_eps * (phi_i.sin() + (phi_i - phi_g).sin()) - d.kappa * (w - 1.0)
    };
    let mut s = PhaseState::new(ic.phi + 0.5 * phi_g0, ic.v + 1.0);
    let mut samples = Vec::with_capacity(plan.steps + 1);
    samples.push(s);
    for k in 0..plan.steps {
        let tau = k as f64 * h;
        let tm = tau + 0.5 * h;
        let t1 = (k + 1) as f64 * h;
        let k1p = s.v;
        let k1v = f(s.phi, s.v, tau);
        let k2p = s.v + 0.5 * h * k1v;
        let k2v = f(s.phi + 0.5 * h * k1p, k2p, tm);
        let k3p = s.v + 0.5 * h * k2v;
        let k3v = f(s.phi + 0.5 * h * k2p, k3p, tm);
        let k4p = s.v + h * k3v;
        let k4v = f(s.phi + h * k3p, k4p, t1);
        s = PhaseState::new(
            s.phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
            s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        );
        if !s.is_finite() {
            return Err(Error::Diverged { tau: t1 });
        }
        samples.push(s);
    }
    Ok(Trajectory { tau0: 0.0, dtau, samples, params: *d })
}

/// Map a node-level trajectory back to reduced coordinates.
pub fn node_to_reduced(node: &Trajectory, phi_g0: f64) -> Trajectory {
    let samples = node
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| PhaseState::new(s.phi - node.tau_at(i) - 0.5 * phi_g0, s.v - 1.0))
        .collect();
    Trajectory { samples, ..node.clone() }
}
