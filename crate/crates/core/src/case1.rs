//! Adaptive gain for perturbations with a known growth envelope.
//!
//! The control is `u = L(t, z) u_r(z)` with
//!
//! ```text
//! L = l(t)                                  before t_bar
//! L = c_bar (mu / (mu - V))^{gamma_r (1 + kappa/2)}   from t_bar on
//! ```
//!
//! where `t_bar` is the first time `V(z(t)) <= mu(t) / 2` and
//! `c_bar = l(t_bar) / 2^{gamma_r (1 + kappa/2)}` makes `L` continuous there.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::feedback::FeedbackPair;
use crate::hom::HomogeneityParams;
use crate::math;
use crate::plant::Envelope;

/// Relative guard below the barrier: `V >= mu (1 - BARRIER_GUARD)` is a blow-up.
pub const BARRIER_GUARD: f64 = 1e-9;

/// The prescribed bound `mu(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSchedule {
    /// `mu0 exp(-lambda t)`
    Exponential { mu0: f64, lambda: f64 },
    Constant { mu0: f64 },
}

impl MuSchedule {
    pub fn exponential(mu0: f64, lambda: f64) -> Result<Self> {
        check_positive("mu0", mu0)?;
        check_positive("lambda", lambda)?;
        Ok(MuSchedule::Exponential { mu0, lambda })
    }

    pub fn constant(mu0: f64) -> Result<Self> {
        check_positive("mu0", mu0)?;
        Ok(MuSchedule::Constant { mu0 })
    }

    pub fn mu0(&self) -> f64 {
        match *self {
            MuSchedule::Exponential { mu0, .. } | MuSchedule::Constant { mu0 } => mu0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            MuSchedule::Exponential { mu0, lambda } => mu0 * math::exp(-lambda * t),
            MuSchedule::Constant { mu0 } => mu0,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            MuSchedule::Exponential { lambda, .. } => -lambda * self.value(t),
            MuSchedule::Constant { .. } => 0.0,
        }
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

/// `l(t) = (l0 + slope t) exp(exp_rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthGain {
    l0: f64,
    slope: f64,
    exp_rate: f64,
}

impl GrowthGain {
    pub fn new(l0: f64, slope: f64, exp_rate: f64) -> Result<Self> {
        if !(l0 >= 1.0) || !l0.is_finite() {
            return Err(Error::Domain(format!("l0 must be >= 1, got {l0}")));
        }
        for (name, x) in [("slope", slope), ("exp_rate", exp_rate)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::Domain(format!("{name} must be >= 0, got {x}")));
            }
        }
        Ok(Self { l0, slope, exp_rate })
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn exp_rate(&self) -> f64 {
        self.exp_rate
    }

    pub fn eval(&self, t: f64) -> f64 {
        let lin = self.l0 + self.slope * t;
        if self.exp_rate == 0.0 {
            lin
        } else {
            lin * math::exp(self.exp_rate * t)
        }
    }
}

/// `l(t) = 1 + t`.
impl Default for GrowthGain {
    fn default() -> Self {
        Self { l0: 1.0, slope: 1.0, exp_rate: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Searching,
    Barrier,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Searching => "searching",
            Phase::Barrier => "barrier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case1State {
    pub phase: Phase,
    pub t_bar: Option<f64>,
    pub c_bar: Option<f64>,
}

impl Default for Case1State {
    fn default() -> Self {
        Self { phase: Phase::Searching, t_bar: None, c_bar: None }
    }
}

impl Case1State {
    /// The state right after the switch at `t_bar`.
    pub fn switched(t_bar: f64, growth: &GrowthGain, params: &HomogeneityParams) -> Self {
        let c_bar = growth.eval(t_bar) / math::powf(2.0, params.barrier_exponent());
        Self { phase: Phase::Barrier, t_bar: Some(t_bar), c_bar: Some(c_bar) }
    }
}

/// `L_mu(V) = mu / (mu - V)`.
pub fn barrier_gain(mu: f64, v: f64) -> Result<f64> {
    check_positive("mu", mu)?;
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("V must be non-negative, got {v}")));
    }
    if v >= mu * (1.0 - BARRIER_GUARD) {
        return Err(Error::BarrierBlowup { v, bound: mu });
    }
    Ok(mu / (mu - v))
}

/// `L(t, z)` given `V = V(z)`, advancing the state machine.
///
/// A Searching state switches as soon as `V <= mu(t) / 2`; called with
/// `t = 0` this is the `t_bar = 0` convention.
pub fn adaptive_gain(
    t: f64,
    v: f64,
    schedule: &MuSchedule,
    growth: &GrowthGain,
    params: &HomogeneityParams,
    state: Case1State,
) -> Result<(f64, Case1State)> {
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("V must be non-negative, got {v}")));
    }
    let mu = schedule.value(t);
    let state = match state.phase {
        Phase::Searching if v <= 0.5 * mu => Case1State::switched(t, growth, params),
        Phase::Searching => return Ok((growth.eval(t), state)),
        Phase::Barrier => state,
    };
    let c_bar = state.c_bar.ok_or_else(|| Error::Precondition("Barrier phase without c_bar".into()))?;
    let gain = c_bar * math::powf(barrier_gain(mu, v)?, params.barrier_exponent());
    Ok((gain, state))
}

/// `u = L(t, z) u_r(z)`.
pub fn control_case1(
    t: f64,
    z: &[f64],
    pair: &FeedbackPair,
    schedule: &MuSchedule,
    growth: &GrowthGain,
    state: Case1State,
) -> Result<(f64, Case1State)> {
    pair.params().check_dim(z)?;
    let (gain, state) = adaptive_gain(t, pair.value(z), schedule, growth, pair.params(), state)?;
    Ok((gain * pair.feedback(z), state))
}

/// `alpha_tilde(t) = mu(t) / phi_tilde(t)^{1 + 1/(gamma_r (1 + kappa/2))}`.
pub fn alpha_tilde(t: f64, schedule: &MuSchedule, phi_tilde: &Envelope, params: &HomogeneityParams) -> f64 {
    alpha_tilde_from(schedule.value(t), phi_tilde.eval(t), params.barrier_exponent())
}

pub(crate) fn alpha_tilde_from(mu: f64, phi_tilde: f64, barrier_exponent: f64) -> f64 {
    mu / math::powf(phi_tilde, 1.0 + 1.0 / barrier_exponent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    /// `mu' > -(c_r/2) mu^{1 + kappa/2}` on the whole grid.
    pub decay_ok: bool,
    /// Smallest `mu' + (c_r/2) mu^{1 + kappa/2}` seen.
    pub decay_margin: f64,
    /// Largest admissible `lambda` for an exponential schedule with this `mu0`.
    pub lambda_limit: Option<f64>,
    /// `l mu^b / phi_tilde^{1+b}` strictly increasing over the last quarter.
    pub growth_ok: bool,
    /// The growth ratio at the start and end of the last quarter.
    pub growth_ratio: (f64, f64),
}

impl ScheduleReport {
    pub fn passed(&self) -> bool {
        self.decay_ok && self.growth_ok
    }
}

const SCHEDULE_GRID: usize = 1000;

/// Finite-horizon checks of the admissibility conditions on `mu` and `l`.
///
/// The growth condition is a limit; over a finite horizon the proxy is that
/// the ratio keeps increasing over the last quarter of `[0, horizon]`.
pub fn validate_schedules(
    schedule: &MuSchedule,
    growth: &GrowthGain,
    phi_tilde: &Envelope,
    c_r: f64,
    params: &HomogeneityParams,
    horizon: f64,
) -> Result<ScheduleReport> {
    check_positive("c_r", c_r)?;
    check_positive("horizon", horizon)?;
    let q = params.decay_exponent();
    let b = params.barrier_exponent();
    let grid: Vec<f64> = (0..=SCHEDULE_GRID).map(|k| horizon * k as f64 / SCHEDULE_GRID as f64).collect();

    let decay_margin = grid
        .iter()
        .map(|&t| schedule.derivative(t) + 0.5 * c_r * math::powf(schedule.value(t), q))
        .fold(f64::INFINITY, f64::min);
    let lambda_limit = match schedule {
        MuSchedule::Exponential { mu0, .. } => Some(0.5 * c_r * math::powf(*mu0, 0.5 * params.kappa())),
        MuSchedule::Constant { .. } => None,
    };

    let ratio = |t: f64| growth.eval(t) * math::powf(schedule.value(t), b) / math::powf(phi_tilde.eval(t), 1.0 + b);
    let tail: Vec<f64> = grid[3 * SCHEDULE_GRID / 4..].iter().map(|&t| ratio(t)).collect();
    let growth_ok = tail.windows(2).all(|w| w[1] > w[0]);

    Ok(ScheduleReport {
        decay_ok: decay_margin > 0.0,
        decay_margin,
        lambda_limit,
        growth_ok,
        growth_ratio: (tail[0], tail[tail.len() - 1]),
    })
}
