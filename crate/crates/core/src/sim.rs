//! Fixed-step closed-loop simulation.
//!
//! The controller phase and gains are frozen over each RK4 step, so `V` is
//! only evaluated on the grid. When a step ends below the switching level,
//! the crossing time is refined by bisection on the sub-step length, the
//! phase is switched there, and the rest of the step is integrated with the
//! new gains, so the grid stays uniform.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::case1::{barrier_gain, GrowthGain, MuSchedule, Phase, BARRIER_GUARD};
use crate::error::{Error, Result};
use crate::feedback::FeedbackPair;
use crate::math;
use crate::plant::{rhs_into, Disturbance, Envelope};

/// One classical RK4 step of `x' = f(t, x)`.
pub fn step_rk4<F>(mut f: F, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let mut work = Rk4::new(x.len());
    let mut out = vec![0.0; x.len()];
    work.step(
        &mut |t, x, dx: &mut [f64]| {
            dx.copy_from_slice(&f(t, x));
            Ok(())
        },
        t,
        x,
        h,
        &mut out,
    )?;
    Ok(out)
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self { k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]], tmp: vec![0.0; n] }
    }

    fn step<F>(&mut self, f: &mut F, t: f64, x: &[f64], h: f64, out: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        f(t, x, k1)?;
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, tmp, k2)?;
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, tmp, k3)?;
        for i in 0..x.len() {
            tmp[i] = x[i] + h * k3[i];
        }
        f(t + h, tmp, k4)?;
        for i in 0..x.len() {
            out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite state after RK4 step at t = {t}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Case1 { schedule: MuSchedule, growth: GrowthGain },
    Host { epsilon: f64, growth: GrowthGain },
    /// Non-adaptive super-twisting reference, `u = k_p u_r + xi`, `xi' = -k_i d_r V`.
    SuperTwisting { k_p: f64, k_i: f64 },
    /// `u = u_r`.
    PureChain,
    /// `u = 0`.
    OpenLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Case1,
    Host,
    SuperTwisting,
    PureChain,
    OpenLoop,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::Case1,
        ControllerKind::Host,
        ControllerKind::SuperTwisting,
        ControllerKind::PureChain,
        ControllerKind::OpenLoop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Case1 => "case1",
            ControllerKind::Host => "host",
            ControllerKind::SuperTwisting => "super_twisting",
            ControllerKind::PureChain => "pure_chain",
            ControllerKind::OpenLoop => "open_loop",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the controller carries the integral state `xi`.
    pub fn has_integral(&self) -> bool {
        matches!(self, ControllerKind::Host | ControllerKind::SuperTwisting)
    }
}

impl Controller {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Case1 { .. } => ControllerKind::Case1,
            Controller::Host { .. } => ControllerKind::Host,
            Controller::SuperTwisting { .. } => ControllerKind::SuperTwisting,
            Controller::PureChain => ControllerKind::PureChain,
            Controller::OpenLoop => ControllerKind::OpenLoop,
        }
    }

    /// `mu(t)` for Case 1, `eps` for HOST, NaN otherwise.
    pub fn bound(&self, t: f64) -> f64 {
        match self {
            Controller::Case1 { schedule, .. } => schedule.value(t),
            Controller::Host { epsilon, .. } => *epsilon,
            _ => f64::NAN,
        }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            Controller::Host { epsilon, .. } if !(epsilon > 0.0) || !epsilon.is_finite() => {
                Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")))
            }
            Controller::SuperTwisting { k_p, k_i } if !(k_p > 0.0 && k_i > 0.0) || !(k_p + k_i).is_finite() => {
                Err(Error::Domain(format!("k_p and k_i must be positive, got ({k_p}, {k_i})")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub pair: FeedbackPair,
    pub controller: Controller,
    pub disturbance: Disturbance,
    pub z0: Vec<f64>,
    pub h: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        pair: FeedbackPair,
        controller: Controller,
        disturbance: Disturbance,
        z0: Vec<f64>,
        h: f64,
        horizon: f64,
        seed: u64,
    ) -> Result<Self> {
        let sc = Self { pair, controller, disturbance, z0, h, horizon, seed };
        sc.check()?;
        Ok(sc)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Domain(format!("step h must be positive, got {}", self.h)));
        }
        if !(self.horizon > self.h) || !self.horizon.is_finite() {
            return Err(Error::Domain(format!(
                "horizon must exceed the step: T = {}, h = {}",
                self.horizon, self.h
            )));
        }
        self.pair.params().check_dim(&self.z0)?;
        if self.z0.iter().any(|z| !z.is_finite()) {
            return Err(Error::Domain(format!("z0 must be finite: {:?}", self.z0)));
        }
        self.controller.check()
    }

    /// Number of RK4 steps; the grid is `t_n = n h`, `n = 0..=steps`.
    pub fn steps(&self) -> usize {
        math::floor(self.horizon / self.h * (1.0 + 1e-12)) as usize
    }

    /// Exponent of the barrier gain in `L` (Case 1) or `L1` (HOST).
    pub fn gain_exponent(&self) -> f64 {
        match self.controller {
            Controller::Host { .. } => -0.5 * self.pair.params().kappa(),
            _ => self.pair.params().barrier_exponent(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gains {
    Single(f64),
    Pair { l1: f64, l2: f64, xi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub z: Vec<f64>,
    pub v: f64,
    /// `mu(t)` or `eps`; NaN for controllers without a bound.
    pub bound: f64,
    /// `None` for controllers without phases.
    pub phase: Option<Phase>,
    pub gains: Gains,
    pub u: f64,
    pub phi: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// First time `V <= bound / 2`; gains are `L` (or `L1`) on both sides.
    Crossing { t: f64, v: f64, bound: f64, gain_before: f64, gain_after: f64 },
    /// `V >= bound` at a grid point after the crossing.
    Escape { t: f64, v: f64, bound: f64 },
    /// `V` reached the barrier inside an integration step.
    BarrierBlowup { t: f64, v: f64, bound: f64 },
    /// Non-finite state.
    Blowup { t: f64 },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Crossing { .. } => "crossing",
            Event::Escape { .. } => "escape",
            Event::BarrierBlowup { .. } => "barrier_blowup",
            Event::Blowup { .. } => "blowup",
        }
    }

    pub fn t(&self) -> f64 {
        match *self {
            Event::Crossing { t, .. } | Event::Escape { t, .. } | Event::BarrierBlowup { t, .. } | Event::Blowup { t } => t,
        }
    }
}

/// What the analysis needs to know about the run besides the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub controller: ControllerKind,
    pub r: usize,
    pub p: f64,
    pub kappa: f64,
    pub gains: Vec<f64>,
    pub h: f64,
    pub horizon: f64,
    pub seed: u64,
    pub disturbance: String,
    /// Exponent of the barrier gain in `L` (Case 1) or `L1` (HOST).
    pub gain_exponent: f64,
    /// `gamma_r (1 + kappa/2)`.
    pub barrier_exponent: f64,
    /// Growth envelope of the perturbation.
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub records: Vec<Record>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn crossing(&self) -> Option<&Event> {
        self.events.iter().find(|e| matches!(e, Event::Crossing { .. }))
    }

    pub fn t_bar(&self) -> Option<f64> {
        self.crossing().map(Event::t)
    }

    /// True when the run stopped before the horizon.
    pub fn truncated(&self) -> bool {
        self.events.iter().any(|e| !matches!(e, Event::Crossing { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Fixed,
    Searching,
    Barrier { c_bar: f64 },
}

/// Gains held over one step: `u = lead u_r + xi`, `xi' = -integral d_r V`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Held {
    lead: f64,
    integral: f64,
}

struct ClosedLoop<'a> {
    sc: &'a Scenario,
    r: usize,
    gain_exponent: f64,
}

impl<'a> ClosedLoop<'a> {
    fn new(sc: &'a Scenario) -> Self {
        Self { sc, r: sc.pair.r(), gain_exponent: sc.gain_exponent() }
    }

    fn c_bar(&self, t_bar: f64) -> f64 {
        let l = match &self.sc.controller {
            Controller::Case1 { growth, .. } | Controller::Host { growth, .. } => growth.eval(t_bar),
            _ => 1.0,
        };
        l / math::powf(2.0, self.gain_exponent)
    }

    /// Gains at time `t` and level `v`.
    fn held(&self, t: f64, v: f64, mode: Mode) -> Result<Held> {
        let h = match (&self.sc.controller, mode) {
            (Controller::Case1 { growth, .. } | Controller::Host { growth, .. }, Mode::Searching) => {
                Held { lead: growth.eval(t), integral: 0.0 }
            }
            (Controller::Case1 { schedule, .. }, Mode::Barrier { c_bar }) => {
                let lmu = barrier_gain(schedule.value(t), v)?;
                Held { lead: c_bar * math::powf(lmu, self.gain_exponent), integral: 0.0 }
            }
            (Controller::Host { epsilon, .. }, Mode::Barrier { c_bar }) => {
                let leps = barrier_gain(*epsilon, v)?;
                Held { lead: c_bar * math::powf(leps, self.gain_exponent), integral: leps }
            }
            (Controller::SuperTwisting { k_p, k_i }, _) => Held { lead: *k_p, integral: *k_i },
            (Controller::PureChain, _) => Held { lead: 1.0, integral: 0.0 },
            (Controller::OpenLoop, _) => Held { lead: 0.0, integral: 0.0 },
            (_, m) => return Err(Error::Precondition(format!("mode {m:?} does not apply to this controller"))),
        };
        Ok(h)
    }

    fn control(&self, x: &[f64], held: Held) -> f64 {
        let xi = x.get(self.r).copied().unwrap_or(0.0);
        if held.lead == 0.0 {
            xi
        } else {
            held.lead * self.sc.pair.feedback(&x[..self.r]) + xi
        }
    }

    fn deriv(&self, t: f64, x: &[f64], held: Held, dx: &mut [f64]) {
        let u = self.control(x, held);
        rhs_into(t, &x[..self.r], u, &self.sc.disturbance, &mut dx[..self.r]);
        if x.len() > self.r {
            dx[self.r] = if held.integral == 0.0 { 0.0 } else { -held.integral * self.sc.pair.dr_value(&x[..self.r]) };
        }
    }

    fn step(&self, rk: &mut Rk4, t: f64, x: &[f64], h: f64, held: Held, out: &mut [f64]) -> Result<()> {
        rk.step(
            &mut |t, x, dx: &mut [f64]| {
                self.deriv(t, x, held, dx);
                Ok(())
            },
            t,
            x,
            h,
            out,
        )
    }

    fn record(&self, t: f64, x: &[f64], v: f64, mode: Mode, held: Held) -> Record {
        let d = &self.sc.disturbance;
        let gains = if self.sc.controller.kind().has_integral() {
            Gains::Pair { l1: held.lead, l2: held.integral, xi: x[self.r] }
        } else {
            Gains::Single(held.lead)
        };
        Record {
            t,
            z: x[..self.r].to_vec(),
            v,
            bound: self.sc.controller.bound(t),
            phase: match mode {
                Mode::Fixed => None,
                Mode::Searching => Some(Phase::Searching),
                Mode::Barrier { .. } => Some(Phase::Barrier),
            },
            gains,
            u: self.control(x, held),
            phi: d.phi_at(t),
            gamma: d.gamma_at(t),
        }
    }

    /// Switches at `(t, v)`; returns the crossing event and the new gains.
    fn switch(&self, t: f64, v: f64, mode: &mut Mode) -> Result<(Event, Held)> {
        let before = self.held(t, v, *mode)?;
        *mode = Mode::Barrier { c_bar: self.c_bar(t) };
        let after = self.held(t, v, *mode)?;
        let ev = Event::Crossing { t, v, bound: self.sc.controller.bound(t), gain_before: before.lead, gain_after: after.lead };
        Ok((ev, after))
    }
}

/// Bisection iterations for the crossing time; enough to exhaust `f64`.
const CROSSING_ITERATIONS: usize = 60;

fn failure_event(err: Error, t: f64) -> Event {
    match err {
        Error::BarrierBlowup { v, bound } => Event::BarrierBlowup { t, v, bound },
        _ => Event::Blowup { t },
    }
}

/// Integrates the closed loop over `[0, horizon]`.
///
/// Never fails: escapes, barrier blow-ups and non-finite states end the run
/// early with an event.
pub fn run(sc: &Scenario) -> Trajectory {
    let cl = ClosedLoop::new(sc);
    let r = cl.r;
    let kind = sc.controller.kind();
    let params = sc.pair.params();
    let meta = TrajectoryMeta {
        controller: kind,
        r,
        p: params.p(),
        kappa: params.kappa(),
        gains: sc.pair.gains().to_vec(),
        h: sc.h,
        horizon: sc.horizon,
        seed: sc.seed,
        disturbance: sc.disturbance.id.clone(),
        gain_exponent: sc.gain_exponent(),
        barrier_exponent: params.barrier_exponent(),
        envelope: sc.disturbance.envelope.clone(),
    };
    let n_steps = sc.steps();
    let mut traj = Trajectory { meta, records: Vec::with_capacity(n_steps + 1), events: Vec::new() };

    let dim = if kind.has_integral() { r + 1 } else { r };
    let mut x = vec![0.0; dim];
    x[..r].copy_from_slice(&sc.z0);
    let mut mode = match kind {
        ControllerKind::Case1 | ControllerKind::Host => Mode::Searching,
        _ => Mode::Fixed,
    };
    let mut v = sc.pair.value(&x[..r]);
    let held = if mode == Mode::Searching && v <= 0.5 * sc.controller.bound(0.0) {
        cl.switch(0.0, v, &mut mode).map(|(ev, held)| {
            traj.events.push(ev);
            held
        })
    } else {
        cl.held(0.0, v, mode)
    };
    let mut held = match held {
        Ok(held) => held,
        Err(e) => {
            traj.events.push(failure_event(e, 0.0));
            return traj;
        }
    };
    traj.records.push(cl.record(0.0, &x, v, mode, held));

    let mut rk = Rk4::new(dim);
    let mut x1 = vec![0.0; dim];
    let mut probe = vec![0.0; dim];
    for n in 0..n_steps {
        let t = n as f64 * sc.h;
        let t1 = (n + 1) as f64 * sc.h;
        if let Err(e) = cl.step(&mut rk, t, &x, sc.h, held, &mut x1) {
            traj.events.push(failure_event(e, t));
            break;
        }
        v = sc.pair.value(&x1[..r]);
        if !v.is_finite() {
            traj.events.push(Event::Blowup { t: t1 });
            break;
        }

        if mode == Mode::Searching && v <= 0.5 * sc.controller.bound(t1) {
            // g(tau) = V(x(t + tau)) - bound / 2 is positive at 0 and not at h.
            let (mut lo, mut hi) = (0.0, sc.h);
            probe.copy_from_slice(&x1);
            let mut v_bar = v;
            for _ in 0..CROSSING_ITERATIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if let Err(e) = cl.step(&mut rk, t, &x, mid, held, &mut x1) {
                    traj.events.push(failure_event(e, t));
                    return traj;
                }
                let vm = sc.pair.value(&x1[..r]);
                if vm <= 0.5 * sc.controller.bound(t + mid) {
                    hi = mid;
                    v_bar = vm;
                    probe.copy_from_slice(&x1);
                } else {
                    lo = mid;
                }
            }
            let t_bar = t + hi;
            match cl.switch(t_bar, v_bar, &mut mode) {
                Ok((ev, after)) => {
                    traj.events.push(ev);
                    held = after;
                }
                Err(e) => {
                    traj.events.push(failure_event(e, t_bar));
                    break;
                }
            }
            if t1 > t_bar {
                if let Err(e) = cl.step(&mut rk, t_bar, &probe, t1 - t_bar, held, &mut x1) {
                    traj.events.push(failure_event(e, t_bar));
                    break;
                }
                v = sc.pair.value(&x1[..r]);
            } else {
                x1.copy_from_slice(&probe);
                v = v_bar;
            }
        }

        if let Mode::Barrier { .. } = mode {
            let bound = sc.controller.bound(t1);
            if !(v < bound * (1.0 - BARRIER_GUARD)) {
                traj.events.push(Event::Escape { t: t1, v, bound });
                break;
            }
        }
        held = match cl.held(t1, v, mode) {
            Ok(held) => held,
            Err(e) => {
                traj.events.push(failure_event(e, t1));
                break;
            }
        };
        traj.records.push(cl.record(t1, &x1, v, mode, held));
        core::mem::swap(&mut x, &mut x1);
    }
    traj
}
