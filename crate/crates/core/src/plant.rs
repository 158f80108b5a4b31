//! The perturbed chain of integrators and its disturbance catalog.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A deterministic scalar function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Constant(f64),
    /// `a (1 + b t)`
    Affine { a: f64, b: f64 },
    /// `c + d sin(omega t)`
    Sine { c: f64, d: f64, omega: f64 },
    /// Piecewise linear through `(t, value)` knots, held constant outside.
    Table(Vec<(f64, f64)>),
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Constant(c) => *c,
            Signal::Affine { a, b } => a * (1.0 + b * t),
            Signal::Sine { c, d, omega } => c + d * math::sin(omega * t),
            Signal::Table(knots) => interpolate(knots, t),
        }
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    // knots are strictly increasing in t (checked at construction)
    let k = knots.partition_point(|&(tk, _)| tk <= t);
    let (t0, v0) = knots[k - 1];
    let (t1, v1) = knots[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

fn check_knots(name: &str, knots: &[(f64, f64)]) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::Config(format!("{name}: empty table")));
    }
    if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::Config(format!("{name}: non-finite table entry")));
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Config(format!("{name}: table times must be strictly increasing")));
    }
    Ok(())
}

/// A known non-decreasing envelope `phi_tilde >= 1` for `|phi|`.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    /// `offset + slope t`
    Affine { offset: f64, slope: f64 },
    Table(Vec<(f64, f64)>),
}

impl Envelope {
    pub const ONE: Envelope = Envelope::Affine { offset: 1.0, slope: 0.0 };

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Envelope::Affine { offset, slope } => offset + slope * t,
            Envelope::Table(knots) => interpolate(knots, t),
        }
    }

    /// Checks `phi_tilde >= 1` and monotonicity.
    pub fn check(&self) -> Result<()> {
        match self {
            Envelope::Affine { offset, slope } => {
                if !(*offset >= 1.0) || !(*slope >= 0.0) || !slope.is_finite() {
                    return Err(Error::Config(format!(
                        "envelope offset + slope t needs offset >= 1 and slope >= 0, got ({offset}, {slope})"
                    )));
                }
            }
            Envelope::Table(knots) => {
                check_knots("phi_tilde", knots)?;
                if knots.iter().any(|&(_, v)| v < 1.0) {
                    return Err(Error::Config("phi_tilde must be >= 1".into()));
                }
                if knots.windows(2).any(|w| w[1].1 < w[0].1) {
                    return Err(Error::Config("phi_tilde must be non-decreasing".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceClass {
    /// `gamma >= gamma_m > 0`, `|phi| <= phi_M phi_tilde(t)`.
    Case1 { phi_tilde: Envelope },
    /// `gamma == gamma_m`, `psi = phi / gamma` Lipschitz.
    Case2 { gamma_m: f64 },
}

/// The pair `(gamma(t), phi(t))` together with its declared class.
///
/// `phi_bound` and `psi_lipschitz` are the constants `phi_M`, `psi_M`. The
/// controllers never read them; they are there for test oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub id: String,
    pub params: Vec<(String, f64)>,
    pub gamma: Signal,
    pub phi: Signal,
    pub class: DisturbanceClass,
    /// Growth envelope used by diagnostics. Equal to `phi_tilde` for Case 1.
    pub envelope: Envelope,
    pub phi_bound: Option<f64>,
    pub psi_lipschitz: Option<f64>,
}

pub const DISTURBANCE_IDS: [&str; 5] = [
    "affine_phi_sin_gamma",
    "affine_phi_const_gamma",
    "zero",
    "constant",
    "custom-tabulated",
];

fn param(params: &[(&str, f64)], key: &str, default: Option<f64>) -> Result<f64> {
    match params.iter().find(|(k, _)| *k == key) {
        Some(&(_, v)) if v.is_finite() => Ok(v),
        Some(&(_, v)) => Err(Error::Config(format!("parameter {key} = {v} is not finite"))),
        None => default.ok_or_else(|| Error::Config(format!("missing parameter {key}"))),
    }
}

fn reject_unknown(id: &str, params: &[(&str, f64)], known: &[&str]) -> Result<()> {
    for (k, _) in params {
        if !known.contains(k) {
            return Err(Error::Config(format!("unknown parameter {k} for disturbance {id}")));
        }
    }
    Ok(())
}

/// Catalog lookup.
///
/// * `affine_phi_sin_gamma(a, b, c, d, omega)`: `phi = a (1 + b t)`,
///   `gamma = c + d sin(omega t)`, Case 1 with `phi_tilde = 1 + b t`.
/// * `affine_phi_const_gamma(a, b, gamma)`: Case 2, `psi' = a b / gamma`.
/// * `zero`: `phi = 0`, `gamma = 1`.
/// * `constant(phi, gamma)`: Case 2 with constant perturbation.
///
/// `custom-tabulated` needs sample data; use [`Disturbance::tabulated`].
pub fn builtin_disturbance(id: &str, params: &[(&str, f64)]) -> Result<Disturbance> {
    let owned = |ps: &[(&str, f64)]| ps.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    match id {
        "affine_phi_sin_gamma" => {
            reject_unknown(id, params, &["a", "b", "c", "d", "omega"])?;
            let a = param(params, "a", Some(3.0))?;
            let b = param(params, "b", Some(4.0))?;
            let c = param(params, "c", Some(3.0))?;
            let d = param(params, "d", Some(0.5))?;
            let omega = param(params, "omega", Some(5.0))?;
            if b < 0.0 {
                return Err(Error::Config(format!("{id}: b must be >= 0, got {b}")));
            }
            if c - d.abs() <= 0.0 {
                return Err(Error::Config(format!("{id}: gamma = c + d sin(.) must stay positive")));
            }
            let phi_tilde = Envelope::Affine { offset: 1.0, slope: b };
            Ok(Disturbance {
                id: id.into(),
                params: owned(&[("a", a), ("b", b), ("c", c), ("d", d), ("omega", omega)]),
                gamma: Signal::Sine { c, d, omega },
                phi: Signal::Affine { a, b },
                class: DisturbanceClass::Case1 { phi_tilde: phi_tilde.clone() },
                envelope: phi_tilde,
                phi_bound: Some(a.abs()),
                psi_lipschitz: None,
            })
        }
        "affine_phi_const_gamma" => {
            reject_unknown(id, params, &["a", "b", "gamma"])?;
            let a = param(params, "a", Some(3.0))?;
            let b = param(params, "b", Some(4.0))?;
            let gamma = param(params, "gamma", Some(2.0))?;
            if b < 0.0 {
                return Err(Error::Config(format!("{id}: b must be >= 0, got {b}")));
            }
            if gamma <= 0.0 {
                return Err(Error::Config(format!("{id}: gamma must be positive, got {gamma}")));
            }
            Ok(Disturbance {
                id: id.into(),
                params: owned(&[("a", a), ("b", b), ("gamma", gamma)]),
                gamma: Signal::Constant(gamma),
                phi: Signal::Affine { a, b },
                class: DisturbanceClass::Case2 { gamma_m: gamma },
                envelope: Envelope::Affine { offset: 1.0, slope: b },
                phi_bound: Some(a.abs()),
                psi_lipschitz: Some((a * b).abs() / gamma),
            })
        }
        "zero" => {
            reject_unknown(id, params, &[])?;
            Ok(Disturbance {
                id: id.into(),
                params: Vec::new(),
                gamma: Signal::Constant(1.0),
                phi: Signal::Constant(0.0),
                class: DisturbanceClass::Case2 { gamma_m: 1.0 },
                envelope: Envelope::ONE,
                phi_bound: Some(0.0),
                psi_lipschitz: Some(0.0),
            })
        }
        "constant" => {
            reject_unknown(id, params, &["phi", "gamma"])?;
            let phi = param(params, "phi", None)?;
            let gamma = param(params, "gamma", Some(1.0))?;
            if gamma <= 0.0 {
                return Err(Error::Config(format!("{id}: gamma must be positive, got {gamma}")));
            }
            Ok(Disturbance {
                id: id.into(),
                params: owned(&[("phi", phi), ("gamma", gamma)]),
                gamma: Signal::Constant(gamma),
                phi: Signal::Constant(phi),
                class: DisturbanceClass::Case2 { gamma_m: gamma },
                envelope: Envelope::ONE,
                phi_bound: Some(phi.abs()),
                psi_lipschitz: Some(0.0),
            })
        }
        "custom-tabulated" => Err(Error::Config(
            "custom-tabulated disturbances are built from sample tables (Disturbance::tabulated)".into(),
        )),
        other => Err(Error::Config(format!(
            "unknown disturbance id {other:?}; known ids: {}",
            DISTURBANCE_IDS.join(", ")
        ))),
    }
}

impl Disturbance {
    /// A disturbance interpolated linearly from samples `(t, gamma, phi)`.
    ///
    /// With `phi_tilde` the class is Case 1 and the envelope is checked;
    /// without it, `gamma` must be constant (Case 2) and the envelope
    /// defaults to `1 + t^2`.
    pub fn tabulated(samples: &[(f64, f64, f64)], phi_tilde: Option<Vec<(f64, f64)>>) -> Result<Self> {
        let gamma: Vec<(f64, f64)> = samples.iter().map(|&(t, g, _)| (t, g)).collect();
        let phi: Vec<(f64, f64)> = samples.iter().map(|&(t, _, p)| (t, p)).collect();
        check_knots("gamma", &gamma)?;
        check_knots("phi", &phi)?;
        if gamma.iter().any(|&(_, g)| g <= 0.0) {
            return Err(Error::Config("gamma must be positive at every sample".into()));
        }
        let (class, envelope) = match phi_tilde {
            Some(knots) => {
                let env = Envelope::Table(knots);
                env.check()?;
                (DisturbanceClass::Case1 { phi_tilde: env.clone() }, env)
            }
            None => {
                let g0 = gamma[0].1;
                if gamma.iter().any(|&(_, g)| g != g0) {
                    return Err(Error::Config(
                        "a table without phi_tilde is Case 2 and needs constant gamma".into(),
                    ));
                }
                // 1 + t^2 sampled at unit spacing over the table span
                let t_end = math::ceil(gamma[gamma.len() - 1].0.max(1.0)) as usize;
                let env = Envelope::Table((0..=t_end).map(|k| (k as f64, 1.0 + (k * k) as f64)).collect());
                (DisturbanceClass::Case2 { gamma_m: g0 }, env)
            }
        };
        let mut d = Disturbance {
            id: "custom-tabulated".into(),
            params: vec![("samples".into(), samples.len() as f64)],
            gamma: Signal::Table(gamma),
            phi: Signal::Table(phi),
            class,
            envelope,
            phi_bound: None,
            psi_lipschitz: None,
        };
        if let DisturbanceClass::Case2 { .. } = d.class {
            let t0 = samples[0].0;
            let t1 = samples[samples.len() - 1].0;
            d.psi_lipschitz = Some(if t1 > t0 { d.lipschitz_probe(t0, t1, 4 * samples.len())? } else { 0.0 });
        }
        Ok(d)
    }

    pub fn gamma_at(&self, t: f64) -> f64 {
        self.gamma.eval(t)
    }

    pub fn phi_at(&self, t: f64) -> f64 {
        self.phi.eval(t)
    }

    pub fn envelope_at(&self, t: f64) -> f64 {
        self.envelope.eval(t)
    }

    /// Largest difference quotient of `psi = phi / gamma` on a uniform grid
    /// of `n` intervals over `[t0, t1]`.
    pub fn lipschitz_probe(&self, t0: f64, t1: f64, n: usize) -> Result<f64> {
        if n == 0 || !(t1 > t0) {
            return Err(Error::Precondition("lipschitz probe needs n > 0 and t1 > t0".into()));
        }
        let dt = (t1 - t0) / n as f64;
        let psi = |t: f64| self.phi_at(t) / self.gamma_at(t);
        let mut prev = psi(t0);
        let mut worst = 0.0f64;
        for k in 1..=n {
            let cur = psi(t0 + k as f64 * dt);
            worst = worst.max((cur - prev).abs() / dt);
            prev = cur;
        }
        Ok(worst)
    }

    /// Probes the declared-class invariants on a grid over `[0, horizon]`.
    pub fn check_class(&self, horizon: f64, n: usize) -> Result<()> {
        let n = n.max(1);
        let grid = (0..=n).map(|k| horizon * k as f64 / n as f64);
        match &self.class {
            DisturbanceClass::Case1 { phi_tilde } => {
                phi_tilde.check()?;
                let mut prev = f64::NEG_INFINITY;
                for t in grid {
                    if !(self.gamma_at(t) > 0.0) {
                        return Err(Error::Config(format!("gamma({t}) is not positive")));
                    }
                    let e = phi_tilde.eval(t);
                    if e < 1.0 || e < prev {
                        return Err(Error::Config(format!("phi_tilde fails >= 1 / monotone at t = {t}")));
                    }
                    prev = e;
                }
            }
            DisturbanceClass::Case2 { gamma_m } => {
                if !(*gamma_m > 0.0) {
                    return Err(Error::Config("gamma_m must be positive".into()));
                }
                for t in grid {
                    if self.gamma_at(t) != *gamma_m {
                        return Err(Error::Config(format!("Case 2 needs constant gamma; gamma({t}) != {gamma_m}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Right-hand side of the perturbed chain:
/// `(z_2, ..., z_r, gamma(t) u + phi(t))`.
pub fn rhs(t: f64, z: &[f64], u: f64, d: &Disturbance) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    rhs_into(t, z, u, d, &mut out);
    out
}

pub(crate) fn rhs_into(t: f64, z: &[f64], u: f64, d: &Disturbance, out: &mut [f64]) {
    let r = z.len();
    out[..r - 1].copy_from_slice(&z[1..]);
    out[r - 1] = d.gamma_at(t) * u + d.phi_at(t);
}
