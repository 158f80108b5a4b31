//! Adaptive higher-order super-twisting control.
//!
//! ```text
//! u   = L1(t, z) u_r(z) + xi
//! xi' = -L2(t, z) d_r V(z),        xi(0) = 0
//! ```
//!
//! Before `t_bar` (first time `V <= eps / 2`) the gains are `(l(t), 0)`,
//! so `xi` stays at zero. Afterwards, with `L_eps = eps / (eps - V)`,
//! `L1 = c_bar L_eps^{-kappa/2}` and `L2 = L_eps`, where
//! `c_bar = l(t_bar) / 2^{-kappa/2}`.

use alloc::format;

use crate::case1::{barrier_gain, GrowthGain, Phase};
use crate::error::{Error, Result};
use crate::feedback::FeedbackPair;
use crate::hom::HomogeneityParams;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostState {
    pub phase: Phase,
    pub t_bar: Option<f64>,
    pub c_bar: Option<f64>,
    pub xi: f64,
    pub epsilon: f64,
}

impl HostState {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { phase: Phase::Searching, t_bar: None, c_bar: None, xi: 0.0, epsilon })
    }

    /// This state switched to the barrier phase at `t_bar`.
    pub fn switched(self, t_bar: f64, growth: &GrowthGain, params: &HomogeneityParams) -> Self {
        let c_bar = growth.eval(t_bar) / math::powf(2.0, -0.5 * params.kappa());
        Self { phase: Phase::Barrier, t_bar: Some(t_bar), c_bar: Some(c_bar), ..self }
    }
}

/// `(L1, L2)` given `V`, advancing the state machine.
pub fn gains_host(
    t: f64,
    v: f64,
    growth: &GrowthGain,
    params: &HomogeneityParams,
    state: HostState,
) -> Result<(f64, f64, HostState)> {
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("V must be non-negative, got {v}")));
    }
    let state = match state.phase {
        Phase::Searching if v <= 0.5 * state.epsilon => state.switched(t, growth, params),
        Phase::Searching => return Ok((growth.eval(t), 0.0, state)),
        Phase::Barrier => state,
    };
    let c_bar = state.c_bar.ok_or_else(|| Error::Precondition("Barrier phase without c_bar".into()))?;
    let l_eps = barrier_gain(state.epsilon, v)?;
    Ok((c_bar * math::powf(l_eps, -0.5 * params.kappa()), l_eps, state))
}

/// `(u, xi')` at `z` with the integral state taken from `state.xi`.
pub fn control_host(
    t: f64,
    z: &[f64],
    pair: &FeedbackPair,
    growth: &GrowthGain,
    state: HostState,
) -> Result<(f64, f64, HostState)> {
    pair.params().check_dim(z)?;
    let (l1, l2, state) = gains_host(t, pair.value(z), growth, pair.params(), state)?;
    let u = l1 * pair.feedback(z) + state.xi;
    let xi_dot = if l2 == 0.0 { 0.0 } else { -l2 * pair.dr_value(z) };
    Ok((u, xi_dot, state))
}
