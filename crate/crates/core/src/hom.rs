//! Signed powers, homogeneity weights and dilations.
//!
//! Weights follow the family `p_i = p + (i - 1) kappa`, `i = 1..=r+1`, with
//! `kappa in (-1, 0)` and `p in (0, 2)`. The last weight `p_{r+1}` is the
//! degree of the feedback `u_r`; it must stay positive.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// `|x|^a sgn(x)` for `a > 0`.
///
/// The multivalued case `a = 0` is excluded. `signed_power(0, a)` is exactly 0.
pub fn signed_power(x: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("signed_power exponent must be positive, got {a}")));
    }
    Ok(math::spow(x, a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityParams {
    r: usize,
    p: f64,
    kappa: f64,
    weights: Vec<f64>,
    gamma_r: f64,
}

impl HomogeneityParams {
    pub fn new(r: usize, p: f64, kappa: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::Domain("chain length r must be at least 1".into()));
        }
        if !(kappa > -1.0 && kappa < 0.0) {
            return Err(Error::Domain(format!("kappa must lie in (-1, 0), got {kappa}")));
        }
        if !(p > 0.0 && p < 2.0) {
            return Err(Error::Domain(format!("p must lie in (0, 2), got {p}")));
        }
        let weights: Vec<f64> = (0..=r).map(|i| p + i as f64 * kappa).collect();
        let last_weight = weights[r];
        if last_weight <= 0.0 {
            return Err(Error::InfeasibleWeights { last_weight });
        }
        let gamma_r = last_weight / (2.0 - weights[r - 1]);
        Ok(Self { r, p, kappa, weights, gamma_r })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `p_1, ..., p_{r+1}` (zero-based: `weights()[i] = p + i kappa`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of coordinate `i` (zero-based), `i <= r`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Degree of homogeneity of `u_r`.
    pub fn feedback_degree(&self) -> f64 {
        self.weights[self.r]
    }

    pub fn gamma_r(&self) -> f64 {
        self.gamma_r
    }

    /// `gamma_r (1 + kappa / 2)`, the barrier exponent of the Case-1 gain.
    pub fn barrier_exponent(&self) -> f64 {
        self.gamma_r * (1.0 + 0.5 * self.kappa)
    }

    /// `1 + kappa / 2`, the exponent in `V' = -rho V^{1 + kappa/2}`.
    pub fn decay_exponent(&self) -> f64 {
        1.0 + 0.5 * self.kappa
    }

    pub(crate) fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.r {
            return Err(Error::Domain(format!(
                "state has {} components, expected r = {}",
                z.len(),
                self.r
            )));
        }
        Ok(())
    }
}

/// `delta_eps(z) = (eps^{p_1} z_1, ..., eps^{p_r} z_r)`.
pub fn dilate(eps: f64, z: &[f64], params: &HomogeneityParams) -> Result<Vec<f64>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("dilation factor must be positive, got {eps}")));
    }
    params.check_dim(z)?;
    Ok(dilate_unchecked(eps, z, params.weights()))
}

pub(crate) fn dilate_unchecked(eps: f64, z: &[f64], weights: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(weights)
        .map(|(&zi, &w)| math::powf(eps, w) * zi)
        .collect()
}

/// `D_p z = (p_1 z_1, ..., p_r z_r)`.
pub fn euler_vector(z: &[f64], params: &HomogeneityParams) -> Vec<f64> {
    z.iter().zip(params.weights()).map(|(&zi, &w)| w * zi).collect()
}
