//! Homogeneous Lyapunov/feedback pairs for the pure chain of integrators.
//!
//! The pair is built by homogeneous backstepping (Hong's construction).
//! With `s = p_1` and `xi_1 = z_1`,
//!
//! ```text
//! xi_i   = |z_i|^{s/p_i} sgn(z_i) + k_{i-1} xi_{i-1}
//! nu_i   = -l_i 2^{g_i} |xi_i|^{p_{i+1}/s} sgn(xi_i),     g_i = p_{i+1} / (2 - p_i)
//! W_i    = 2 int_{nu_{i-1}}^{z_i} | |s|^{s/p_i} sgn(s) - |nu_{i-1}|^{s/p_i} sgn(nu_{i-1}) |^{(2-p_i)/s} ds
//! V      = W_1 + ... + W_r,      u_r = nu_r
//! ```
//!
//! where `k_i = (l_i 2^{g_i})^{s/p_{i+1}}`, so that
//! `|nu_i|^{s/p_{i+1}} sgn(nu_i) = -k_i xi_i`. Then `d_r V = 2 |xi_r|^{(2-p_r)/s}
//! sgn(xi_r)` and `u_r = -l_r |d_r V|^{gamma_r} sgn(d_r V)`: the pair has the
//! strong form. For `r = 1`, `p = 1` this is `V = z^2`, `u = -|2z|^{1/2} sgn(z)`
//! with unit gain.
//!
//! Definition-wise only the degree of `V` is fixed, not its size: the pair
//! carries a level scale `c` and uses `c V` (with `u_r` unchanged, so the
//! strong-form gain becomes `l_r c^{-gamma_r}`). The scale sets how the
//! levels `mu` and `eps` of the adaptive laws compare with the state.
//!
//! The integrals have no elementary closed form for general weights and are
//! evaluated by tanh-sinh quadrature; `d_r V` and `u_r` are closed form, so
//! the control laws never pay for quadrature except through `V` itself.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hom::{dilate_unchecked, HomogeneityParams};
use crate::math::{self, apow, spow};
use crate::quadrature::TanhSinh;

/// Default Monte Carlo sample count for the level-set estimators.
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stage {
    /// `s / p_i`
    to_xi: f64,
    /// `p_i / s`
    from_xi: f64,
    /// `(2 - p_i) / s`, exponent of the `W_i` integrand
    m: f64,
    /// `k_{i-1}` (zero for the first stage)
    couple: f64,
    /// `l_i 2^{g_i}`
    nu_coef: f64,
    /// `p_{i+1} / s`
    nu_exp: f64,
}

/// Decrease-rate bounds `c_r <= rho <= d_r` on `V' = -rho V^{1 + kappa/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoBounds {
    pub c_r: f64,
    pub d_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub c_r: f64,
    pub d_r: f64,
    pub c_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPair {
    params: HomogeneityParams,
    gains: Vec<f64>,
    stages: Vec<Stage>,
    quad: TanhSinh,
    scale: f64,
    estimated: Option<Estimates>,
}

impl FeedbackPair {
    /// Builds the backstepping pair without checking that it stabilizes.
    ///
    /// Gains must be finite and non-negative. Use [`build_hong_pair`] for a
    /// pair that has passed the decrease check.
    pub fn hong(params: HomogeneityParams, gains: &[f64]) -> Result<Self> {
        let r = params.r();
        if gains.len() != r {
            return Err(Error::Domain(format!("expected {r} gains, got {}", gains.len())));
        }
        if gains.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::Domain(format!("gains must be finite and non-negative: {gains:?}")));
        }
        let w = params.weights();
        let s = w[0];
        let mut stages = Vec::with_capacity(r);
        let mut couple = 0.0;
        for (i, &l) in gains.iter().enumerate() {
            let g = w[i + 1] / (2.0 - w[i]);
            let nu_coef = l * math::powf(2.0, g);
            let nu_exp = w[i + 1] / s;
            stages.push(Stage {
                to_xi: s / w[i],
                from_xi: w[i] / s,
                m: (2.0 - w[i]) / s,
                couple,
                nu_coef,
                nu_exp,
            });
            couple = math::powf(nu_coef, 1.0 / nu_exp);
        }
        Ok(Self { params, gains: gains.to_vec(), stages, quad: TanhSinh::default(), scale: 1.0, estimated: None })
    }

    /// Multiplies `V` by `scale`. Clears any stored estimates.
    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!("level scale must be positive, got {scale}")));
        }
        self.scale = scale;
        self.estimated = None;
        Ok(self)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `l` with `u_r = -l |d_r V|^{gamma_r} sgn(d_r V)`.
    pub fn strong_gain(&self) -> f64 {
        self.gains[self.r() - 1] * math::powf(self.scale, -self.params.gamma_r())
    }

    /// Replaces the quadrature rule used for `V` and its gradient.
    pub fn with_quadrature(mut self, quad: TanhSinh) -> Self {
        self.quad = quad;
        self
    }

    pub fn params(&self) -> &HomogeneityParams {
        &self.params
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn estimated(&self) -> Option<Estimates> {
        self.estimated
    }

    pub fn r(&self) -> usize {
        self.params.r()
    }

    /// The pair of the first `order` stages, a feedback pair for the chain
    /// of length `order` with the same `p`, `kappa`.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        let params = HomogeneityParams::new(order, self.params.p(), self.params.kappa())?;
        Self::hong(params, &self.gains[..order])?.with_scale(self.scale)
    }

    /// Records estimated constants in the pair.
    pub fn estimate(&mut self, n_samples: usize, seed: u64) -> Result<Estimates> {
        let RhoBounds { c_r, d_r } = self.estimate_rho_bounds(n_samples, seed)?;
        let c_u = self.estimate_c_u(n_samples, seed)?;
        let est = Estimates { c_r, d_r, c_u };
        self.estimated = Some(est);
        Ok(est)
    }

    fn xi_into(&self, z: &[f64], xi: &mut [f64]) {
        let mut prev = 0.0;
        for ((st, &zi), out) in self.stages.iter().zip(z).zip(xi.iter_mut()) {
            prev = spow(zi, st.to_xi) + st.couple * prev;
            *out = prev;
        }
    }

    fn xi_last(&self, z: &[f64]) -> f64 {
        self.stages
            .iter()
            .zip(z)
            .fold(0.0, |prev, (st, &zi)| spow(zi, st.to_xi) + st.couple * prev)
    }

    /// Oriented `int_{sigma0}^{zi} |w(sigma) - a|^e dsigma` where
    /// `w(sigma) = |sigma|^{to_xi} sgn(sigma)` and `w(sigma0) = a`.
    fn stage_integral(&self, st: &Stage, zi: f64, a: f64, e: f64) -> f64 {
        let integrand = |sigma: f64| apow(spow(sigma, st.to_xi) - a, e);
        if a == 0.0 {
            let k = st.to_xi * e + 1.0;
            return spow(zi, k) / k;
        }
        let sigma0 = spow(a, st.from_xi);
        if (sigma0 < 0.0 && zi > 0.0) || (sigma0 > 0.0 && zi < 0.0) {
            self.quad.integrate(sigma0, 0.0, integrand) + self.quad.integrate(0.0, zi, integrand)
        } else {
            self.quad.integrate(sigma0, zi, integrand)
        }
    }

    /// `V(z)`.
    pub fn value(&self, z: &[f64]) -> f64 {
        let mut prev_xi = 0.0;
        let mut v = 0.0;
        for (st, &zi) in self.stages.iter().zip(z) {
            let a = -st.couple * prev_xi;
            v += 2.0 * self.stage_integral(st, zi, a, st.m).abs();
            prev_xi = spow(zi, st.to_xi) + st.couple * prev_xi;
        }
        self.scale * v
    }

    /// `grad V(z)`.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let r = self.r();
        let mut xi = vec![0.0; r];
        self.xi_into(z, &mut xi);
        // dW_i / dxi_{i-1} = 2 m_i k_{i-1} int |w - a|^{m_i - 1}
        let mut cross = vec![0.0; r];
        for i in 1..r {
            let st = &self.stages[i];
            if st.couple == 0.0 {
                continue;
            }
            let a = -st.couple * xi[i - 1];
            let h = self.stage_integral(st, z[i], a, st.m - 1.0);
            cross[i] = 2.0 * st.m * st.couple * h;
        }
        let mut grad = vec![0.0; r];
        let mut back = 0.0;
        for j in (0..r).rev() {
            let st = &self.stages[j];
            let dxi = st.to_xi * apow(z[j], st.to_xi - 1.0);
            grad[j] = 2.0 * spow(xi[j], st.m) + dxi * back;
            back = cross[j] + st.couple * back;
        }
        for g in &mut grad {
            *g *= self.scale;
        }
        grad
    }

    /// `d_r V(z)`, closed form.
    pub fn dr_value(&self, z: &[f64]) -> f64 {
        let st = self.stages[self.r() - 1];
        2.0 * self.scale * spow(self.xi_last(z), st.m)
    }

    /// `u_r(z)`, closed form.
    pub fn feedback(&self, z: &[f64]) -> f64 {
        let st = self.stages[self.r() - 1];
        -st.nu_coef * spow(self.xi_last(z), st.nu_exp)
    }

    /// `<grad V(z), J_r z + u_r(z) e_r>`.
    pub fn lie_derivative(&self, z: &[f64]) -> f64 {
        let grad = self.gradient(z);
        let r = self.r();
        let drift: f64 = (0..r - 1).map(|j| grad[j] * z[j + 1]).sum();
        drift + grad[r - 1] * self.feedback(z)
    }

    /// `rho(z) = -<grad V, J_r z + u_r e_r> / V^{1 + kappa/2}`; homogeneous of degree 0.
    pub fn rho(&self, z: &[f64]) -> f64 {
        let v = self.value(z);
        -self.lie_derivative(z) / math::powf(v, self.params.decay_exponent())
    }

    /// Inverse of `z -> xi`.
    fn z_from_xi(&self, xi: &[f64]) -> Vec<f64> {
        let mut prev = 0.0;
        self.stages
            .iter()
            .zip(xi)
            .map(|(st, &x)| {
                let zi = spow(x - st.couple * prev, st.from_xi);
                prev = x;
                zi
            })
            .collect()
    }

    /// A random nonzero direction: uniform in the `z` box or, with equal
    /// probability, uniform in the `xi` box. Every `xi_i` has the same
    /// degree, so the second kind covers the thin bands `xi_i ~ 0` that
    /// large gains squeeze the first kind away from.
    fn random_direction<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let in_xi = rng.random::<bool>();
        let w: Vec<f64> = (0..self.r()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if in_xi {
            self.z_from_xi(&w)
        } else {
            w
        }
    }

    /// A point of `{V = 1}`: a random direction pushed along its dilation
    /// orbit. `V(delta_eps w) = eps^2 V(w)` makes the scalar root
    /// `eps = V(w)^{-1/2}` explicit.
    pub fn sample_level_set<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let w = self.random_direction(rng);
        self.project_to_level_set(&w)
    }

    pub fn project_to_level_set(&self, w: &[f64]) -> Result<Vec<f64>> {
        let v = self.value(w);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Numeric(format!("cannot rescale {w:?} to V = 1 (V = {v})")));
        }
        let eps = 1.0 / math::sqrt(v);
        Ok(dilate_unchecked(eps, w, self.params.weights()))
    }

    fn rho_range(&self, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..n_samples {
            let z = self.sample_level_set(&mut rng)?;
            let rho = self.rho(&z);
            if !rho.is_finite() {
                return Err(Error::Numeric(format!("rho is not finite at {z:?}")));
            }
            lo = lo.min(rho);
            hi = hi.max(rho);
        }
        Ok((lo, hi))
    }

    /// Min and max of `rho` over `n_samples` points of `{V = 1}`.
    pub fn estimate_rho_bounds(&self, n_samples: usize, seed: u64) -> Result<RhoBounds> {
        check_samples(n_samples)?;
        let (lo, hi) = self.rho_range(n_samples, seed)?;
        if lo <= 0.0 {
            return Err(Error::InvalidPair { rho: lo });
        }
        Ok(RhoBounds { c_r: lo, d_r: hi })
    }

    /// Max of `|u_r d_r V|` over `{V = 1}`, so that
    /// `|u_r d_r V| <= c_u V^{1 + kappa/2}` everywhere.
    pub fn estimate_c_u(&self, n_samples: usize, seed: u64) -> Result<f64> {
        check_samples(n_samples)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
        let mut c_u = 0.0f64;
        for _ in 0..n_samples {
            let z = self.sample_level_set(&mut rng)?;
            c_u = c_u.max((self.feedback(&z) * self.dr_value(&z)).abs());
        }
        Ok(c_u)
    }

    /// Checks every property a pair must have before it drives a controller.
    pub fn validate(&self, n_samples: usize, seed: u64) -> ValidationReport {
        validate_pair(self, n_samples, seed)
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::Precondition(format!("at least 100 samples are required, got {n}")));
    }
    Ok(())
}

/// Backstepping pair with gains `l_1..l_r`, rejected unless `rho` stays
/// positive on `DEFAULT_SAMPLES` points of `{V = 1}`. The estimates are
/// stored in the returned pair.
pub fn build_hong_pair(params: HomogeneityParams, gains: &[f64]) -> Result<FeedbackPair> {
    if gains.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Domain(format!("gains must be positive: {gains:?}")));
    }
    let mut pair = FeedbackPair::hong(params, gains)?;
    match pair.estimate(DEFAULT_SAMPLES, 0) {
        Ok(_) => Ok(pair),
        Err(Error::InvalidPair { rho }) => Err(Error::RejectedPair(format!(
            "rho_min = {rho} <= 0 on the level set, gains {gains:?} are too small"
        ))),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub max_steps: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self { n_samples: 2_000, seed: 0, max_steps: 60 }
    }
}

const CONFIRM_FACTOR: usize = 5;
const CONFIRM_SEED: u64 = 0x00c0_ffee;

/// Geometric gain tuning with default options.
pub fn tune_gains(params: &HomogeneityParams, initial: &[f64], growth_factor: f64) -> Result<Vec<f64>> {
    tune_gains_with(params, initial, growth_factor, &TuneOptions::default())
}

/// Grows the gains stage by stage: `l_i` is multiplied by `growth_factor`
/// until the pair truncated to the first `i` coordinates decreases `V` on
/// every sampled point of its level set (checked again on an independent
/// sample five times larger). Only `u_r` depends on `l_r`, and
/// `V'` is affine and decreasing in it, so each stage terminates once the
/// earlier stages are stabilizing.
pub fn tune_gains_with(
    params: &HomogeneityParams,
    initial: &[f64],
    growth_factor: f64,
    opts: &TuneOptions,
) -> Result<Vec<f64>> {
    if !(growth_factor > 1.0) || !growth_factor.is_finite() {
        return Err(Error::Precondition(format!("growth factor must exceed 1, got {growth_factor}")));
    }
    check_samples(opts.n_samples)?;
    if initial.len() != params.r() || initial.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain(format!(
            "initial gains must be {} positive reals, got {initial:?}",
            params.r()
        )));
    }
    let mut gains = initial.to_vec();
    let mut steps = 0;
    for order in 1..=params.r() {
        let sub = HomogeneityParams::new(order, params.p(), params.kappa())?;
        loop {
            let pair = FeedbackPair::hong(sub.clone(), &gains[..order])?;
            let (lo, _) = pair.rho_range(opts.n_samples, opts.seed)?;
            if lo > 0.0 {
                // A fresh, larger sample guards against a thin margin that the
                // tuning sample happened to miss.
                let (lo, _) = pair.rho_range(CONFIRM_FACTOR * opts.n_samples, opts.seed ^ CONFIRM_SEED)?;
                if lo > 0.0 {
                    break;
                }
            }
            if steps == opts.max_steps {
                return Err(Error::TuningFailed { attempts: steps });
            }
            gains[order - 1] *= growth_factor;
            steps += 1;
        }
    }
    Ok(gains)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual seen over the samples (meaning depends on the check).
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub r: usize,
    pub p: f64,
    pub kappa: f64,
    pub gains: Vec<f64>,
    pub scale: f64,
    pub checks: Vec<CheckResult>,
    pub rho_min: f64,
    pub rho_max: f64,
    pub c_u: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "feedback pair r={} p={} kappa={} gains={:?} scale={}\n",
            self.r, self.p, self.kappa, self.gains, self.scale
        );
        for c in &self.checks {
            out += &format!(
                "  [{}] {:<18} worst={:<12.4e} tol={:.1e} n={}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.tolerance,
                c.samples
            );
        }
        out += &format!(
            "  rho in [{:.6}, {:.6}], c_u = {:.6}\n  overall: {}\n",
            self.rho_min,
            self.rho_max,
            self.c_u,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }

    /// Flat `key=value` pairs, stable order.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("r".into(), format!("{}", self.r)),
            ("p".into(), format!("{:.17e}", self.p)),
            ("kappa".into(), format!("{:.17e}", self.kappa)),
            (
                "gains".into(),
                self.gains.iter().map(|g| format!("{g:.17e}")).collect::<Vec<_>>().join(","),
            ),
            ("scale".into(), format!("{:.17e}", self.scale)),
        ];
        for c in &self.checks {
            kv.push((format!("{}.passed", c.name), format!("{}", c.passed)));
            kv.push((format!("{}.worst", c.name), format!("{:.17e}", c.worst)));
            kv.push((format!("{}.tolerance", c.name), format!("{:.17e}", c.tolerance)));
        }
        kv.push(("rho_min".into(), format!("{:.17e}", self.rho_min)));
        kv.push(("rho_max".into(), format!("{:.17e}", self.rho_max)));
        kv.push(("c_u".into(), format!("{:.17e}", self.c_u)));
        kv.push(("passed".into(), format!("{}", self.passed())));
        kv
    }
}

pub const TOL_HOMOGENEITY: f64 = 1e-6;
pub const TOL_EULER: f64 = 1e-6;
pub const TOL_GRADIENT_FD: f64 = 1e-4;
pub const TOL_DILATED_GRADIENT: f64 = 1e-6;
pub const TOL_SAHFP: f64 = 1e-12;

/// Coordinates closer than this (on `{V = 1}`) to a hyperplane `z_i = 0`
/// are skipped by the finite-difference check.
const FD_HYPERPLANE_GAP: f64 = 1e-3;

fn check(name: &'static str, worst: f64, tolerance: f64, samples: usize) -> CheckResult {
    CheckResult { name, passed: worst <= tolerance, worst, tolerance, samples }
}

/// Pass/fail with worst-case residuals for every property of an adapted
/// homogeneous feedback pair. Failures are reported, never returned as errors.
pub fn validate_pair(pair: &FeedbackPair, n_samples: usize, seed: u64) -> ValidationReport {
    let params = pair.params();
    let r = params.r();
    let n = n_samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = params.weights();
    let deg_u = params.feedback_degree();

    let mut v_pos = 0.0f64; // count of non-positive V at z != 0, plus V(0) and u(0)
    let mut v_hom = 0.0f64;
    let mut u_hom = 0.0f64;
    let mut euler = 0.0f64;
    let mut fd = 0.0f64;
    let mut fd_n = 0usize;
    let mut dil_grad = 0.0f64;
    let mut sign = 0.0f64;
    let mut sahfp = 0.0f64;
    let mut holder = f64::INFINITY;
    let mut rho_min = f64::INFINITY;
    let mut rho_max = f64::NEG_INFINITY;
    let mut c_u = 0.0f64;

    let zero = vec![0.0; r];
    v_pos += pair.value(&zero).abs() + pair.feedback(&zero).abs();

    let st_last = pair.stages[r - 1];
    let l_r = pair.strong_gain();
    let gamma_r = params.gamma_r();

    for _ in 0..n {
        // Point off the level set: random direction, random dilation in [0.1, 10].
        let w = pair.random_direction(&mut rng);
        let scale = math::exp(rng.random_range(-1.0..1.0) * core::f64::consts::LN_10);
        let z = dilate_unchecked(scale, &w, weights);
        let eps = math::exp(rng.random_range(-1.0..1.0) * core::f64::consts::LN_10);
        let zd = dilate_unchecked(eps, &z, weights);

        let v = pair.value(&z);
        if !(v > 0.0) {
            v_pos += 1.0;
            continue;
        }
        let e2 = eps * eps;
        v_hom = v_hom.max((pair.value(&zd) - e2 * v).abs() / (e2 * v));

        let u = pair.feedback(&z);
        let ue = math::powf(eps, deg_u);
        let u_scale = (ue * u.abs()).max(f64::MIN_POSITIVE);
        u_hom = u_hom.max((pair.feedback(&zd) - ue * u).abs() / u_scale);

        let grad = pair.gradient(&z);
        let dv: f64 = grad.iter().zip(&z).zip(weights).map(|((g, zi), pi)| g * pi * zi).sum();
        euler = euler.max((dv - 2.0 * v).abs() / v);

        let grad_d = pair.gradient(&zd);
        let lhs = dilate_unchecked(eps, &grad_d, weights);
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let dg = lhs.iter().zip(&grad).fold(0.0f64, |m, (a, b)| m.max((a - e2 * b).abs()));
        dil_grad = dil_grad.max(dg / (e2 * gmax).max(f64::MIN_POSITIVE));

        let dr = pair.dr_value(&z);
        sign = sign.max(u * dr);
        let strong = -l_r * spow(dr, gamma_r);
        sahfp = sahfp.max((u - strong).abs() / u.abs().max(strong.abs()).max(f64::MIN_POSITIVE));

        // Level-set point for the degree-0 and finite-difference checks.
        let Ok(y) = pair.project_to_level_set(&w) else {
            v_pos += 1.0;
            continue;
        };
        let rho = pair.rho(&y);
        rho_min = rho_min.min(rho);
        rho_max = rho_max.max(rho);
        c_u = c_u.max((pair.feedback(&y) * pair.dr_value(&y)).abs());

        let gy = pair.gradient(&y);
        if y.iter().all(|yi| yi.abs() > FD_HYPERPLANE_GAP) {
            let gymax = gy.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let mut probe = y.clone();
            for i in 0..r {
                let step = 1e-6 * (1.0 + y[i].abs());
                probe[i] = y[i] + step;
                let vp = pair.value(&probe);
                probe[i] = y[i] - step;
                let vm = pair.value(&probe);
                probe[i] = y[i];
                let g_fd = (vp - vm) / (2.0 * step);
                fd = fd.max((g_fd - gy[i]).abs() / gy[i].abs().max(1e-3 * gymax));
            }
            fd_n += 1;
        }

        // Local Hoelder exponent of u_r from two probe radii.
        let dir: Vec<f64> = (0..r).map(|_| rng.random_range(-1.0..1.0)).collect();
        let uy = pair.feedback(&y);
        let shifted = |delta: f64| -> Vec<f64> { y.iter().zip(&dir).map(|(a, d)| a + delta * d).collect() };
        let big = (pair.feedback(&shifted(1e-5)) - uy).abs();
        let small = (pair.feedback(&shifted(1e-10)) - uy).abs();
        if big > 0.0 {
            let alpha = if small > 0.0 { math::ln(small / big) / math::ln(1e-5) } else { f64::INFINITY };
            holder = holder.min(alpha);
        }
    }

    let holder_target = 0.5 * st_last.nu_exp.min(1.0);
    let checks = vec![
        check("v_positive", v_pos, 0.0, n),
        check("v_homogeneity", v_hom, TOL_HOMOGENEITY, n),
        check("u_homogeneity", u_hom, TOL_HOMOGENEITY, n),
        check("euler_relation", euler, TOL_EULER, n),
        check("gradient_fd", fd, TOL_GRADIENT_FD, fd_n),
        check("dilated_gradient", dil_grad, TOL_DILATED_GRADIENT, n),
        check("sign_condition", sign, 0.0, n),
        check("sahfp_form", sahfp, TOL_SAHFP, n),
        // worst = -(smallest observed Hoelder exponent); passes if >= holder_target
        check("u_continuity", -holder, -holder_target, n),
        // worst = -rho_min; passes if rho_min > 0
        CheckResult { name: "rho_positive", passed: rho_min > 0.0, worst: -rho_min, tolerance: 0.0, samples: n },
    ];
    ValidationReport {
        r,
        p: params.p(),
        kappa: params.kappa(),
        gains: pair.gains.clone(),
        scale: pair.scale,
        checks,
        rho_min,
        rho_max,
        c_u,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn r1_pair() -> FeedbackPair {
        FeedbackPair::hong(HomogeneityParams::new(1, 1.0, -0.5).unwrap(), &[1.0]).unwrap()
    }

    #[test]
    fn r1_closed_form() {
        let pair = r1_pair();
        for z in [-3.0, -0.4, 0.0, 0.7, 2.0] {
            assert_relative_eq!(pair.value(&[z]), z * z, max_relative = 1e-15);
            assert_relative_eq!(pair.gradient(&[z])[0], 2.0 * z, max_relative = 1e-15);
        }
        assert_relative_eq!(pair.feedback(&[2.0]), -2.0, max_relative = 1e-15);
        assert_relative_eq!(pair.feedback(&[-0.5]), 1.0, max_relative = 1e-15);
        // rho = 2^{3/2} everywhere
        for z in [-5.0, 0.1, 1.0, 9.0] {
            assert_relative_eq!(pair.rho(&[z]), 2.0 * core::f64::consts::SQRT_2, max_relative = 1e-14);
        }
    }

    #[test]
    fn r1_estimates() {
        let pair = r1_pair();
        let b = pair.estimate_rho_bounds(500, 3).unwrap();
        let expected = 2.0f64.powf(1.5);
        assert!((b.c_r - expected).abs() < 1e-9 && (b.d_r - expected).abs() < 1e-9, "{b:?}");
        let c_u = pair.estimate_c_u(500, 3).unwrap();
        assert!((c_u - expected).abs() < 1e-9);
        assert!(matches!(pair.estimate_rho_bounds(0, 1), Err(Error::Precondition(_))));
        assert!(matches!(pair.estimate_c_u(99, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn r1_validation_passes() {
        let report = validate_pair(&r1_pair(), 1000, 11);
        assert!(report.passed(), "{}", report.to_text());
        for name in ["v_homogeneity", "u_homogeneity", "euler_relation", "gradient_fd", "dilated_gradient"] {
            assert!(report.check(name).unwrap().worst < 1e-8, "{name}");
        }
    }

    #[test]
    fn zero_gain_fails_rho() {
        let pair = FeedbackPair::hong(HomogeneityParams::new(1, 1.0, -0.5).unwrap(), &[0.0]).unwrap();
        let report = validate_pair(&pair, 200, 1);
        let rho = report.check("rho_positive").unwrap();
        assert!(!rho.passed);
        assert_eq!(report.rho_min, 0.0);
        assert!(!report.passed());
        assert!(matches!(
            build_hong_pair(HomogeneityParams::new(1, 1.0, -0.5).unwrap(), &[0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gain_count_checked() {
        let hp = HomogeneityParams::new(3, 1.0, -1.0 / 6.0).unwrap();
        assert!(FeedbackPair::hong(hp.clone(), &[1.0, 2.0]).is_err());
        assert!(FeedbackPair::hong(hp, &[1.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn tuning_examples() {
        let hp1 = HomogeneityParams::new(1, 1.0, -0.5).unwrap();
        assert_eq!(tune_gains(&hp1, &[1.0], 2.0).unwrap(), [1.0]);
        assert!(matches!(tune_gains(&hp1, &[1.0], 1.0), Err(Error::Precondition(_))));

        let hp3 = HomogeneityParams::new(3, 1.0, -1.0 / 6.0).unwrap();
        let tiny = [1e-3; 3];
        let tuned = tune_gains(&hp3, &tiny, 2.0).unwrap();
        assert!(tuned.iter().zip(&tiny).any(|(a, b)| a > b));
        assert!(tuned.iter().zip(&tiny).all(|(a, b)| a >= b));
        let pair = FeedbackPair::hong(hp3, &tuned).unwrap();
        for seed in [1, 99, 1234] {
            assert!(pair.estimate_rho_bounds(DEFAULT_SAMPLES, seed).unwrap().c_r > 0.0, "{tuned:?}");
        }
    }

    #[test]
    fn level_scale() {
        let hp3 = HomogeneityParams::new(3, 1.0, -1.0 / 6.0).unwrap();
        let base = FeedbackPair::hong(hp3.clone(), &[1.0, 2.0, 64.0]).unwrap();
        let scaled = base.clone().with_scale(1e3).unwrap();
        let z = [0.4, -1.3, 2.2];
        assert_relative_eq!(scaled.value(&z), 1e3 * base.value(&z), max_relative = 1e-14);
        assert_eq!(scaled.feedback(&z), base.feedback(&z));
        // rho scales by c^{-kappa/2}
        assert_relative_eq!(scaled.rho(&z), 1e3f64.powf(1.0 / 12.0) * base.rho(&z), max_relative = 1e-12);
        let report = validate_pair(&scaled, 300, 5);
        assert!(report.passed(), "{}", report.to_text());
        assert!(base.clone().with_scale(0.0).is_err());
        assert_eq!(scaled.truncated(2).unwrap().scale(), 1e3);
    }

    #[test]
    fn xi_round_trip() {
        let hp3 = HomogeneityParams::new(3, 1.0, -1.0 / 6.0).unwrap();
        let pair = FeedbackPair::hong(hp3, &[1.0, 2.0, 64.0]).unwrap();
        let z = [0.4, -1.3, 2.2];
        let mut xi = [0.0; 3];
        pair.xi_into(&z, &mut xi);
        for (a, b) in pair.z_from_xi(&xi).iter().zip(&z) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
    }

    #[test]
    fn tuning_cap() {
        let hp3 = HomogeneityParams::new(3, 1.0, -1.0 / 6.0).unwrap();
        let opts = TuneOptions { max_steps: 2, ..TuneOptions::default() };
        assert!(matches!(
            tune_gains_with(&hp3, &[1e-3; 3], 2.0, &opts),
            Err(Error::TuningFailed { attempts: 2 })
        ));
    }
}
