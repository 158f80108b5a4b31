//! Fixed-level tanh-sinh (double exponential) quadrature.
//!
//! The Lyapunov integrands have algebraic singularities of their derivatives
//! at the interval ends (and at the origin, where the caller splits). A
//! double exponential rule converges geometrically for those, while
//! Gauss-Legendre stalls at a few digits.
//!
//! Nodes are affine in the interval, so a rule applied to a homogeneous
//! integrand over a dilated interval scales exactly like the integral.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct TanhSinh {
    /// `(distance of the node from the nearer end on [-1, 1], weight)`;
    /// entry 0 is the centre node.
    nodes: Vec<(f64, f64)>,
}

impl TanhSinh {
    /// `step` is the abscissa spacing in the `t` variable, `t_max` the
    /// truncation point.
    pub fn new(step: f64, t_max: f64) -> Self {
        let n = math::ceil(t_max / step) as usize;
        let nodes = (0..=n)
            .map(|k| {
                let t = k as f64 * step;
                let u = FRAC_PI_2 * math::sinh(t);
                let ch = math::cosh(u);
                // 1 - tanh(u), computed without cancellation.
                let gap = math::exp(-u) / ch;
                let w = step * FRAC_PI_2 * math::cosh(t) / (ch * ch);
                (gap, w)
            })
            .take_while(|&(gap, w)| gap > 0.0 && w > 0.0)
            .collect();
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]` (oriented: swapping the ends flips the sign).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        if a == b {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let mid = a + half;
        let (_, w0) = self.nodes[0];
        let mut acc = w0 * f(mid);
        for &(gap, w) in &self.nodes[1..] {
            let d = half * gap;
            acc += w * (f(a + d) + f(b - d));
        }
        acc * half
    }
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self::new(1.0 / 6.0, 4.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_and_orientation() {
        let q = TanhSinh::default();
        assert_relative_eq!(q.integrate(0.0, 2.0, |x| x * x), 8.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(q.integrate(2.0, 0.0, |x| x * x), -8.0 / 3.0, max_relative = 1e-13);
        assert_eq!(q.integrate(1.0, 1.0, |x| x), 0.0);
    }

    #[test]
    fn endpoint_singularities() {
        let q = TanhSinh::default();
        // int_0^1 x^{-0.7} dx = 1 / 0.3
        assert_relative_eq!(q.integrate(0.0, 1.0, |x| math::powf(x, -0.7)), 1.0 / 0.3, max_relative = 1e-9);
        // int_0^1 x^{1/6} dx = 6/7
        assert_relative_eq!(q.integrate(0.0, 1.0, |x| math::powf(x, 1.0 / 6.0)), 6.0 / 7.0, max_relative = 1e-13);
        // int_0^1 sqrt(1 - x^2) dx = pi/4
        assert_relative_eq!(
            q.integrate(0.0, 1.0, |x| math::sqrt((1.0 - x) * (1.0 + x))),
            core::f64::consts::FRAC_PI_4,
            max_relative = 1e-13
        );
    }
}
