//! Legendre–Gauss rules on `[-1, 1]`.
//!
//! Nodes are the roots of the Legendre polynomial `P_q`, found by Newton
//! iteration from `cos(pi (k - 1/4) / (q + 1/2))`. Only the non-positive half
//! is computed; the rest is mirrored so the rule is exactly symmetric.

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 16;

const MAX_NEWTON_ITERATIONS: usize = 100;
const RESIDUAL_TARGET: f64 = 1e-15;

/// Nodes in increasing order with their positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ ω_k f(θ_k)`
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=q {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let dp = q as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Legendre–Gauss nodes and weights of order `q`.
pub fn legendre_gauss(q: usize) -> Result<QuadratureRule> {
    if q == 0 {
        return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for k in 1..=q.div_ceil(2) {
        // root k counted from +1 downwards; mirrored into the negative half
        let mut x = (std::f64::consts::PI * (k as f64 - 0.25) / (qf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let (p, dp) = legendre_with_derivative(q, x);
            let dx = p / dp;
            x -= dx;
            // For large q the residual floor |P_q'|·ulp exceeds the target;
            // a Newton step below rounding level means we are on that floor.
            if p.abs() <= RESIDUAL_TARGET || dx.abs() <= 2.0 * f64::EPSILON * x.abs() {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence("Legendre-Gauss Newton", MAX_NEWTON_ITERATIONS));
        }
        let lo = k - 1;
        let hi = q - k;
        if lo == hi {
            x = 0.0;
        }
        let (_, dp) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[lo] = -x;
        nodes[hi] = x;
        weights[lo] = w;
        weights[hi] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}
