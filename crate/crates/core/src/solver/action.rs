use super::Problem;
use crate::error::{Error, Result};
use crate::nfunction::ConvexFunction;
use crate::orlicz::Trajectory;

/// Compensated summation; keeps the action accurate enough for the line
/// search near convergence.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.c
    }
}

impl Problem {
    fn check_grid(&self, u: &Trajectory) -> Result<()> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: u.dim() });
        }
        if u.len() != self.n || u.is_staggered() || (u.period() - self.period).abs() > 1e-12 * self.period {
            return Err(Error::InvalidParameter(format!(
                "trajectory grid ({} nodes, period {}) differs from the problem grid ({} nodes, period {})",
                u.len(),
                u.period(),
                self.n,
                self.period
            )));
        }
        Ok(())
    }

    pub(crate) fn node_time(&self, i: usize) -> f64 {
        i as f64 * self.period / self.n as f64
    }

    fn forward_difference(&self, x: &[f64], i: usize) -> Vec<f64> {
        let d = self.dim;
        let j = (i + 1) % self.n;
        let inv_h = self.n as f64 / self.period;
        (0..d).map(|k| (x[j * d + k] - x[i * d + k]) * inv_h).collect()
    }

    /// Action of flat node-major values; `+inf` once any term overflows.
    pub(crate) fn action_flat(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = Neumaier::default();
        for i in 0..self.n {
            let du = self.forward_difference(x, i);
            let v = self.phi.value(&du) + self.potential.value(self.node_time(i), &x[i * d..(i + 1) * d]);
            if !v.is_finite() {
                return f64::INFINITY;
            }
            acc.add(v);
        }
        acc.total() * self.period / self.n as f64
    }

    /// `w_i = grad Phi(Du_i)` for every node.
    fn fluxes(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.phi.gradient(&self.forward_difference(x, i))).collect()
    }

    pub(crate) fn gradient_flat(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let h = self.period / self.n as f64;
        let w = self.fluxes(x);
        let mut g = vec![0.0; self.n * d];
        for i in 0..self.n {
            let prev = &w[(i + self.n - 1) % self.n];
            let gf = self.potential.gradient(self.node_time(i), &x[i * d..(i + 1) * d]);
            for k in 0..d {
                g[i * d + k] = h * gf[k] - (w[i][k] - prev[k]);
            }
        }
        g
    }

    /// Per-node Euler-Lagrange residual `|(w_i - w_{i-1}) N/T - grad_x F(t_i, u_i)|`.
    pub(crate) fn residuals_flat(&self, x: &[f64]) -> Vec<f64> {
        let inv_h = self.n as f64 / self.period;
        self.gradient_flat(x)
            .chunks_exact(self.dim)
            .map(|g| inv_h * g.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// `|w_0 - w_{N-1}|`, the discrete trace of `u'(0) = u'(T)`.
    pub(crate) fn periodicity_residual_flat(&self, x: &[f64]) -> f64 {
        let w0 = self.phi.gradient(&self.forward_difference(x, 0));
        let wl = self.phi.gradient(&self.forward_difference(x, self.n - 1));
        w0.iter().zip(&wl).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// `(T/N) sum_i [Phi(Du_i) + F(t_i, u_i)]` with `Du_i = (u_{i+1} - u_i) N/T`.
pub fn discrete_action(problem: &Problem, u: &Trajectory) -> Result<f64> {
    problem.check_grid(u)?;
    let v = problem.action_flat(u.values());
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OverflowInPhi)
    }
}

/// Exact gradient of [`discrete_action`] with respect to the node values:
/// `(T/N) grad_x F(t_i, u_i) - [grad Phi(Du_i) - grad Phi(Du_{i-1})]`.
pub fn discrete_action_gradient(problem: &Problem, u: &Trajectory) -> Result<Trajectory> {
    problem.check_grid(u)?;
    u.with_values(problem.gradient_flat(u.values()))
}

/// Euler-Lagrange residual at every node.
pub fn el_residuals(problem: &Problem, u: &Trajectory) -> Result<Vec<f64>> {
    problem.check_grid(u)?;
    Ok(problem.residuals_flat(u.values()))
}
