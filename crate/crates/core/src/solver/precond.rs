use super::Problem;
use crate::nfunction::ConvexFunction;

const REFRESH_EVERY: usize = 10;

/// Initial inverse-Hessian model of the quasi-Newton iteration.
pub trait Preconditioner {
    /// Rebuilds the model at `x`; called every few iterations.
    fn refresh(&mut self, x: &[f64], iteration: usize);
    fn apply(&self, q: &[f64]) -> Vec<f64>;
}

pub struct Identity;

impl Preconditioner for Identity {
    fn refresh(&mut self, _x: &[f64], _iteration: usize) {}

    fn apply(&self, q: &[f64]) -> Vec<f64> {
        q.to_vec()
    }
}

/// Per-component periodic tridiagonal model of the action Hessian: the
/// diagonal of `H_Phi(Du_i)` on the edges and the diagonal of the Hessian of
/// `F` at the nodes.
pub struct ActionPreconditioner<'a> {
    problem: &'a Problem,
    /// `edge[k][i] = H_Phi(Du_i)_kk / h`
    edge: Vec<Vec<f64>>,
    /// `node[k][i] = h d^2F/dx_k^2 (t_i, u_i)`, floored to stay positive
    node: Vec<Vec<f64>>,
    last: Option<usize>,
    /// Projects out the mean of each component.
    pin_mean: bool,
}

impl<'a> ActionPreconditioner<'a> {
    pub fn new(problem: &'a Problem, pin_mean: bool) -> Self {
        ActionPreconditioner { problem, edge: Vec::new(), node: Vec::new(), last: None, pin_mean }
    }
}

impl Preconditioner for ActionPreconditioner<'_> {
    fn refresh(&mut self, x: &[f64], iteration: usize) {
        if self.last.is_some_and(|l| iteration < l + REFRESH_EVERY) {
            return;
        }
        self.last = Some(iteration);
        let p = self.problem;
        let (n, d) = (p.n, p.dim);
        let h = p.period / n as f64;
        let mut edge = vec![vec![0.0; n]; d];
        let mut node = vec![vec![0.0; n]; d];
        for i in 0..n {
            let j = (i + 1) % n;
            let du: Vec<f64> = (0..d).map(|k| (x[j * d + k] - x[i * d + k]) / h).collect();
            let hess = p.phi.hessian(&du);
            let ui = &x[i * d..(i + 1) * d];
            let t = p.node_time(i);
            for k in 0..d {
                let a = hess[(k, k)];
                edge[k][i] = if a.is_finite() { a.clamp(0.0, 1e12) } else { 1e12 } / h;
                let delta = 1e-5 * (1.0 + ui[k].abs());
                let mut up = ui.to_vec();
                let mut down = ui.to_vec();
                up[k] += delta;
                down[k] -= delta;
                let c = (p.potential.gradient(t, &up)[k] - p.potential.gradient(t, &down)[k]) / (2.0 * delta);
                node[k][i] = h * if c.is_finite() { c } else { 0.0 };
            }
        }
        for k in 0..d {
            let emax = edge[k].iter().cloned().fold(0.0, f64::max);
            let mean_node = node[k].iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            let edge_floor = 1e-8 * emax + 1e-300;
            // keeps the constant mode invertible when F is flat or concave
            let node_floor = (1e-3 * mean_node).max(1e-10 * emax * h * h / (p.period * p.period)).max(1e-300);
            edge[k].iter_mut().for_each(|e| *e = e.max(edge_floor));
            node[k].iter_mut().for_each(|c| *c = c.max(node_floor));
        }
        self.edge = edge;
        self.node = node;
    }

    fn apply(&self, q: &[f64]) -> Vec<f64> {
        let (n, d) = (self.problem.n, self.problem.dim);
        let mut out = vec![0.0; n * d];
        for k in 0..d {
            let b = &self.edge[k];
            let sub: Vec<f64> = (0..n).map(|i| -b[(i + n - 1) % n]).collect();
            let sup: Vec<f64> = (0..n).map(|i| -b[i]).collect();
            let diag: Vec<f64> = (0..n).map(|i| b[(i + n - 1) % n] + b[i] + self.node[k][i]).collect();
            let rhs: Vec<f64> = (0..n).map(|i| q[i * d + k]).collect();
            let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
            let shift = if self.pin_mean { x.iter().sum::<f64>() / n as f64 } else { 0.0 };
            (0..n).for_each(|i| out[i * d + k] = x[i] - shift);
        }
        out
    }
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i + 1] * x[i + 1];
    }
    x
}

/// Solves a periodic tridiagonal system; `sub[0]` and `sup[n-1]` are the
/// corner entries. Sherman-Morrison on top of the Thomas algorithm.
pub(crate) fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (alpha, beta) = (sup[n - 1], sub[0]);
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solve_matches_dense_product() {
        let n = 7;
        let sub: Vec<f64> = (0..n).map(|i| -0.3 - 0.1 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.2 - 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.3 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        for i in 0..n {
            let r = sub[i] * x[(i + n - 1) % n] + diag[i] * x[i] + sup[i] * x[(i + 1) % n];
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }
}
