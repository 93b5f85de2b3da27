use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `P(t) = sum_j poly[j] t^j + sum_k cos[k-1] cos(2 pi k t / T) + sin[k-1] sin(2 pi k t / T)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeSeries {
    pub poly: Vec<f64>,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TimeSeries {
    pub fn constant(c: f64) -> TimeSeries {
        TimeSeries { poly: vec![c], ..Default::default() }
    }

    pub fn eval(&self, t: f64, period: f64) -> f64 {
        let mut v = self.poly.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let w = 2.0 * PI * t / period;
        for (k, c) in self.cos.iter().enumerate() {
            v += c * ((k + 1) as f64 * w).cos();
        }
        for (k, c) in self.sin.iter().enumerate() {
            v += c * ((k + 1) as f64 * w).sin();
        }
        v
    }

    pub fn derivative(&self, t: f64, period: f64) -> f64 {
        let mut v = 0.0;
        for (j, c) in self.poly.iter().enumerate().skip(1).rev() {
            v = v * t + j as f64 * c;
        }
        let w0 = 2.0 * PI / period;
        for (k, c) in self.cos.iter().enumerate() {
            let kw = (k + 1) as f64 * w0;
            v -= c * kw * (kw * t).sin();
        }
        for (k, c) in self.sin.iter().enumerate() {
            let kw = (k + 1) as f64 * w0;
            v += c * kw * (kw * t).cos();
        }
        v
    }

    /// Degree of the algebraic part (trailing zeros ignored).
    pub fn poly_degree(&self) -> usize {
        self.poly.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// `(1/T) int_0^T P`.
    pub fn mean(&self, period: f64) -> f64 {
        self.poly
            .iter()
            .enumerate()
            .map(|(j, c)| c * period.powi(j as i32) / (j + 1) as f64)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().chain(&self.cos).chain(&self.sin).all(|&c| c == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.poly.iter().chain(&self.cos).chain(&self.sin).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("time series coefficients must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Multivariate polynomial `Q(x) = sum coef * prod x_k^{powers_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Polynomial> {
        if dim == 0 {
            return Err(Error::InvalidParameter("polynomial dimension must be positive".into()));
        }
        for m in &terms {
            if m.powers.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.powers.len() });
            }
            if !m.coef.is_finite() {
                return Err(Error::InvalidParameter("polynomial coefficients must be finite".into()));
            }
        }
        Ok(Polynomial { dim, terms })
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|m| m.coef != 0.0)
            .map(|m| m.powers.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coef * m.powers.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for m in &self.terms {
            for (k, gk) in g.iter_mut().enumerate() {
                let e = m.powers[k];
                if e == 0 {
                    continue;
                }
                let mut prod = m.coef * e as f64;
                for (j, (&ej, &xj)) in m.powers.iter().zip(x).enumerate() {
                    let ej = if j == k { ej - 1 } else { ej };
                    prod *= xj.powi(ej as i32);
                }
                *gk += prod;
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn time_series_eval_and_derivative() {
        let p = TimeSeries { poly: vec![1.0, 0.0, 2.0], cos: vec![0.5], sin: vec![0.0, -1.0] };
        let t = 0.3;
        let w = 2.0 * PI * t / 2.0;
        assert!(close(p.eval(t, 2.0), 1.0 + 2.0 * t * t + 0.5 * w.cos() - (2.0 * w).sin()));
        let h = 1e-6;
        let fd = (p.eval(t + h, 2.0) - p.eval(t - h, 2.0)) / (2.0 * h);
        assert!((p.derivative(t, 2.0) - fd).abs() < 1e-7);
        assert_eq!(p.poly_degree(), 2);
        // mean over [0, 2]: 1 + 2 * 8/3 / 2
        assert!(close(p.mean(2.0), 1.0 + 8.0 / 3.0));
    }

    #[test]
    fn polynomial_gradient() {
        let q = Polynomial::new(
            2,
            vec![
                Monomial { coef: 1.0, powers: vec![4, 0] },
                Monomial { coef: -3.0, powers: vec![1, 2] },
                Monomial { coef: 2.0, powers: vec![0, 0] },
            ],
        )
        .unwrap();
        assert_eq!(q.degree(), 4);
        let x = [1.5, -0.5];
        assert!(close(q.eval(&x), 1.5f64.powi(4) - 3.0 * 1.5 * 0.25 + 2.0));
        let g = q.gradient(&x);
        assert!(close(g[0], 4.0 * 1.5f64.powi(3) - 3.0 * 0.25));
        assert!(close(g[1], -6.0 * 1.5 * -0.5));
    }

    #[test]
    fn polynomial_rejects_bad_terms() {
        assert!(Polynomial::new(2, vec![Monomial { coef: 1.0, powers: vec![1] }]).is_err());
        assert!(Polynomial::new(1, vec![Monomial { coef: f64::NAN, powers: vec![1] }]).is_err());
    }
}
