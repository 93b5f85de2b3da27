use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 4;

/// Sampled periodic path `u: [0, T] -> R^d`.
///
/// Node `i` sits at `t_i = i T / N` (or at the midpoint `(i + 1/2) T / N` for
/// staggered trajectories such as derivatives); node `N` is node `0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    period: f64,
    dim: usize,
    values: Vec<f64>,
    staggered: bool,
}

impl Trajectory {
    /// `values` holds `N x dim` entries, node-major.
    pub fn new(period: f64, dim: usize, values: Vec<f64>) -> Result<Trajectory> {
        Self::build(period, dim, values, false)
    }

    pub(crate) fn build(period: f64, dim: usize, values: Vec<f64>, staggered: bool) -> Result<Trajectory> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if values.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, found: values.len() % dim });
        }
        let n = values.len() / dim;
        if n < MIN_NODES {
            return Err(Error::InvalidParameter(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("trajectory values must be finite".into()));
        }
        Ok(Trajectory { period, dim, values, staggered })
    }

    pub fn from_nodes(period: f64, nodes: &[Vec<f64>]) -> Result<Trajectory> {
        let dim = nodes.first().map_or(0, Vec::len);
        if let Some(bad) = nodes.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        Self::new(period, dim, nodes.concat())
    }

    /// Samples `f(t_i, out)` at every node.
    pub fn from_fn<F: FnMut(f64, &mut [f64])>(period: f64, n: usize, dim: usize, mut f: F) -> Result<Trajectory> {
        let mut values = vec![0.0; n * dim];
        for (i, out) in values.chunks_mut(dim.max(1)).enumerate() {
            f(i as f64 * period / n as f64, out);
        }
        Self::new(period, dim, values)
    }

    pub fn constant(period: f64, n: usize, c: &[f64]) -> Result<Trajectory> {
        Self::from_fn(period, n, c.len(), |_, out| out.copy_from_slice(c))
    }

    pub fn zeros(period: f64, n: usize, dim: usize) -> Result<Trajectory> {
        Self::new(period, dim, vec![0.0; n * dim])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_staggered(&self) -> bool {
        self.staggered
    }

    /// Grid spacing `T / N`.
    pub fn step(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        let shift = if self.staggered { 0.5 } else { 0.0 };
        (i as f64 + shift) * self.step()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Trajectory> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), found: values.len() });
        }
        Self::build(self.period, self.dim, values, self.staggered)
    }

    pub fn map<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<Trajectory> {
        let values: Vec<f64> = self.nodes().flat_map(f).collect();
        self.with_values(values)
    }

    pub fn scale(&self, c: f64) -> Trajectory {
        Trajectory { values: self.values.iter().map(|v| c * v).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_same_grid(other)?;
        Ok(Trajectory {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.add(&other.scale(-1.0))
    }

    pub fn check_same_grid(&self, other: &Trajectory) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        if self.period != other.period {
            return Err(Error::InvalidParameter(format!(
                "periods differ: {} vs {}",
                self.period, other.period
            )));
        }
        Ok(())
    }

    /// Max over nodes of the Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        self.nodes().map(crate::vecops::norm).fold(0.0, f64::max)
    }

    /// Forward differences `(u_{i+1} - u_i) N / T` on the staggered grid.
    pub fn derivative(&self) -> Trajectory {
        let n = self.len();
        let inv_h = 1.0 / self.step();
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..n {
            let (a, b) = (self.node(i), self.node((i + 1) % n));
            values.extend(a.iter().zip(b).map(|(x, y)| (y - x) * inv_h));
        }
        Trajectory { period: self.period, dim: self.dim, values, staggered: true }
    }

    /// Writes the `t,u1,...,ud` CSV form.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|k| format!("u{k}")));
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![format_float(self.t(i))];
            row.extend(self.node(i).iter().map(|&v| format_float(v)));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads the CSV form; the period is `N` times the spacing of the first two
    /// time stamps.
    pub fn read_csv<R: Read>(r: R) -> Result<Trajectory> {
        let mut rdr = csv::Reader::from_reader(r);
        let dim = rdr.headers()?.len().saturating_sub(1);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parsed: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("bad number in trajectory CSV: {e}")))?;
            if parsed.len() != dim + 1 {
                return Err(Error::DimensionMismatch { expected: dim + 1, found: parsed.len() });
            }
            times.push(parsed[0]);
            values.extend_from_slice(&parsed[1..]);
        }
        if times.len() < 2 {
            return Err(Error::InvalidParameter("trajectory CSV needs at least two rows".into()));
        }
        let h = times[1] - times[0];
        let staggered = (times[0] - 0.5 * h).abs() <= 1e-9 * h.abs().max(1.0) && times[0] != 0.0;
        Self::build(h * times.len() as f64, dim, values, staggered)
    }
}

/// Shortest round-trip representation.
fn format_float(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_grids() {
        assert!(Trajectory::new(1.0, 1, vec![0.0; 3]).is_err());
        assert!(Trajectory::new(0.0, 1, vec![0.0; 8]).is_err());
        assert!(Trajectory::new(1.0, 1, vec![0.0, 1.0, f64::NAN, 0.0]).is_err());
        assert!(Trajectory::new(1.0, 2, vec![0.0; 9]).is_err());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let u = Trajectory::constant(2.0, 16, &[1.5, -3.0]).unwrap();
        assert!(u.derivative().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_of_sine_at_midpoints() {
        let n = 256;
        let u = Trajectory::from_fn(1.0, n, 1, |t, o| o[0] = (2.0 * PI * t).sin()).unwrap();
        let du = u.derivative();
        let err = (0..n)
            .map(|i| (du.node(i)[0] - 2.0 * PI * (2.0 * PI * du.t(i)).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn sawtooth_wraps() {
        let n = 8;
        let u = Trajectory::from_fn(1.0, n, 1, |t, o| o[0] = t).unwrap();
        let du = u.derivative();
        assert!((du.node(0)[0] - 1.0).abs() < 1e-12);
        let wrap = (0.0 - (n as f64 - 1.0) / n as f64) * n as f64;
        assert!((du.node(n - 1)[0] - wrap).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let u = Trajectory::from_fn(2.5, 8, 2, |t, o| {
            o[0] = t.sin();
            o[1] = 1.0 / 3.0 + t;
        })
        .unwrap();
        let text = u.to_csv_string();
        assert!(text.starts_with("t,u1,u2\n"));
        let back = Trajectory::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, u);
        let du = u.derivative();
        assert_eq!(Trajectory::read_csv(du.to_csv_string().as_bytes()).unwrap(), du);
    }
}
