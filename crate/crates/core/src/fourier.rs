//! Trigonometric interpolation of periodic samples.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Trigonometric interpolant of `n` equispaced samples on `[0, period)`.
#[derive(Clone, Debug)]
pub struct FourierSeries {
    period: f64,
    /// `(frequency index, coefficient)`, with the Nyquist mode split evenly.
    modes: Vec<(f64, Complex<f64>)>,
}

impl FourierSeries {
    pub fn from_samples(samples: &[f64], period: f64) -> FourierSeries {
        let n = samples.len();
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut modes = Vec::with_capacity(n + 1);
        for (k, c) in buf.into_iter().enumerate() {
            let c = c * scale;
            if 2 * k < n {
                modes.push((k as f64, c));
            } else if 2 * k == n {
                modes.push((k as f64, c * 0.5));
                modes.push((-(k as f64), c * 0.5));
            } else {
                modes.push((k as f64 - n as f64, c));
            }
        }
        FourierSeries { period, modes }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = 2.0 * PI * t / self.period;
        self.modes
            .iter()
            .map(|&(k, c)| (c * Complex::from_polar(1.0, k * w)).re)
            .sum()
    }

    /// The `order`-th time derivative.
    pub fn derivative(&self, order: u32) -> FourierSeries {
        let modes = self
            .modes
            .iter()
            .map(|&(k, c)| {
                let factor = Complex::new(0.0, 2.0 * PI * k / self.period).powu(order);
                (k, c * factor)
            })
            .collect();
        FourierSeries { period: self.period, modes }
    }

    /// Fraction of the (non-constant) spectral energy carried by the upper
    /// half of the frequency band.
    pub fn high_band_fraction(&self) -> f64 {
        let kmax = self.modes.iter().map(|m| m.0.abs()).fold(0.0, f64::max);
        let (mut total, mut high) = (0.0, 0.0);
        for &(k, c) in &self.modes {
            if k == 0.0 {
                continue;
            }
            let e = c.norm_sqr();
            total += e;
            if k.abs() > 0.5 * kmax {
                high += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_differentiates_sine() {
        let n = 32;
        let samples: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin() + 0.25).collect();
        let s = FourierSeries::from_samples(&samples, 1.0);
        for t in [0.0, 0.1234, 0.77] {
            assert!((s.eval(t) - ((2.0 * PI * t).sin() + 0.25)).abs() < 1e-13);
            let d2 = -4.0 * PI * PI * (2.0 * PI * t).sin();
            assert!((s.derivative(2).eval(t) - d2).abs() < 1e-10);
        }
        assert!(s.high_band_fraction() < 1e-20);
    }

    #[test]
    fn period_scaling() {
        let n = 16;
        let period = 3.0;
        let samples: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let s = FourierSeries::from_samples(&samples, period);
        let t = 0.4;
        let exact = -(2.0 * PI / period) * (2.0 * PI * t / period).sin();
        assert!((s.derivative(1).eval(t) - exact).abs() < 1e-12);
    }

    #[test]
    fn white_noise_is_not_band_limited() {
        let samples: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(FourierSeries::from_samples(&samples, 1.0).high_band_fraction() > 0.99);
    }
}
