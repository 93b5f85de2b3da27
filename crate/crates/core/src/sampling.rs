//! Deterministic sampling helpers shared by the property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::orlicz::Trajectory;
use crate::vecops;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly distributed unit vector in `R^d`.
pub fn random_unit(rng: &mut SampleRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = vecops::unit(&v) {
            return u;
        }
    }
}

/// Point with uniformly random direction and radius uniform in `[0, radius]`.
pub fn random_point(rng: &mut SampleRng, d: usize, radius: f64) -> Vec<f64> {
    let r = radius * rng.gen::<f64>();
    vecops::scale(&random_unit(rng, d), r)
}

/// Ray directions: signed coordinate axes, the two main diagonals and
/// `extra` random directions.
pub fn ray_set(d: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rays = Vec::new();
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[k] = s;
            rays.push(e);
        }
    }
    if d > 1 {
        let c = 1.0 / (d as f64).sqrt();
        rays.push(vec![c; d]);
        let mut alt = vec![c; d];
        for (k, v) in alt.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -c;
            }
        }
        rays.push(alt);
        let mut r = rng(seed);
        for _ in 0..extra {
            rays.push(random_unit(&mut r, d));
        }
    }
    rays
}

/// Directions on the unit sphere for infimum searches: `count` equally spaced
/// angles in two dimensions, axes plus random directions otherwise.
pub fn sphere_directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let mut dirs = ray_set(d, 0, seed);
            let mut r = rng(seed);
            while dirs.len() < count {
                dirs.push(random_unit(&mut r, d));
            }
            dirs
        }
    }
}

/// Logarithmically spaced grid with `per_decade` points per decade, inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

/// Random trigonometric polynomial path with `modes` harmonics per component,
/// coefficients decaying like `1/k`, plus a random mean in `[-mean, mean]`.
pub fn random_band_limited(
    rng: &mut SampleRng,
    n: usize,
    dim: usize,
    period: f64,
    modes: usize,
    amplitude: f64,
    mean: f64,
) -> Trajectory {
    let mut coeffs = Vec::with_capacity(dim);
    for _ in 0..dim {
        let m0 = mean * (2.0 * rng.gen::<f64>() - 1.0);
        let terms: Vec<(f64, f64)> = (1..=modes)
            .map(|k| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (amplitude * a / k as f64, amplitude * b / k as f64)
            })
            .collect();
        coeffs.push((m0, terms));
    }
    Trajectory::from_fn(period, n, dim, |t, out| {
        for (c, (m0, terms)) in coeffs.iter().enumerate() {
            let mut v = *m0;
            for (k, (a, b)) in terms.iter().enumerate() {
                let w = 2.0 * std::f64::consts::PI * (k + 1) as f64 * t / period;
                v += a * w.cos() + b * w.sin();
            }
            out[c] = v;
        }
    })
    .expect("valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-2, 1e3, 10);
        assert_eq!(g.len(), 51);
        assert!((g[0] - 1e-2).abs() < 1e-16);
        assert!((g[50] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn rays_are_unit() {
        for d in 1..4 {
            for r in ray_set(d, 4, 7) {
                assert!((vecops::norm(&r) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn seeded_paths_repeat() {
        let a = random_band_limited(&mut rng(3), 32, 2, 1.0, 4, 1.0, 0.5);
        let b = random_band_limited(&mut rng(3), 32, 2, 1.0, 4, 1.0, 0.5);
        assert_eq!(a.values(), b.values());
    }
}
