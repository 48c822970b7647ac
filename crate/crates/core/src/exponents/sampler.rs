//! Deterministic point sources for inequality estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

pub trait PointSource: Sync {
    /// `count` points in `R^dim`, identical across calls.
    fn points(&self, dim: usize, count: usize) -> Vec<Vec<f64>>;
}

/// Fixed list of points, returned cyclically up to `count`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitPoints(pub Vec<Vec<f64>>);

impl PointSource for ExplicitPoints {
    fn points(&self, dim: usize, count: usize) -> Vec<Vec<f64>> {
        self.0
            .iter()
            .filter(|p| p.len() == dim)
            .take(count)
            .cloned()
            .collect()
    }
}

/// Halton points over `r ∈ [r_lo, r_hi]` (log-uniform) times directions on
/// the unit sphere, with a seeded Cranley–Patterson shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSampler {
    pub r_lo: f64,
    pub r_hi: f64,
    pub seed: u64,
}

impl Default for ShellSampler {
    fn default() -> Self {
        ShellSampler { r_lo: 1e-6, r_hi: 1e-1, seed: 0 }
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut acc = 0.0;
    while i > 0 {
        acc += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    acc
}

impl ShellSampler {
    fn shifts(&self, k: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..k).map(|_| rng.random::<f64>()).collect()
    }
}

impl PointSource for ShellSampler {
    fn points(&self, dim: usize, count: usize) -> Vec<Vec<f64>> {
        assert!(dim >= 1 && dim < PRIMES.len(), "dimension {dim} unsupported");
        // coordinates: one for the radius, then the direction
        let coords = if dim == 2 { 2 } else { 1 + dim };
        let shift = self.shifts(coords);
        let normal = Normal::standard();
        let (llo, lhi) = (self.r_lo.ln(), self.r_hi.ln());
        (1..=count as u64)
            .map(|i| {
                let u: Vec<f64> = (0..coords)
                    .map(|k| (radical_inverse(i, PRIMES[k]) + shift[k]).fract())
                    .collect();
                let r = (llo + (lhi - llo) * u[0]).exp();
                let dir: Vec<f64> = match dim {
                    1 => vec![if u[1] < 0.5 { -1.0 } else { 1.0 }],
                    2 => {
                        let (s, c) = (std::f64::consts::TAU * u[1]).sin_cos();
                        vec![c, s]
                    }
                    _ => {
                        let g: Vec<f64> = u[1..]
                            .iter()
                            .map(|&v| normal.inverse_cdf(v.clamp(1e-12, 1.0 - 1e-12)))
                            .collect();
                        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                        g.into_iter().map(|v| v / n).collect()
                    }
                };
                dir.into_iter().map(|d| r * d).collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        let v: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn points_lie_in_shell_and_repeat() {
        let s = ShellSampler { seed: 7, ..Default::default() };
        for dim in 1..=4 {
            let a = s.points(dim, 500);
            assert_eq!(a, s.points(dim, 500));
            for p in &a {
                assert_eq!(p.len(), dim);
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(r >= 1e-6 * (1.0 - 1e-12) && r <= 1e-1 * (1.0 + 1e-12));
            }
        }
        let other = ShellSampler { seed: 8, ..Default::default() };
        assert_ne!(s.points(2, 10), other.points(2, 10));
    }

    #[test]
    fn directions_cover_the_circle() {
        let pts = ShellSampler::default().points(2, 1000);
        let mut bins = [0usize; 8];
        for p in &pts {
            let a = p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU);
            bins[(a / std::f64::consts::TAU * 8.0) as usize % 8] += 1;
        }
        assert!(bins.iter().all(|&b| b > 100), "{bins:?}");
    }
}
