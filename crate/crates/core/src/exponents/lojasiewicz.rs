//! `|∇f| ≥ c|f|^ρ` and `r|∇f| ≥ c_f|f|` on sampled points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::polyfun::PolynomialFunction;

use super::sampler::PointSource;
use super::ExponentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczEstimate {
    pub rho: f64,
    pub c: f64,
    pub sample_count: usize,
    /// RMS distance of the per-bin envelope points from the fitted line.
    pub fit_residual: f64,
    /// Fewer than two distinct `|f|` levels: `rho` and `c` are undetermined (NaN).
    pub insufficient_data: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BochnakEstimate {
    pub c_f: f64,
    pub sample_count: usize,
    /// The raw minimum exceeded the multiplicity and was clamped to it.
    pub capped: bool,
}

/// `(ln|f|, ln|∇f|, r)` at the points where `f ≠ 0`, in input order.
fn log_pairs(f: &PolynomialFunction, points: &[Vec<f64>]) -> Vec<(f64, f64, f64)> {
    points
        .par_iter()
        .filter_map(|x| {
            let (v, g) = f.value_and_gradient(x.as_slice()).ok()?;
            let gn = g.iter().map(|c| c * c).sum::<f64>().sqrt();
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            (v != 0.0 && gn > 0.0 && v.is_finite()).then(|| (v.abs().ln(), gn.ln(), r))
        })
        .collect()
}

/// Envelope fit: the `ln|f|` range is cut into equal bins, the lowest
/// `ln|∇f|` of each bin is kept, and `ρ` is the least-squares slope through
/// those minima. `c` is then the largest constant valid on every sample.
pub fn fit_envelope(pairs: &[(f64, f64)]) -> LojasiewiczEstimate {
    let n = pairs.len();
    let undetermined = LojasiewiczEstimate {
        rho: f64::NAN,
        c: f64::NAN,
        sample_count: n,
        fit_residual: 0.0,
        insufficient_data: true,
    };
    let (xmin, xmax) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if n < 2 || !(xmax > xmin) {
        return undetermined;
    }
    let bins = (n / 16).clamp(2, 32);
    let width = (xmax - xmin) / bins as f64;
    let mut lowest: Vec<Option<(f64, f64)>> = vec![None; bins];
    for &(x, y) in pairs {
        let k = (((x - xmin) / width) as usize).min(bins - 1);
        if lowest[k].is_none_or(|(_, yb)| y < yb) {
            lowest[k] = Some((x, y));
        }
    }
    let env: Vec<(f64, f64)> = lowest.into_iter().flatten().collect();
    let m = env.len() as f64;
    let xm = env.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = env.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = env.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = env.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let rho = sxy / sxx;
    let intercept = ym - rho * xm;
    let fit_residual = (env.iter().map(|p| (p.1 - intercept - rho * p.0).powi(2)).sum::<f64>() / m).sqrt();
    LojasiewiczEstimate {
        rho,
        c: constant_for(pairs, rho),
        sample_count: n,
        fit_residual,
        insufficient_data: false,
    }
}

/// Largest `c` with `ln|∇f| ≥ ln c + ρ ln|f|` on every pair.
pub fn constant_for(pairs: &[(f64, f64)], rho: f64) -> f64 {
    pairs.iter().map(|&(x, y)| y - rho * x).fold(f64::INFINITY, f64::min).exp()
}

pub fn estimate_lojasiewicz(
    f: &PolynomialFunction,
    sampler: &dyn PointSource,
    count: usize,
) -> Result<LojasiewiczEstimate, ExponentError> {
    let pts = sampler.points(f.dimension(), count);
    let pairs: Vec<(f64, f64)> = log_pairs(f, &pts).into_iter().map(|(x, y, _)| (x, y)).collect();
    if pairs.is_empty() {
        return Err(ExponentError::AllSamplesOnZeroSet);
    }
    Ok(fit_envelope(&pairs))
}

/// Best constant for a fixed exponent on the same sample set.
pub fn lojasiewicz_constant(
    f: &PolynomialFunction,
    sampler: &dyn PointSource,
    count: usize,
    rho: f64,
) -> Result<f64, ExponentError> {
    let pts = sampler.points(f.dimension(), count);
    let pairs: Vec<(f64, f64)> = log_pairs(f, &pts).into_iter().map(|(x, y, _)| (x, y)).collect();
    if pairs.is_empty() {
        return Err(ExponentError::AllSamplesOnZeroSet);
    }
    Ok(constant_for(&pairs, rho))
}

/// `inf r|∇f|/|f|` over the samples, never above the multiplicity.
pub fn estimate_bochnak_constant(
    f: &PolynomialFunction,
    sampler: &dyn PointSource,
    count: usize,
) -> Result<BochnakEstimate, ExponentError> {
    let pts = sampler.points(f.dimension(), count);
    let triples = log_pairs(f, &pts);
    if triples.is_empty() {
        return Err(ExponentError::AllSamplesOnZeroSet);
    }
    let raw = triples
        .iter()
        .map(|&(lf, lg, r)| (lg + r.ln() - lf).exp())
        .fold(f64::INFINITY, f64::min);
    let mult = f.multiplicity()? as f64;
    Ok(BochnakEstimate { c_f: raw.min(mult), sample_count: triples.len(), capped: raw > mult })
}
