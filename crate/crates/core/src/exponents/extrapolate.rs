//! Tail limits of sampled series `q(r)` as `r → 0`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// Last value; no power law improved on a constant.
    LastValue,
    /// `q ≈ limit + coef·r^beta`.
    Power { beta: f64, coef: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLimit {
    pub value: f64,
    /// `max q − min q` over the tail.
    pub spread: f64,
    pub model: TailModel,
}

/// Exponents tried for the power-law correction.
pub fn beta_grid() -> Vec<f64> {
    (1..=80).map(|k| 0.05 * k as f64).collect()
}

/// Fits `q = L + C r^β` for each `β` in `betas` by least squares and keeps
/// the best if it beats the constant model tenfold in residual and its `L`
/// lies within one spread of the last value. Otherwise the last value.
pub fn extrapolate(r: &[f64], q: &[f64], betas: &[f64]) -> TailLimit {
    assert_eq!(r.len(), q.len());
    assert!(!q.is_empty(), "empty series");
    let last = *q.last().unwrap();
    let (lo, hi) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = hi - lo;
    let fallback = TailLimit { value: last, spread, model: TailModel::LastValue };
    if q.len() < 4 || spread == 0.0 {
        return fallback;
    }
    let n = q.len() as f64;
    let mean = q.iter().sum::<f64>() / n;
    let sse_const: f64 = q.iter().map(|v| (v - mean).powi(2)).sum();

    let mut best: Option<(f64, f64, f64, f64)> = None; // (sse, beta, limit, coef)
    for &beta in betas {
        let z: Vec<f64> = r.iter().map(|ri| ri.powf(beta)).collect();
        let zm = z.iter().sum::<f64>() / n;
        let szz: f64 = z.iter().map(|v| (v - zm).powi(2)).sum();
        if !(szz > 0.0) || !szz.is_finite() {
            continue;
        }
        let szq: f64 = z.iter().zip(q).map(|(a, b)| (a - zm) * (b - mean)).sum();
        let coef = szq / szz;
        let limit = mean - coef * zm;
        let sse: f64 = z.iter().zip(q).map(|(a, b)| (b - limit - coef * a).powi(2)).sum();
        if sse.is_finite() && best.is_none_or(|b| sse < b.0) {
            best = Some((sse, beta, limit, coef));
        }
    }
    match best {
        Some((sse, beta, limit, coef)) if 10.0 * sse < sse_const && (limit - last).abs() <= spread => {
            TailLimit { value: limit, spread, model: TailModel::Power { beta, coef } }
        }
        _ => fallback,
    }
}
