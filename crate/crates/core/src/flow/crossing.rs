use crate::polyfun::PolynomialFunction;
use crate::scalar::norm;

use super::TrajectoryRecord;

/// Below this multiple of `r^deg Γ`, a value of `Γ` counts as zero.
const INSIDE_TOL: f64 = 1e-14;
/// Chord subdivisions per sample interval.
const SUBDIVISIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossings {
    Count(usize),
    /// `Γ` vanishes to tolerance on every sample: the path lies inside `{Γ = 0}`.
    Inside,
}

/// Sign changes of `Γ` along a recorded flow.
pub fn crossing_count(traj: &TrajectoryRecord, gamma: &PolynomialFunction) -> Crossings {
    let pts: Vec<Vec<f64>> = traj.samples.iter().map(|s| s.x.clone()).collect();
    crossing_count_points(&pts, gamma)
}

/// Sign changes of `Γ` along a polyline. Each segment is subdivided so that a
/// pair of nearby roots inside one segment is still seen when the chord
/// separates them, and every sign change is confirmed by bisection.
pub fn crossing_count_points(points: &[Vec<f64>], gamma: &PolynomialFunction) -> Crossings {
    let deg = gamma.total_degree().unwrap_or(0) as i32;
    let eval = |x: &[f64]| gamma.evaluate(x).unwrap_or(f64::NAN);
    let negligible = |x: &[f64], v: f64| v.abs() <= INSIDE_TOL * norm(x).powi(deg);

    if points.iter().all(|x| negligible(x, eval(x))) {
        return Crossings::Inside;
    }
    let mut count = 0;
    let mut last_sign = 0i8;
    let mut last_point: Option<Vec<f64>> = None;
    let sign_of = |x: &[f64]| -> i8 {
        let v = eval(x);
        if negligible(x, v) || v.is_nan() {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };
    for p in points {
        let chain: Vec<Vec<f64>> = match &last_point {
            None => vec![p.clone()],
            Some(prev) => (1..=SUBDIVISIONS)
                .map(|k| lerp(prev, p, k as f64 / SUBDIVISIONS as f64))
                .collect(),
        };
        let mut from = last_point.clone();
        for q in chain {
            let s = sign_of(&q);
            if s != 0 {
                if last_sign != 0 && s != last_sign {
                    if let Some(a) = &from {
                        if bisect_confirms(a, &q, &eval, last_sign) {
                            count += 1;
                        }
                    } else {
                        count += 1;
                    }
                }
                last_sign = s;
            }
            from = Some(q);
        }
        last_point = Some(p.clone());
    }
    Crossings::Count(count)
}

/// Bisects the chord `[a, b]` to locate the root; confirms that `Γ` takes
/// the opposite sign on the two ends of the final bracket.
fn bisect_confirms(a: &[f64], b: &[f64], eval: &dyn Fn(&[f64]) -> f64, sign_a: i8) -> bool {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let at = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let v = eval(&at(mid));
        if v == 0.0 {
            return true;
        }
        if (v > 0.0) == (sign_a > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (va, vb) = (eval(&at(lo)), eval(&at(hi)));
    va == 0.0 || vb == 0.0 || (va > 0.0) != (vb > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate_trajectory, IntegratorConfig};

    fn parabola_record() -> TrajectoryRecord {
        let f = PolynomialFunction::parse("-1/2*x1^2 - 1*x2^2").unwrap();
        integrate_trajectory(&f, &[1.0, 1.0], &IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn secant_line_crossed_once() {
        let rec = parabola_record();
        let gamma = PolynomialFunction::parse("x2 - 1/2*x1").unwrap();
        assert_eq!(crossing_count(&rec, &gamma), Crossings::Count(1));
        let axis = PolynomialFunction::parse("x2").unwrap();
        assert_eq!(crossing_count(&rec, &axis), Crossings::Count(0));
    }

    #[test]
    fn axis_trajectory_inside_axis() {
        let f = PolynomialFunction::parse("-1/2*x1^2 - 1*x2^2").unwrap();
        let rec = integrate_trajectory(&f, &[0.0, 1.0], &IntegratorConfig::default()).unwrap();
        let gamma = PolynomialFunction::parse_with_dimension("x1", 2).unwrap();
        assert_eq!(crossing_count(&rec, &gamma), Crossings::Inside);
    }

    #[test]
    fn two_roots_within_one_segment() {
        // on y = 1, Γ = x^2 - 1/4 has both roots inside one chord
        let gamma = PolynomialFunction::parse_with_dimension("x1^2 - 1/4*x2^2", 2).unwrap();
        let pts = vec![vec![-1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(crossing_count_points(&pts, &gamma), Crossings::Count(2));
    }
}
