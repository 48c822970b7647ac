//! Continued-fraction rationalization of estimated limits.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

/// Convergents `p_k/q_k` of `x` with `q_k <= max_den`, in order.
pub fn convergents(x: f64, max_den: i64) -> Vec<Rational64> {
    let mut out = Vec::new();
    if !x.is_finite() || max_den < 1 {
        return out;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den as i128 || p2.abs() > i64::MAX as i128 {
            break;
        }
        out.push(Rational64::new(p2 as i64, q2 as i64));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rest - a as f64;
        if frac <= 0.0 || (p2 as f64 / q2 as f64) == x {
            break;
        }
        rest = 1.0 / frac;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rationalization {
    pub value: Rational64,
    /// `|x - value| <= tol`; otherwise `value` is merely the closest convergent.
    pub within_tolerance: bool,
}

pub fn to_f64(q: Rational64) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Smallest-denominator convergent within `tol` of `x`, else the closest one.
pub fn rationalize(x: f64, tol: f64, max_den: i64) -> Option<Rationalization> {
    let cs = convergents(x, max_den);
    if let Some(&value) = cs.iter().find(|c| (to_f64(**c) - x).abs() <= tol) {
        return Some(Rationalization { value, within_tolerance: true });
    }
    cs.into_iter()
        .min_by(|a, b| {
            let da = (to_f64(*a) - x).abs();
            let db = (to_f64(*b) - x).abs();
            da.total_cmp(&db)
        })
        .map(|value| Rationalization { value, within_tolerance: false })
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_ratio(q: Rational64) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_ratio(text: &str) -> Result<Rational64, String> {
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: i64 = n.parse().map_err(|_| format!("invalid rational `{text}`"))?;
    let d: i64 = d.parse().map_err(|_| format!("invalid rational `{text}`"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in `{text}`"));
    }
    Ok(Rational64::new(n, d))
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_ratio {
    use num_rational::Rational64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_ratio(*q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_ratio(&text).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use num_rational::Rational64;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(q: &Option<Rational64>, s: S) -> Result<S::Ok, S::Error> {
            match q {
                Some(q) => s.serialize_some(&super::super::format_ratio(*q)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational64>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|t| super::super::parse_ratio(&t).map_err(serde::de::Error::custom))
                .transpose()
        }
    }

    pub mod vec {
        use num_rational::Rational64;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[Rational64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|q| super::super::format_ratio(*q)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational64>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|t| super::super::parse_ratio(t).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
