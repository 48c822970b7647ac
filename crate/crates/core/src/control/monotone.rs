use serde::{Deserialize, Serialize};

use crate::exponents::Region;

use super::series::ControlSeries;

/// Relative tolerance on sample-to-sample decreases.
pub const MONOTONE_TOL: f64 = 1e-9;
/// Violations listed individually in a report.
const MAX_LISTED: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitored {
    F,
    G,
    MinusRAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the later sample of the decreasing pair.
    pub index: usize,
    pub s: f64,
    pub r: f64,
    pub drop: f64,
    pub region: Region,
    /// The label permits `F` to decrease (`W_{−ω,l}` or a lower-exponent `W^ε`).
    pub permitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub which: Monitored,
    pub count: usize,
    pub worst: f64,
    /// Decreases at samples whose labels do not permit an `F`-decrease.
    pub unpermitted: usize,
    pub locations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.count == 0
    }
}

pub fn monitored_value(series: &ControlSeries, which: Monitored, i: usize) -> f64 {
    let p = &series.points[i];
    match which {
        Monitored::F => p.big_f,
        Monitored::G => p.g,
        Monitored::MinusRAlpha => -p.r.powf(series.params.alpha),
    }
}

/// Counts decreases beyond `1e-9·(1 + |value|)` between consecutive samples.
pub fn verify_monotone(series: &ControlSeries, which: Monitored) -> ViolationReport {
    let mut rep = ViolationReport { which, count: 0, worst: 0.0, unpermitted: 0, locations: Vec::new() };
    for i in 1..series.len() {
        let prev = monitored_value(series, which, i - 1);
        let cur = monitored_value(series, which, i);
        let drop = prev - cur;
        if drop > MONOTONE_TOL * (1.0 + cur.abs()) {
            let (a, b) = (&series.points[i - 1].label, &series.points[i].label);
            let permitted = a.permits_f_decrease() || b.permits_f_decrease();
            rep.count += 1;
            rep.worst = rep.worst.max(drop);
            if !permitted {
                rep.unpermitted += 1;
            }
            if rep.locations.len() < MAX_LISTED {
                let p = &series.points[i];
                rep.locations.push(Violation { index: i, s: p.s, r: p.r, drop, region: p.label.primary, permitted });
            }
        }
    }
    rep
}
