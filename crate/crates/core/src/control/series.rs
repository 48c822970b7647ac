use serde::{Deserialize, Serialize};

use crate::exponents::{classify_split, pow_l, ControlParams, RegionLabel};
use crate::flow::TrajectoryRecord;

use super::ControlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub s: f64,
    pub s_tilde: f64,
    pub r: f64,
    /// `F = f/r^l`.
    pub big_f: f64,
    pub df_ds: f64,
    /// `g = (F − a) − r^α`.
    pub g: f64,
    pub dg_ds: f64,
    /// `dg/ds̃ = (dg/ds)(ds/ds̃)`; infinite where the motion is radial.
    pub dg_dstilde: f64,
    /// `d(F − a)/ds̃`; infinite where the motion is radial.
    pub df_dstilde: f64,
    pub h: f64,
    pub label: RegionLabel,
}

impl ControlPoint {
    /// `ds/ds̃` is undefined here (`∇′f = 0`).
    pub fn is_radial(&self) -> bool {
        !self.dg_dstilde.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSeries {
    pub points: Vec<ControlPoint>,
    pub params: ControlParams,
}

impl ControlSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-series made of the last `max(50, ⌈fraction·n⌉)` points.
    pub fn tail(&self, fraction: f64) -> ControlSeries {
        let range = crate::exponents::tail_range(self.len(), fraction, 50);
        ControlSeries { points: self.points[range].to_vec(), params: self.params.clone() }
    }
}

/// Per-sample control quantities from the stored gradient splits.
///
/// Euclidean records use `dF/ds = (|∇′f|² + ∂_r f(∂_r f − lf/r))/(|∇f| r^l)`;
/// Riemannian records use `(df/ds − lf (dr/ds)/r)/r^l` with the stored
/// velocity projections.
pub fn control_series(traj: &TrajectoryRecord, params: &ControlParams) -> Result<ControlSeries, ControlError> {
    let l = params.l;
    let lf = params.l_f64();
    if !(lf > 0.0) {
        return Err(ControlError::NonPositiveL(lf));
    }
    let alpha = params.alpha;
    let points = traj
        .samples
        .iter()
        .map(|smp| {
            let r = smp.r;
            let rl = pow_l(r, l);
            let big_f = smp.f_val / rl;
            let sp = &smp.split;
            let df_ds = if traj.riemannian {
                (smp.df_ds - lf * smp.f_val * smp.dr_ds / r) / rl
            } else {
                let gn = sp.grad_norm();
                (sp.spherical_norm * sp.spherical_norm + sp.radial * (sp.radial - lf * smp.f_val / r)) / (gn * rl)
            };
            let r_alpha = r.powf(alpha);
            let g = (big_f - params.a) - r_alpha;
            let dg_ds = df_ds - alpha * r_alpha / r * smp.dr_ds;
            let (dg_dstilde, df_dstilde) = if smp.sphere_rate > 0.0 {
                (dg_ds / smp.sphere_rate, df_ds / smp.sphere_rate)
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            ControlPoint {
                s: smp.s,
                s_tilde: smp.s_tilde,
                r,
                big_f,
                df_ds,
                g,
                dg_ds,
                dg_dstilde,
                df_dstilde,
                h: g.abs(),
                label: classify_split(smp.f_val, sp, params),
            }
        })
        .collect();
    Ok(ControlSeries { points, params: params.clone() })
}
