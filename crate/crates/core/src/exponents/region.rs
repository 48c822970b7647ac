//! Membership of points in the sets used by the control argument.
//!
//! Comparisons use a relative tie tolerance of 1e-12: ties count as
//! satisfied for `≤` and as failed for `<`.

use serde::{Deserialize, Serialize};

use crate::polyfun::{GradientSplit, PolyError, PolynomialFunction};

use super::params::ControlParams;
use super::rational::to_f64;

const TIE: f64 = 1e-12;

fn le(a: f64, b: f64) -> bool {
    a <= b + TIE * a.abs().max(b.abs())
}

fn lt(a: f64, b: f64) -> bool {
    a < b - TIE * a.abs().max(b.abs())
}

/// Most specific first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    WMinusOmega,
    WMinusEta,
    WEpsL,
    WEpsLower,
    WEps,
    ULDelta,
    UL,
    DLambda,
    Outside,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::WMinusOmega => "W_-omega_l",
            Region::WMinusEta => "W_-eta_l",
            Region::WEpsL => "W_eps_l",
            Region::WEpsLower => "W_eps_lower",
            Region::WEps => "W_eps",
            Region::ULDelta => "U_l_delta",
            Region::UL => "U_l",
            Region::DLambda => "D_lambda",
            Region::Outside => "outside",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Memberships {
    pub w_eps: bool,
    pub w_eps_l: bool,
    /// `W^ε_{l_i}` for some listed `l_i < l`.
    pub w_eps_lower: bool,
    pub w_minus_eta: bool,
    pub w_minus_omega: bool,
    pub u_l: bool,
    pub u_l_delta: bool,
    pub d_lambda: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub primary: Region,
    pub member: Memberships,
}

impl RegionLabel {
    pub fn contains(&self, region: Region) -> bool {
        let m = &self.member;
        match region {
            Region::WMinusOmega => m.w_minus_omega,
            Region::WMinusEta => m.w_minus_eta,
            Region::WEpsL => m.w_eps_l,
            Region::WEpsLower => m.w_eps_lower,
            Region::WEps => m.w_eps,
            Region::ULDelta => m.u_l_delta,
            Region::UL => m.u_l,
            Region::DLambda => m.d_lambda,
            Region::Outside => self.primary == Region::Outside,
        }
    }

    pub fn all(&self) -> Vec<Region> {
        ALL.iter().copied().filter(|&r| r != Region::Outside && self.contains(r)).collect()
    }

    /// Where `F = f/r^l` is allowed to decrease: `W_{−ω,l}` or a lower-exponent `W^ε`.
    pub fn permits_f_decrease(&self) -> bool {
        self.member.w_minus_omega || self.member.w_eps_lower
    }
}

const ALL: [Region; 9] = [
    Region::WMinusOmega,
    Region::WMinusEta,
    Region::WEpsL,
    Region::WEpsLower,
    Region::WEps,
    Region::ULDelta,
    Region::UL,
    Region::DLambda,
    Region::Outside,
];

/// Labels a point from its value and gradient split.
pub fn classify_split(f_val: f64, split: &GradientSplit<f64>, p: &ControlParams) -> RegionLabel {
    let r = split.r;
    let radial = split.radial.abs();
    let sph = split.spherical_norm;
    let l = p.l_f64();
    let mut m = Memberships { w_eps: f_val != 0.0 && le(p.eps * sph, radial), ..Default::default() };
    if m.w_eps {
        let q = r * split.radial / f_val;
        let width = r.powf(p.w_delta);
        m.w_eps_l = le((q - l).abs(), width);
        m.w_eps_lower = p
            .lower_exponents
            .iter()
            .map(|&li| to_f64(li))
            .any(|li| li < l && le((q - li).abs(), width));
    }
    m.w_minus_omega = m.w_eps_l && le(r.powf(-p.omega) * sph, radial);
    m.w_minus_eta = m.w_eps_l && le(r.powf(-p.eta) * sph, radial);
    let ratio = f_val / r.powf(l);
    m.u_l = lt(p.u_band[0], ratio.abs()) && lt(ratio.abs(), p.u_band[1]);
    m.u_l_delta = le(-r.powf(-p.delta), ratio) && le(ratio, -r.powf(p.delta));
    m.d_lambda = lt(split.grad_norm(), r.powf(p.lambda));
    let label = RegionLabel { primary: Region::Outside, member: m };
    let primary = ALL.iter().copied().find(|&reg| reg != Region::Outside && label.contains(reg));
    RegionLabel { primary: primary.unwrap_or(Region::Outside), member: m }
}

pub fn classify_region(f: &PolynomialFunction, x: &[f64], params: &ControlParams) -> Result<RegionLabel, PolyError> {
    let split = f.gradient_split(x)?;
    let v = f.evaluate(x)?;
    Ok(classify_split(v, &split, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn quad2() -> PolynomialFunction {
        PolynomialFunction::parse("-1/2*x1^2 - 1*x2^2").unwrap()
    }

    fn params() -> ControlParams {
        ControlParams::new(Rational64::from_integer(2), -0.5)
    }

    #[test]
    fn axis_points_are_most_specific() {
        let mut p = params();
        for omega in [0.2, 1.0, 5.0] {
            p.set_omega(omega);
            let lab = classify_region(&quad2(), &[0.01, 0.0], &p).unwrap();
            assert_eq!(lab.primary, Region::WMinusOmega);
            assert!(lab.member.w_eps && lab.member.w_eps_l && lab.member.w_minus_eta);
        }
    }

    #[test]
    fn tie_in_w_eps_is_included() {
        // |∂_r f| = 3/√2 and ε|∇′f| = 3·√0.5: equal
        let mut p = params();
        p.eps = 3.0;
        let lab = classify_region(&quad2(), &[1.0, 1.0], &p).unwrap();
        assert!(lab.member.w_eps);
        p.eps = 3.0 * (1.0 + 1e-9);
        let lab = classify_region(&quad2(), &[1.0, 1.0], &p).unwrap();
        assert!(!lab.member.w_eps);
    }

    #[test]
    fn d_lambda_is_strict() {
        let mut p = params();
        p.lambda = 0.0;
        let lab = classify_region(&quad2(), &[1.0, 0.0], &p).unwrap();
        assert!(!lab.member.d_lambda);
        let lab = classify_region(&quad2(), &[0.5, 0.0], &p).unwrap();
        assert!(lab.member.d_lambda);
    }

    #[test]
    fn u_bands() {
        let mut p = params();
        p.u_band = [0.1, 1.0];
        let lab = classify_region(&quad2(), &[0.01, 0.0], &p).unwrap();
        assert!(lab.member.u_l);
        // F = -1/2 enters [-r^-δ, -r^δ] once r^δ <= 1/2
        assert!(!lab.member.u_l_delta);
        let lab = classify_region(&quad2(), &[1e-8, 0.0], &p).unwrap();
        assert!(lab.member.u_l_delta);
        p.u_band = [0.5, 1.0];
        let lab = classify_region(&quad2(), &[1e-8, 0.0], &p).unwrap();
        assert!(!lab.member.u_l, "strict lower bound");
        assert!(lab.all().contains(&Region::ULDelta));
    }

    #[test]
    fn lower_exponent_membership() {
        // f = -x² - y⁴: on the y-axis r∂_r f/f = 4, on the x-axis 2
        let f = PolynomialFunction::parse("-1*x1^2 - 1*x2^4").unwrap();
        let mut p = ControlParams::new(Rational64::from_integer(4), 0.0);
        p.lower_exponents = vec![Rational64::from_integer(2)];
        let lab = classify_region(&f, &[0.01, 0.0], &p).unwrap();
        assert!(lab.member.w_eps_lower && !lab.member.w_eps_l);
        assert!(lab.permits_f_decrease());
        let lab = classify_region(&f, &[0.0, 0.01], &p).unwrap();
        assert!(lab.member.w_eps_l && !lab.member.w_eps_lower);
    }

    #[test]
    fn zero_value_is_outside_w_eps() {
        let f = PolynomialFunction::parse("x1*x2").unwrap();
        let lab = classify_region(&f, &[0.0, 0.5], &params()).unwrap();
        assert!(!lab.member.w_eps);
    }
}
