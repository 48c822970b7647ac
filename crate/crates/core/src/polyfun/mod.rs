//! Sparse polynomials with exact rational coefficients, and the differential
//! primitives the flow and estimators consume: gradient, radial/spherical
//! split, homogeneous decomposition and metric gradients.

mod metric;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::{dot, norm, DoubleDouble, Scalar};

pub use metric::MetricField;
pub use parse::ParseError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial dimension must be at least 1")]
    ZeroDimension,
    #[error("polynomial has a nonzero constant term; f(0) must be 0")]
    ConstantTerm,
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("radial/spherical split is undefined at the origin")]
    UndefinedSplit,
    #[error("metric is not positive definite at the queried point")]
    NotPositiveDefinite,
    #[error("metric entries are not symmetric at ({0}, {1})")]
    NonSymmetricMetric(usize, usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Exponent multi-index. Ordered graded-lexicographically: lower total
/// degree first, then larger powers of earlier variables first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Coefficients and exponents flattened for fast repeated evaluation.
#[derive(Debug, Clone, Default)]
struct Compiled {
    exps: Vec<u32>,
    coeffs: Vec<DoubleDouble>,
    max_exp: Vec<u32>,
}

/// General sparse polynomial (constant term allowed). Used directly for
/// metric entries; [`PolynomialFunction`] wraps it for the functions whose
/// trajectories are studied.
#[derive(Clone)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, BigRational>,
    compiled: Compiled,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.terms == other.terms
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[n={}]({})", self.dim, self)
    }
}

/// Powers `x_i^k` for every variable up to the largest exponent in use.
struct PowerTable<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> PowerTable<S> {
    fn new(x: &[S], max_exp: &[u32]) -> Self {
        let rows = x
            .iter()
            .zip(max_exp)
            .map(|(&xi, &m)| {
                let mut row = Vec::with_capacity(m as usize + 1);
                let mut p = S::one();
                row.push(p);
                for _ in 0..m {
                    p *= xi;
                    row.push(p);
                }
                row
            })
            .collect();
        PowerTable { rows }
    }
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial::from_terms(dim, std::iter::empty())
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        Polynomial::from_terms(dim, [(vec![0; dim], c)])
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// monomials are summed and zero coefficients dropped.
    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (exps, c) in terms {
            assert_eq!(exps.len(), dim, "monomial arity must match dimension");
            *map.entry(Monomial(exps)).or_insert_with(BigRational::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        let mut p = Polynomial { dim, terms: map, compiled: Compiled::default() };
        p.compile();
        p
    }

    /// The i-th coordinate function `x_i` (0-based).
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Polynomial::from_terms(dim, [(e, BigRational::one())])
    }

    fn compile(&mut self) {
        let mut c = Compiled { max_exp: vec![0; self.dim], ..Default::default() };
        for (m, coef) in &self.terms {
            for (i, &e) in m.0.iter().enumerate() {
                c.max_exp[i] = c.max_exp[i].max(e);
            }
            c.exps.extend_from_slice(&m.0);
            c.coeffs.push(DoubleDouble::from_rational(coef));
        }
        self.compiled = c;
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> BigRational {
        self.terms
            .get(&Monomial(vec![0; self.dim]))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.min_degree() == self.total_degree()
    }

    fn check_dim(&self, got: usize) -> Result<(), PolyError> {
        if got != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }

    fn eval_with<S: Scalar>(&self, powers: &PowerTable<S>) -> S {
        let n = self.dim;
        let mut acc = S::zero();
        for (k, &c) in self.compiled.coeffs.iter().enumerate() {
            let exps = &self.compiled.exps[k * n..(k + 1) * n];
            let mut term = S::from_dd(c);
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term *= powers.rows[i][e as usize];
                }
            }
            acc += term;
        }
        acc
    }

    pub fn evaluate<S: Scalar>(&self, x: &[S]) -> Result<S, PolyError> {
        self.check_dim(x.len())?;
        let table = PowerTable::new(x, &self.compiled.max_exp);
        Ok(self.eval_with(&table))
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, x: &[BigRational]) -> Result<BigRational, PolyError> {
        self.check_dim(x.len())?;
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let terms = self.terms.iter().filter_map(|(m, c)| {
            let e = m.0[var];
            if e == 0 {
                return None;
            }
            let mut exps = m.0.clone();
            exps[var] -= 1;
            Some((exps, c * BigRational::from_integer(BigInt::from(e))))
        });
        Polynomial::from_terms(self.dim, terms)
    }

    /// Sum of the terms of exactly the given total degree.
    pub fn homogeneous_part(&self, degree: u32) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() == degree)
            .map(|(m, c)| (m.0.clone(), c.clone()));
        Polynomial::from_terms(self.dim, terms)
    }

    pub fn scale(&self, k: &BigRational) -> Polynomial {
        let terms = self.terms.iter().map(|(m, c)| (m.0.clone(), c * k));
        Polynomial::from_terms(self.dim, terms)
    }

    pub fn parse(text: &str) -> Result<Polynomial, PolyError> {
        Ok(parse::parse(text, None)?)
    }

    pub fn parse_with_dimension(text: &str, dim: usize) -> Result<Polynomial, PolyError> {
        Ok(parse::parse(text, Some(dim))?)
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim);
        let terms = self
            .terms
            .iter()
            .chain(rhs.terms.iter())
            .map(|(m, c)| (m.0.clone(), c.clone()));
        Polynomial::from_terms(self.dim, terms)
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let exps = ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect();
                terms.push((exps, ca * cb));
            }
        }
        Polynomial::from_terms(self.dim, terms)
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, q: &BigRational) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// Serializes as `c*x1^a1*...*xn^an` terms in graded-lex order with exact
/// rational coefficients, e.g. `-1/2*x1^2 - 1*x2^2`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            match (k, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write_rational(f, &mag)?;
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

/// Radial/spherical decomposition of the gradient at a point `x != 0`:
/// `grad = radial * x/r + spherical` with `<spherical, x> = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSplit<S> {
    pub grad: Vec<S>,
    pub radial: S,
    pub spherical: Vec<S>,
    pub spherical_norm: S,
    pub r: S,
}

impl<S: Scalar> GradientSplit<S> {
    /// Splits a given vector `grad` at `x`.
    pub fn from_gradient(x: &[S], grad: Vec<S>) -> Result<Self, PolyError> {
        if x.len() != grad.len() {
            return Err(PolyError::DimensionMismatch { expected: x.len(), got: grad.len() });
        }
        let r = norm(x);
        if r == S::zero() {
            return Err(PolyError::UndefinedSplit);
        }
        let radial = dot(&grad, x) / r;
        let spherical: Vec<S> = grad
            .iter()
            .zip(x)
            .map(|(&g, &xi)| g - radial * xi / r)
            .collect();
        // Lagrange identity: r^2|g|^2 - <g,x>^2 = sum_{i<j} (x_i g_j - x_j g_i)^2,
        // which avoids subtracting nearly equal vectors when g is almost radial.
        let mut acc = S::zero();
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let w = x[i] * grad[j] - x[j] * grad[i];
                acc += w * w;
            }
        }
        let spherical_norm = acc.sqrt() / r;
        Ok(GradientSplit { grad, radial, spherical, spherical_norm, r })
    }

    pub fn grad_norm(&self) -> S {
        norm(&self.grad)
    }

    pub fn to_f64(&self) -> GradientSplit<f64> {
        GradientSplit {
            grad: self.grad.iter().map(|v| v.to_f64()).collect(),
            radial: self.radial.to_f64(),
            spherical: self.spherical.iter().map(|v| v.to_f64()).collect(),
            spherical_norm: self.spherical_norm.to_f64(),
            r: self.r.to_f64(),
        }
    }
}

/// The function whose gradient trajectories are studied: a polynomial with
/// exact rational coefficients, dimension >= 1 and `f(0) = 0`.
#[derive(Clone, PartialEq)]
pub struct PolynomialFunction {
    poly: Polynomial,
    grad: Vec<Polynomial>,
}

impl fmt::Debug for PolynomialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolynomialFunction[n={}]({})", self.poly.dim, self.poly)
    }
}

impl fmt::Display for PolynomialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.poly.fmt(f)
    }
}

impl PolynomialFunction {
    pub fn new(poly: Polynomial) -> Result<Self, PolyError> {
        if poly.dim == 0 {
            return Err(PolyError::ZeroDimension);
        }
        if !poly.constant_term().is_zero() {
            return Err(PolyError::ConstantTerm);
        }
        let grad = (0..poly.dim).map(|i| poly.derivative(i)).collect();
        Ok(PolynomialFunction { poly, grad })
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        if dim == 0 {
            return Err(PolyError::ZeroDimension);
        }
        PolynomialFunction::new(Polynomial::from_terms(dim, terms))
    }

    pub fn parse(text: &str) -> Result<Self, PolyError> {
        PolynomialFunction::new(Polynomial::parse(text)?)
    }

    pub fn parse_with_dimension(text: &str, dim: usize) -> Result<Self, PolyError> {
        PolynomialFunction::new(Polynomial::parse_with_dimension(text, dim)?)
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn dimension(&self) -> usize {
        self.poly.dim
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn gradient_polynomials(&self) -> &[Polynomial] {
        &self.grad
    }

    pub fn evaluate<S: Scalar>(&self, x: &[S]) -> Result<S, PolyError> {
        self.poly.evaluate(x)
    }

    pub fn evaluate_exact(&self, x: &[BigRational]) -> Result<BigRational, PolyError> {
        self.poly.evaluate_exact(x)
    }

    pub fn gradient<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>, PolyError> {
        Ok(self.value_and_gradient(x)?.1)
    }

    /// `f(x)` and `∇f(x)` sharing one power table.
    pub fn value_and_gradient<S: Scalar>(&self, x: &[S]) -> Result<(S, Vec<S>), PolyError> {
        self.poly.check_dim(x.len())?;
        let table = PowerTable::new(x, &self.poly.compiled.max_exp);
        let value = self.poly.eval_with(&table);
        let grad = self.grad.iter().map(|g| g.eval_with(&table)).collect();
        Ok((value, grad))
    }

    pub fn gradient_split<S: Scalar>(&self, x: &[S]) -> Result<GradientSplit<S>, PolyError> {
        let grad = self.gradient(x)?;
        GradientSplit::from_gradient(x, grad)
    }

    /// Order of vanishing at the origin: the minimal total degree of a term.
    pub fn multiplicity(&self) -> Result<u32, PolyError> {
        self.poly.min_degree().ok_or(PolyError::ZeroPolynomial)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.poly.total_degree()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.poly.is_homogeneous()
    }

    /// Decomposition `f = sum_m f_m` into homogeneous forms, by increasing degree.
    pub fn homogeneous_components(&self) -> Vec<(u32, PolynomialFunction)> {
        let mut degrees: Vec<u32> = self.poly.terms.keys().map(Monomial::degree).collect();
        degrees.dedup();
        degrees
            .into_iter()
            .map(|d| {
                let part = self.poly.homogeneous_part(d);
                let func = PolynomialFunction::new(part)
                    .expect("homogeneous part of positive degree has no constant term");
                (d, func)
            })
            .collect()
    }

    /// Gradient with respect to the metric `G`: the solution of `G(x) v = ∇f(x)`.
    pub fn metric_gradient<S: Scalar>(
        &self,
        metric: &MetricField,
        x: &[S],
    ) -> Result<Vec<S>, PolyError> {
        if metric.dimension() != self.dimension() {
            return Err(PolyError::DimensionMismatch {
                expected: self.dimension(),
                got: metric.dimension(),
            });
        }
        let grad = self.gradient(x)?;
        metric.solve(x, &grad)
    }
}

/// Convenience constructor for tests and scenario tables.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
