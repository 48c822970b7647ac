use num_rational::BigRational;
use num_traits::One;

use super::{PolyError, Polynomial};
use crate::scalar::Scalar;

/// Symmetric matrix field `G(x)` with polynomial entries. Positive
/// definiteness is checked lazily, at each point where it is factored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    dim: usize,
    /// Row-major, `entries[i * dim + j]`.
    entries: Vec<Polynomial>,
}

impl MetricField {
    pub fn from_entries(dim: usize, entries: Vec<Polynomial>) -> Result<Self, PolyError> {
        if dim == 0 {
            return Err(PolyError::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(PolyError::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        for e in &entries {
            if e.dimension() != dim {
                return Err(PolyError::DimensionMismatch { expected: dim, got: e.dimension() });
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(PolyError::NonSymmetricMetric(i, j));
                }
            }
        }
        Ok(MetricField { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        MetricField::scaled_identity(dim, BigRational::one())
    }

    pub fn scaled_identity(dim: usize, c: BigRational) -> Self {
        MetricField::diagonal(vec![c; dim])
    }

    pub fn diagonal(diag: Vec<BigRational>) -> Self {
        let dim = diag.len();
        MetricField::conformal_diagonal(
            diag.into_iter().map(|c| Polynomial::constant(dim, c)).collect(),
        )
    }

    /// `G(x) = factor(x) * I`.
    pub fn conformal(factor: Polynomial) -> Self {
        let dim = factor.dimension();
        MetricField::conformal_diagonal(vec![factor; dim])
    }

    fn conformal_diagonal(diag: Vec<Polynomial>) -> Self {
        let dim = diag.len();
        let mut entries = vec![Polynomial::zero(dim); dim * dim];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * dim + i] = d;
        }
        MetricField { dim, entries }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i * self.dim + j]
    }

    pub fn is_identity(&self) -> bool {
        (0..self.dim).all(|i| {
            (0..self.dim).all(|j| {
                let e = self.entry(i, j);
                if i == j {
                    e.term_count() == 1 && e.constant_term().is_one()
                } else {
                    e.is_zero()
                }
            })
        })
    }

    pub fn matrix<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>, PolyError> {
        self.entries.iter().map(|e| e.evaluate(x)).collect()
    }

    /// Solves `G(x) v = rhs` by Cholesky factorization.
    pub fn solve<S: Scalar>(&self, x: &[S], rhs: &[S]) -> Result<Vec<S>, PolyError> {
        if rhs.len() != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got: rhs.len() });
        }
        let a = self.matrix(x)?;
        let l = cholesky(&a, self.dim)?;
        Ok(cholesky_solve(&l, self.dim, rhs))
    }
}

/// Lower-triangular factor `L` with `A = L L^T`, row-major.
pub(crate) fn cholesky<S: Scalar>(a: &[S], n: usize) -> Result<Vec<S>, PolyError> {
    let mut l = vec![S::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > S::zero()) || !d.is_finite() {
            return Err(PolyError::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

pub(crate) fn cholesky_solve<S: Scalar>(l: &[S], n: usize, b: &[S]) -> Vec<S> {
    let mut y = vec![S::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut v = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * v[k];
        }
        v[i] = s / l[i * n + i];
    }
    v
}
