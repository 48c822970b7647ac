//! Dormand–Prince 5(4) embedded pair with a PI step-size controller.
//!
//! Tableau entries are exact rationals converted into the working
//! precision, so the order conditions hold to double-double accuracy.

use crate::scalar::{DoubleDouble, Scalar};

const C: [(i64, i64); 7] = [(0, 1), (1, 5), (3, 10), (4, 5), (8, 9), (1, 1), (1, 1)];

const A: [[(i64, i64); 6]; 7] = [
    [(0, 1); 6],
    [(1, 5), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
    [(3, 40), (9, 40), (0, 1), (0, 1), (0, 1), (0, 1)],
    [(44, 45), (-56, 15), (32, 9), (0, 1), (0, 1), (0, 1)],
    [(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729), (0, 1), (0, 1)],
    [(9017, 3168), (-355, 33), (46732, 5247), (49, 176), (-5103, 18656), (0, 1)],
    [(35, 384), (0, 1), (500, 1113), (125, 192), (-2187, 6784), (11, 84)],
];

/// Fifth-order weights minus fourth-order weights.
const E: [(i64, i64); 7] = [
    (71, 57600),
    (0, 1),
    (-71, 16695),
    (71, 1920),
    (-17253, 339200),
    (22, 525),
    (-1, 40),
];

fn ratio<S: Scalar>((p, q): (i64, i64)) -> S {
    S::from_dd(DoubleDouble::from_f64(p as f64) / DoubleDouble::from_f64(q as f64))
}

#[derive(Debug, Clone)]
pub struct Dopri5<S> {
    a: [[S; 6]; 7],
    e: [S; 7],
    c: [S; 7],
}

/// Result of one trial step. `k_end` is the field at `y_new` (first-same-as-last).
#[derive(Debug, Clone)]
pub struct StepAttempt<S> {
    pub y_new: Vec<S>,
    pub k_end: Vec<S>,
    /// Scaled max-norm of the embedded error estimate; accept when `<= 1`.
    pub err: f64,
}

impl<S: Scalar> Default for Dopri5<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Dopri5<S> {
    pub fn new() -> Self {
        let a = A.map(|row| row.map(ratio::<S>));
        Dopri5 { a, e: E.map(ratio::<S>), c: C.map(ratio::<S>) }
    }

    pub fn node(&self, i: usize) -> S {
        self.c[i]
    }

    /// One trial step of size `h` from `y` with `k1 = field(y)`.
    ///
    /// `scale(i, y_i, y_new_i)` gives the error weight of component `i`.
    pub fn attempt<F, G, E>(
        &self,
        y: &[S],
        k1: &[S],
        h: S,
        field: &mut F,
        scale: G,
    ) -> Result<StepAttempt<S>, E>
    where
        F: FnMut(&[S]) -> Result<Vec<S>, E>,
        G: Fn(usize, S, S) -> f64,
    {
        let n = y.len();
        let mut ks: Vec<Vec<S>> = Vec::with_capacity(7);
        ks.push(k1.to_vec());
        let mut stage = vec![S::zero(); n];
        for i in 1..7 {
            for (j, st) in stage.iter_mut().enumerate() {
                let mut acc = S::zero();
                for (m, k) in ks.iter().enumerate() {
                    acc += self.a[i][m] * k[j];
                }
                *st = y[j] + h * acc;
            }
            ks.push(field(&stage)?);
        }
        // Row 7 of A holds the fifth-order weights, so the last stage point is y_new.
        let y_new = stage;
        let mut err = 0.0f64;
        for j in 0..n {
            let mut acc = S::zero();
            for (m, k) in ks.iter().enumerate() {
                acc += self.e[m] * k[j];
            }
            let e = (h * acc).abs().to_f64() / scale(j, y[j], y_new[j]);
            err = if e.is_nan() { f64::NAN } else { err.max(e) };
        }
        let k_end = ks.pop().expect("seven stages");
        Ok(StepAttempt { y_new, k_end, err })
    }
}

/// PI controller: `h_new = h * safety * err^-alpha * err_prev^beta`, clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub alpha: f64,
    pub beta: f64,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
    err_prev: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        let beta = 0.04;
        StepControl {
            alpha: 0.2 - 0.75 * beta,
            beta,
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 5.0,
            err_prev: 1e-4,
        }
    }
}

impl StepControl {
    /// Factor for the next step after an accepted step with error `err`.
    pub fn accept(&mut self, err: f64) -> f64 {
        let err = err.max(1e-10);
        let fac = self.safety * err.powf(-self.alpha) * self.err_prev.powf(self.beta);
        self.err_prev = err;
        fac.clamp(self.min_factor, self.max_factor)
    }

    /// Shrink factor after a rejected step.
    pub fn reject(&self, err: f64) -> f64 {
        if !err.is_finite() {
            return self.min_factor;
        }
        (self.safety * err.powf(-self.alpha)).clamp(self.min_factor, 1.0)
    }
}
