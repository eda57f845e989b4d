use std::sync::{Arc, OnceLock};

use super::audit;
use super::ldl::{factor, Factor, Symbolic};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Scalar};

const MAX_RETRIES: usize = 5;

/// Eigenvalue counter for one sparse Hermitian operator. The symbolic
/// factorization is computed once and reused for every shift.
pub struct InertiaCounter<T: Scalar> {
    matrix: CsrMatrix<T>,
    symbolic: Symbolic,
    scale: f64,
    dense: OnceLock<Arc<Vec<f64>>>,
}

impl<T: Scalar> InertiaCounter<T> {
    pub fn new(matrix: CsrMatrix<T>) -> Self {
        let symbolic = Symbolic::analyze(&matrix);
        let scale = matrix.norm_inf().max(1.0);
        InertiaCounter {
            matrix,
            symbolic,
            scale,
            dense: OnceLock::new(),
        }
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Infinity-norm of the operator (at least 1), used for tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn threshold(&self) -> f64 {
        1e-13 * self.scale
    }

    /// Factors `A - sigma I`. On breakdown the shift is moved up by ten
    /// times the pivot threshold, growing tenfold per retry. Returns the
    /// factor and the shift actually used.
    pub fn factor_at(&self, sigma: f64) -> Result<(Factor<T>, f64)> {
        let thr = self.threshold();
        let mut s = sigma;
        let mut step = 10.0 * thr;
        for attempt in 0..=MAX_RETRIES {
            match factor(&self.symbolic, &self.matrix, -s, thr) {
                Ok(f) => return Ok((f, s)),
                Err(_) if attempt < MAX_RETRIES => {
                    s = sigma + step;
                    step *= 10.0;
                }
                Err(_) => break,
            }
        }
        Err(Error::Breakdown {
            shift: sigma,
            retries: MAX_RETRIES,
        })
    }

    /// Number of eigenvalues strictly below `sigma` (Sylvester inertia).
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        let (f, used) = self.factor_at(sigma)?;
        let c = f.negatives();
        if audit::enabled() && self.dim() <= audit::AUDIT_MAX_DIM {
            let dense = self.dense.get_or_init(|| audit::spectrum(&self.matrix));
            audit::record(dense, self.scale, used, c);
        }
        Ok(c)
    }

    /// Eigenvalues in `(alpha, beta)`.
    pub fn count_in_interval(&self, alpha: f64, beta: f64) -> Result<usize> {
        if beta <= alpha {
            return Ok(0);
        }
        Ok(self
            .count_below(beta)?
            .saturating_sub(self.count_below(alpha)?))
    }
}

/// One-shot count of eigenvalues of `a` in `(alpha, beta)`.
pub fn count_in_interval<T: Scalar>(a: &CsrMatrix<T>, alpha: f64, beta: f64) -> Result<usize> {
    InertiaCounter::new(a.clone()).count_in_interval(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circulant(n: usize, h: f64) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 / (h * h)));
            t.push((i, (i + 1) % n, -1.0 / (h * h)));
            t.push(((i + 1) % n, i, -1.0 / (h * h)));
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn circulant_counts() {
        // spectrum {0, 32, 32, 64}
        let a = circulant(4, 0.25);
        assert_eq!(count_in_interval(&a, -1.0, 1.0).unwrap(), 1);
        assert_eq!(count_in_interval(&a, 31.0, 65.0).unwrap(), 3);
    }

    #[test]
    fn shift_on_eigenvalue_is_perturbed() {
        let a = circulant(4, 0.25);
        let c = InertiaCounter::new(a);
        // exactly singular at 0: perturbed upward, so the zero mode counts
        assert_eq!(c.count_below(0.0).unwrap(), 1);
    }
}
