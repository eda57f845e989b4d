//! Shift-invert Lanczos with full reorthogonalization and explicit
//! deflation against already converged eigenvectors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ldl::Factor;
use crate::sparse::{axpy, dot, norm, CsrMatrix, Scalar};

pub(crate) struct RitzPair<T> {
    pub value: f64,
    pub vector: Vec<T>,
    pub residual: f64,
}

fn orthogonalize<T: Scalar>(v: &mut [T], basis: &[Vec<T>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
}

/// One Lanczos run of at most `steps` iterations on `(A - sigma)^{-1}`,
/// deflated against `locked`. Returns Ritz pairs of `A` whose values fall
/// in `[lo, hi]`, with true residuals.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lanczos_pass<T: Scalar>(
    a: &CsrMatrix<T>,
    fac: &Factor<T>,
    sigma: f64,
    locked: &[Vec<T>],
    steps: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Vec<RitzPair<T>> {
    let n = a.dim();
    let steps = steps.min(n.saturating_sub(locked.len())).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..n).map(|_| T::sample(&mut rng)).collect();
    orthogonalize(&mut v, locked);
    let nv = norm(&v);
    if nv == 0.0 {
        return Vec::new();
    }
    v.iter_mut().for_each(|x| *x = x.scale(1.0 / nv));

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    basis.push(v);
    loop {
        let j = basis.len() - 1;
        let mut w = fac.solve(&basis[j]);
        orthogonalize(&mut w, locked);
        let aj = dot(&basis[j], &w).re();
        alpha.push(aj);
        orthogonalize(&mut w, &basis);
        let bj = norm(&w);
        if basis.len() >= steps || bj <= 1e-12 * aj.abs().max(1e-300) {
            break;
        }
        beta.push(bj);
        w.iter_mut().for_each(|x| *x = x.scale(1.0 / bj));
        basis.push(w);
    }

    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut out = Vec::new();
    for (c, &theta) in eig.eigenvalues.iter().enumerate() {
        if theta.abs() < 1e-300 {
            continue;
        }
        let approx = sigma + 1.0 / theta;
        // generous prefilter; the Rayleigh quotient decides
        let slack = 1e-6 * (hi - lo).max(1e-12);
        if approx < lo - slack || approx > hi + slack {
            continue;
        }
        let mut y = vec![T::zero(); n];
        for (i, b) in basis.iter().enumerate() {
            axpy(T::from_real(eig.eigenvectors[(i, c)]), b, &mut y);
        }
        let ny = norm(&y);
        y.iter_mut().for_each(|x| *x = x.scale(1.0 / ny));
        let ay = a.matvec(&y);
        let value = dot(&y, &ay).re();
        let mut r = ay;
        axpy(T::from_real(-value), &y, &mut r);
        out.push(RitzPair {
            value,
            vector: y,
            residual: norm(&r),
        });
    }
    out
}
