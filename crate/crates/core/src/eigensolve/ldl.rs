//! Sparse up-looking `L D L^H` factorization without pivoting.
//!
//! The symbolic phase (fill-reducing ordering, elimination tree, column
//! counts) depends only on the pattern and is shared by every shift of the
//! same operator.

use super::amd::amd_order;
use crate::sparse::{CsrMatrix, Scalar};

#[derive(Clone, Debug)]
pub struct Symbolic {
    n: usize,
    /// `perm[k]` = original index at position k
    perm: Vec<usize>,
    inv: Vec<usize>,
    parent: Vec<usize>,
    colptr: Vec<usize>,
    /// lower part of the permuted matrix, row by row: (column, source slot)
    rows: Vec<Vec<(usize, usize)>>,
}

const NONE: usize = usize::MAX;

impl Symbolic {
    pub fn analyze<T: Scalar>(a: &CsrMatrix<T>) -> Self {
        let n = a.dim();
        let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).map(|(j, _)| j).collect()).collect();
        let perm = amd_order(&adj);
        Self::with_order(a, perm)
    }

    pub fn with_order<T: Scalar>(a: &CsrMatrix<T>, perm: Vec<usize>) -> Self {
        let n = a.dim();
        let mut inv = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        // row k of the permuted matrix, entries with column <= k
        let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let indptr = a.indptr();
        let indices = a.indices();
        for i in 0..n {
            let k = inv[i];
            for slot in indptr[i]..indptr[i + 1] {
                let c = inv[indices[slot]];
                if c <= k {
                    rows[k].push((c, slot));
                }
            }
            rows[k].sort_unstable_by_key(|e| e.0);
        }
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &(c, _) in &rows[k] {
                let mut i = c;
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut colptr = vec![0usize; n + 1];
        for k in 0..n {
            colptr[k + 1] = colptr[k] + lnz[k];
        }
        Symbolic {
            n,
            perm,
            inv,
            parent,
            colptr,
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of strictly-lower nonzeros in `L`.
    pub fn fill(&self) -> usize {
        self.colptr[self.n]
    }
}

#[derive(Clone, Debug)]
pub struct Factor<T> {
    pub d: Vec<f64>,
    li: Vec<usize>,
    lx: Vec<T>,
    colptr: Vec<usize>,
    perm: Vec<usize>,
    inv: Vec<usize>,
}

/// Pivot below `threshold` in absolute value at elimination step `step`.
#[derive(Clone, Copy, Debug)]
pub struct TinyPivot {
    pub step: usize,
    pub value: f64,
}

/// Factors `A + shift I` (shift applied to the diagonal on the fly).
pub fn factor<T: Scalar>(
    sym: &Symbolic,
    a: &CsrMatrix<T>,
    shift: f64,
    threshold: f64,
) -> Result<Factor<T>, TinyPivot> {
    let n = sym.n;
    let data = a.data();
    let mut y = vec![T::zero(); n];
    let mut flag = vec![NONE; n];
    let mut pattern = vec![0usize; n];
    let mut lnz = vec![0usize; n];
    let mut li = vec![0usize; sym.fill()];
    let mut lx = vec![T::zero(); sym.fill()];
    let mut d = vec![0.0f64; n];
    for k in 0..n {
        flag[k] = k;
        let mut top = n;
        for &(c, slot) in &sym.rows[k] {
            // entry A(k, c) of the permuted matrix; column k above the
            // diagonal holds its conjugate
            let v = data[slot].conj();
            y[c] += v;
            let mut len = 0;
            let mut i = c;
            while flag[i] != k {
                pattern[len] = i;
                len += 1;
                flag[i] = k;
                i = sym.parent[i];
            }
            while len > 0 {
                top -= 1;
                len -= 1;
                pattern[top] = pattern[len];
            }
        }
        let mut dk = y[k].re() + shift;
        y[k] = T::zero();
        for &i in &pattern[top..n] {
            let yi = y[i];
            y[i] = T::zero();
            let start = sym.colptr[i];
            let end = start + lnz[i];
            for p in start..end {
                let r = li[p];
                y[r] -= lx[p] * yi;
            }
            let lki = (yi.scale(1.0 / d[i])).conj();
            dk -= (lki * yi).re();
            li[end] = k;
            lx[end] = lki;
            lnz[i] += 1;
        }
        if !(dk.abs() >= threshold) {
            return Err(TinyPivot { step: k, value: dk });
        }
        d[k] = dk;
    }
    Ok(Factor {
        d,
        li,
        lx,
        colptr: sym.colptr.clone(),
        perm: sym.perm.clone(),
        inv: sym.inv.clone(),
    })
}

impl<T: Scalar> Factor<T> {
    /// Number of negative pivots, i.e. eigenvalues of `A + shift I` below 0.
    pub fn negatives(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    /// Solves `(A + shift I) x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.d.len();
        let mut x: Vec<T> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.colptr[j]..self.colptr[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] = x[j].scale(1.0 / self.d[j]);
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in self.colptr[j]..self.colptr[j + 1] {
                acc -= self.lx[p].conj() * x[self.li[p]];
            }
            x[j] = acc;
        }
        let mut out = vec![T::zero(); n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = x[self.inv[i]];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_real_system() {
        let a = CsrMatrix::from_dense_rows(&[
            vec![4.0, -1.0, 0.0, -1.0],
            vec![-1.0, 4.0, -1.0, 0.0],
            vec![0.0, -1.0, 4.0, -1.0],
            vec![-1.0, 0.0, -1.0, 4.0],
        ]);
        let sym = Symbolic::analyze(&a);
        let f = factor(&sym, &a, -1.0, 1e-14).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = f.solve(&b);
        let shifted = a.shifted(-1.0);
        let r = shifted.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn solves_hermitian_system_and_counts() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = CsrMatrix::from_dense_rows(&[
            vec![2.0 * one, -one * i, 0.0 * one, -one],
            vec![one * i, 2.0 * one, -one, 0.0 * one],
            vec![0.0 * one, -one, 2.0 * one, (0.5 * one + i)],
            vec![-one, 0.0 * one, (0.5 * one - i), 3.0 * one],
        ]);
        assert!(a.is_hermitian());
        let sym = Symbolic::analyze(&a);
        let evs = crate::sparse::dense_eigenvalues(&a);
        for shift in [-0.5, 1.1, 2.3, 4.2] {
            let f = factor(&sym, &a, -shift, 1e-14).unwrap();
            assert_eq!(f.negatives(), evs.iter().filter(|&&e| e < shift).count());
            let b = vec![one, i, -one, 2.0 * one];
            let x = f.solve(&b);
            let r = a.shifted(-shift).matvec(&x);
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = CsrMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let sym = Symbolic::analyze(&a);
        assert!(factor(&sym, &a, -1.0, 1e-12).is_err());
    }
}
