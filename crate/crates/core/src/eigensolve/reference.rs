//! Full spectra by orthogonal reduction, used as the independent oracle of
//! the audit.
//!
//! The matrix is reordered by reverse Cuthill–McKee. When the resulting
//! band is narrow, the band is reduced to tridiagonal form by Givens
//! rotations with bulge chasing and the tridiagonal spectrum is computed by
//! implicit QL. Wide bands go to the dense Householder solver. Neither path
//! shares anything with the `LDLᵀ` factorization whose counts it checks.

use std::collections::VecDeque;

use crate::sparse::{dense_eigenvalues, CsrMatrix, Scalar};

/// Reverse Cuthill–McKee ordering: `order[k]` is the node placed at `k`.
pub fn rcm_order<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.dim();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            a.row(i)
                .filter(|&(j, v)| j != i && v.abs2() > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| -> usize {
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        let mut last = start;
        while let Some(u) = q.pop_front() {
            out.push(u);
            last = u;
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nb.sort_by_key(|&v| (deg[v], v));
            for v in nb {
                visited[v] = true;
                q.push_back(v);
            }
        }
        last
    };
    while let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (deg[i], i)) {
        // two sweeps towards a pseudo-peripheral start
        let mut start = seed;
        for _ in 0..2 {
            let mut scratch = visited.clone();
            let mut tmp = Vec::new();
            start = bfs(start, &mut scratch, &mut tmp);
        }
        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

fn bandwidth<T: Scalar>(a: &CsrMatrix<T>, pos: &[usize]) -> usize {
    (0..a.dim())
        .flat_map(|i| {
            a.row(i)
                .filter(|(_, v)| v.abs2() > 0.0)
                .map(move |(j, _)| (i, j))
        })
        .map(|(i, j)| pos[i].abs_diff(pos[j]))
        .max()
        .unwrap_or(0)
}

/// Eigenvalues of a symmetric tridiagonal matrix (diagonal `d`, off-diagonal
/// `e`), sorted ascending. Implicit QL in the root-free Pal–Walker–Kahan
/// form, which works on the squared off-diagonal.
pub fn tridiagonal_ql(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e2: Vec<f64> = e
        .iter()
        .map(|x| x * x)
        .chain(std::iter::repeat(0.0))
        .take(n)
        .collect();
    let eps2 = f64::EPSILON * f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e2[m] <= eps2 * dd * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 100, "QL iteration did not converge");
            let rte = e2[l].sqrt();
            let mut sigma = (d[l + 1] - d[l]) / (2.0 * rte);
            let r = (sigma * sigma + 1.0).sqrt();
            sigma = d[l] - rte / (sigma + r.copysign(sigma));
            let (mut c, mut s) = (1.0f64, 0.0f64);
            let mut gamma = d[m] - sigma;
            let mut p = gamma * gamma;
            for i in (l..m).rev() {
                let bb = e2[i];
                let r = p + bb;
                if i + 1 != m {
                    e2[i + 1] = s * r;
                }
                let oldc = c;
                c = p / r;
                s = bb / r;
                let oldgam = gamma;
                let alpha = d[i];
                gamma = c * (alpha - sigma) - s * oldgam;
                d[i + 1] = oldgam + (alpha - gamma);
                p = if c != 0.0 {
                    gamma * gamma / c
                } else {
                    oldc * bb
                };
            }
            e2[l] = s * p;
            d[l] = sigma + gamma;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

/// Hermitian matrix with bandwidth `b`, stored by rows over the diagonals
/// `−w..=w` with `w = b + 2` so that rotations have room for their bulge.
struct Banded<T> {
    n: usize,
    b: usize,
    w: usize,
    a: Vec<T>,
}

impl<T: Scalar> Banded<T> {
    fn new(n: usize, b: usize) -> Self {
        let w = b + 2;
        Self {
            n,
            b,
            w,
            a: vec![T::zero(); n * (2 * w + 1)],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.w + 1) + j + self.w - i
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.a[self.idx(i, j)]
    }

    /// Rotation in the plane `(r − 1, r)` zeroing entry `(r, c)`; returns
    /// false when it is already zero.
    fn rotate(&mut self, r: usize, c: usize) -> bool {
        let (p, q) = (r - 1, r);
        let (x, y) = (self.at(p, c), self.at(q, c));
        if y.abs2() == 0.0 {
            return false;
        }
        let (x2, y2) = (x.abs2(), y.abs2());
        let rho = (x2 + y2).sqrt();
        let (cs, sn) = if x2 == 0.0 {
            (0.0, T::one())
        } else {
            let ax = x2.sqrt();
            (ax / rho, x.scale(1.0 / ax) * y.conj().scale(1.0 / rho))
        };
        // every nonzero of rows and columns p, q lies in this window
        let lo = p.saturating_sub(self.b + 1);
        let hi = (q + self.b + 2).min(self.n);
        // rows: G A
        for j in lo..hi {
            let (ip, iq) = (self.idx(p, j), self.idx(q, j));
            let (u, v) = (self.a[ip], self.a[iq]);
            self.a[ip] = u.scale(cs) + sn * v;
            self.a[iq] = v.scale(cs) - sn.conj() * u;
        }
        // columns: (G A) Gᴴ
        for i in lo..hi {
            let (ip, iq) = (self.idx(i, p), self.idx(i, q));
            let (u, v) = (self.a[ip], self.a[iq]);
            self.a[ip] = u.scale(cs) + sn.conj() * v;
            self.a[iq] = v.scale(cs) - sn * u;
        }
        let (qc, cq) = (self.idx(q, c), self.idx(c, q));
        self.a[qc] = T::zero();
        self.a[cq] = T::zero();
        true
    }

    /// Band to tridiagonal: each column is cleared from the bottom of the
    /// band up, and every rotation's bulge `b + 1` below the diagonal is
    /// chased off the end.
    fn tridiagonalize(&mut self) {
        let (n, b) = (self.n, self.b);
        if b < 2 {
            return;
        }
        for k in 0..n.saturating_sub(2) {
            for l in ((k + 2)..=(k + b).min(n - 1)).rev() {
                let (mut r, mut c) = (l, k);
                while self.rotate(r, c) && r + b < n {
                    c = r - 1;
                    r += b;
                }
            }
        }
    }
}

/// All eigenvalues of the Hermitian `a`, ascending.
pub fn reference_spectrum<T: Scalar>(a: &CsrMatrix<T>) -> Vec<f64> {
    let n = a.dim();
    if n == 0 {
        return Vec::new();
    }
    let order = rcm_order(a);
    let mut pos = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        pos[i] = k;
    }
    let b = bandwidth(a, &pos);
    if 16 * b > n {
        return dense_eigenvalues(a);
    }
    let mut m = Banded::new(n, b);
    for i in 0..n {
        for (j, v) in a.row(i) {
            let k = m.idx(pos[i], pos[j]);
            m.a[k] = v;
        }
    }
    m.tridiagonalize();
    let d: Vec<f64> = (0..n).map(|i| m.at(i, i).re()).collect();
    let e: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| m.at(i + 1, i).abs())
        .collect();
    tridiagonal_ql(&d, &e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(n: usize, phase: f64) -> CsrMatrix<Complex64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex64::new(2.0 + (i as f64 * 0.37).sin(), 0.0)));
            let w = if i + 1 == n {
                Complex64::from_polar(-1.0, phase)
            } else {
                Complex64::new(-1.0, 0.0)
            };
            t.push((i, (i + 1) % n, w));
            t.push(((i + 1) % n, i, w.conj()));
        }
        CsrMatrix::from_triplets(n, &t)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn ql_matches_closed_form() {
        // second difference with Dirichlet ends: 2 − 2 cos(jπ/(n+1))
        let n = 50;
        let v = tridiagonal_ql(&vec![2.0; n], &vec![-1.0; n - 1]);
        let mut exact: Vec<f64> = (1..=n)
            .map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        close(&v, &exact, 1e-13);
    }

    #[test]
    fn ring_becomes_a_narrow_band() {
        let a = ring(200, 0.0);
        let order = rcm_order(&a);
        let mut pos = vec![0; 200];
        for (k, &i) in order.iter().enumerate() {
            pos[i] = k;
        }
        assert!(bandwidth(&a, &pos) <= 2);
    }

    #[test]
    fn bloch_ring_matches_dense() {
        for phase in [0.0, 0.7, std::f64::consts::PI] {
            let a = ring(300, phase);
            close(&reference_spectrum(&a), &dense_eigenvalues(&a), 1e-11);
        }
    }

    #[test]
    fn grid_laplacian_matches_dense() {
        // 5-point Laplacian on a 40 × 4 periodic strip: band 8 ≪ 160
        let (nx, ny) = (40, 4);
        let idx = |i: usize, j: usize| i * ny + j;
        let mut t = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                t.push((idx(i, j), idx(i, j), 4.0 + 0.1 * i as f64));
                if i + 1 < nx {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                let jn = (j + 1) % ny;
                t.push((idx(i, j), idx(i, jn), -1.0));
                t.push((idx(i, jn), idx(i, j), -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(nx * ny, &t);
        close(&reference_spectrum(&a), &dense_eigenvalues(&a), 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_banded_hermitian_matches_dense(seed in any::<u64>(), n in 20usize..120, b in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, Complex64::new(rng.gen_range(-3.0..3.0), 0.0)));
                for j in (i + 1)..(i + b + 1).min(n) {
                    let v = Complex64::sample(&mut rng);
                    t.push((i, j, v));
                    t.push((j, i, v.conj()));
                }
            }
            // scramble the node order so the reordering has work to do
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let t: Vec<_> = t.into_iter().map(|(i, j, v)| (perm[i], perm[j], v)).collect();
            let a = CsrMatrix::from_triplets(n, &t);
            let r = reference_spectrum(&a);
            let d = dense_eigenvalues(&a);
            for (x, y) in r.iter().zip(&d) {
                prop_assert!((x - y).abs() <= 1e-11, "{} vs {}", x, y);
            }
        }
    }
}
