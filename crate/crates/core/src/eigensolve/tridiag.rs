//! Sturm-sequence bisection for symmetric tridiagonal matrices.

use super::{clusters_of, Certificate, EigenResult, Window};
use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n-1.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Invalid(format!(
                "tridiagonal with {} diagonal and {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        Ok(Tridiagonal { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via the pivots
    /// of `T - x I`).
    pub fn count_below(&self, x: f64) -> usize {
        let scale = self
            .diag
            .iter()
            .chain(self.off.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(x.abs())
            .max(1.0);
        let tiny = f64::EPSILON * f64::EPSILON * scale;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.dim() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - x - e * e / q;
            }
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn count_in_interval(&self, a: f64, b: f64) -> usize {
        self.count_below(b).saturating_sub(self.count_below(a))
    }
}

/// All eigenvalues of `t` inside `window` located to `tol`.
///
/// Endpoints that sit within `tol` of an eigenvalue are moved outward by
/// `2 tol` and the move is recorded in the result.
pub fn tridiag_bisection(t: &Tridiagonal, window: Window, tol: f64) -> Result<EigenResult<f64>> {
    window.validate(tol)?;
    let (glo, ghi) = t.gershgorin();
    let (mut a, mut b) = match window {
        Window::Interval(a, b) => (a, b),
        Window::Lowest(k) => {
            if k > t.dim() {
                return Err(Error::Invalid(format!(
                    "{k} eigenvalues requested from dimension {}",
                    t.dim()
                )));
            }
            let lo = glo - 1.0;
            let hi = if k == t.dim() {
                ghi + 1.0
            } else {
                // midpoint between the k-th and (k+1)-th eigenvalue
                let kth = kth_eigenvalue(t, k - 1, glo - 1.0, ghi + 1.0, tol * 1e-3);
                let next = kth_eigenvalue(t, k, glo - 1.0, ghi + 1.0, tol * 1e-3);
                0.5 * (kth + next)
            };
            (lo, hi)
        }
    };
    let mut nudges = Vec::new();
    for _ in 0..8 {
        let na = nudge_point(t, a, tol, -1.0);
        let nb = nudge_point(t, b, tol, 1.0);
        if na == a && nb == b {
            break;
        }
        if na != a {
            nudges.push((a, na));
        }
        if nb != b {
            nudges.push((b, nb));
        }
        a = na;
        b = nb;
    }
    let below_a = t.count_below(a);
    let below_b = t.count_below(b);
    let mut values = Vec::new();
    bisect(
        &|x| t.count_below(x),
        a,
        b,
        below_a,
        below_b,
        tol,
        &mut values,
    );
    let clusters = clusters_of(&values, tol);
    Ok(EigenResult {
        values,
        clusters,
        vectors: None,
        residuals: Vec::new(),
        certificate: Certificate {
            lower: a,
            upper: b,
            below_lower: below_a,
            below_upper: below_b,
        },
        nudges,
    })
}

fn nudge_point(t: &Tridiagonal, x: f64, tol: f64, dir: f64) -> f64 {
    if t.count_below(x - tol) != t.count_below(x + tol) {
        x + dir * 2.0 * tol
    } else {
        x
    }
}

fn kth_eigenvalue(t: &Tridiagonal, k: usize, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if t.count_below(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generic count bisection: `count(x)` is the number of eigenvalues below
/// `x`. Appends every eigenvalue in `[a, b)` (with multiplicity) to `out`.
pub(crate) fn bisect<F: Fn(f64) -> usize>(
    count: &F,
    a: f64,
    b: f64,
    ca: usize,
    cb: usize,
    tol: f64,
    out: &mut Vec<f64>,
) {
    if cb <= ca {
        return;
    }
    if b - a <= tol {
        let mid = 0.5 * (a + b);
        out.extend(std::iter::repeat_n(mid, cb - ca));
        return;
    }
    let mid = 0.5 * (a + b);
    let cm = count(mid);
    bisect(count, a, mid, ca, cm, tol, out);
    bisect(count, mid, b, cm, cb, tol, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(t: &Tridiagonal) -> Vec<f64> {
        let n = t.dim();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = t.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = t.off[i];
                m[(i + 1, i)] = t.off[i];
            }
        }
        let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn diagonal_window() {
        let t = Tridiagonal::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let r = tridiag_bisection(&t, Window::Interval(1.5, 2.5), 1e-12).unwrap();
        assert_eq!(r.values.len(), 1);
        assert!((r.values[0] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn dirichlet_laplacian_closed_form() {
        let h = 0.25;
        let t = Tridiagonal::new(vec![2.0 / (h * h); 3], vec![-1.0 / (h * h); 2]).unwrap();
        let r = tridiag_bisection(&t, Window::Interval(-1.0, 100.0), 1e-10).unwrap();
        for (k, v) in r.values.iter().enumerate() {
            let exact = 16.0 * (2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / 4.0).cos());
            assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
        }
    }

    #[test]
    fn endpoint_on_eigenvalue_is_nudged() {
        let t = Tridiagonal::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let r = tridiag_bisection(&t, Window::Interval(2.0, 2.5), 1e-9).unwrap();
        assert_eq!(r.nudges.len(), 1);
        assert_eq!(r.values.len(), 1);
    }

    #[test]
    fn random_tridiagonal_matches_dense() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [5usize, 17, 40] {
            let t = Tridiagonal::new(
                (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect(),
                (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            )
            .unwrap();
            let exact = dense(&t);
            let r = tridiag_bisection(&t, Window::Interval(-20.0, 20.0), 1e-12).unwrap();
            assert_eq!(r.values.len(), n);
            for (a, b) in r.values.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lowest_k() {
        let t = Tridiagonal::new(vec![4.0, 1.0, 3.0, 2.0], vec![0.0; 3]).unwrap();
        let r = tridiag_bisection(&t, Window::Lowest(2), 1e-10).unwrap();
        assert_eq!(r.values.len(), 2);
        assert!((r.values[1] - 2.0).abs() < 1e-9);
    }
}
