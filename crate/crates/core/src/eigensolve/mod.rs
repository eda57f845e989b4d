//! Symmetric eigensolvers: Sturm bisection for tridiagonal matrices,
//! inertia counting through sparse `L D L^H`, and shift-invert Lanczos for
//! interior eigenpairs.

mod amd;
pub mod audit;
mod inertia;
mod lanczos;
pub mod ldl;
pub mod reference;
mod tridiag;

pub use amd::amd_order;
pub use inertia::{count_in_interval, InertiaCounter};
pub use tridiag::{tridiag_bisection, Tridiagonal};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::{dot, Scalar};

/// Spectral window of an eigen request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    Interval(f64, f64),
    Lowest(usize),
}

impl Window {
    fn validate(&self, tol: f64) -> Result<()> {
        if !(tol > 0.0) {
            return Err(Error::Invalid(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        match *self {
            Window::Interval(a, b) if !(a < b) => {
                Err(Error::Invalid(format!("empty window ({a}, {b})")))
            }
            Window::Lowest(0) => Err(Error::Invalid("empty window: lowest 0".into())),
            _ => Ok(()),
        }
    }
}

/// Inertia counts bracketing the returned values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub lower: f64,
    pub upper: f64,
    pub below_lower: usize,
    pub below_upper: usize,
}

impl Certificate {
    pub fn count(&self) -> usize {
        self.below_upper - self.below_lower
    }
}

/// Run of consecutive values closer than `10 tol`: `values[start..start+len]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug)]
pub struct EigenResult<T> {
    pub values: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub vectors: Option<Vec<Vec<T>>>,
    pub residuals: Vec<f64>,
    pub certificate: Certificate,
    /// window endpoints moved off an eigenvalue: (old, new)
    pub nudges: Vec<(f64, f64)>,
}

pub(crate) fn clusters_of(values: &[f64], tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if v - values[i - 1] < 10.0 * tol => c.len += 1,
            _ => out.push(Cluster { start: i, len: 1 }),
        }
    }
    out
}

/// Max-norm of `G - I` for the Gram matrix of `vectors`.
pub fn gram_deviation<T: Scalar>(vectors: &[Vec<T>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..vectors.len() {
        for j in 0..=i {
            let g = dot(&vectors[i], &vectors[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - T::from_real(target)).abs());
        }
    }
    worst
}

fn resolve_window<T: Scalar>(
    counter: &InertiaCounter<T>,
    window: Window,
    tol: f64,
) -> Result<(f64, f64)> {
    window.validate(tol)?;
    match window {
        Window::Interval(a, b) => Ok((a, b)),
        Window::Lowest(k) => {
            if k > counter.dim() {
                return Err(Error::Invalid(format!(
                    "{k} eigenvalues requested from dimension {}",
                    counter.dim()
                )));
            }
            let (glo, ghi) = counter.matrix().gershgorin();
            let lo = glo - 1.0;
            if k == counter.dim() {
                return Ok((lo, ghi + 1.0));
            }
            // smallest x with count_below(x) >= k, then step past the cluster
            let (mut a, mut b) = (lo, ghi + 1.0);
            while b - a > tol * 1e-2 {
                let m = 0.5 * (a + b);
                if counter.count_below(m)? >= k {
                    b = m;
                } else {
                    a = m;
                }
            }
            // b is just above the k-th eigenvalue; back off if that also
            // admits the (k+1)-th
            if counter.count_below(b)? > k {
                return Err(Error::Invalid(format!(
                    "eigenvalues {k} and {} coincide within tolerance",
                    k + 1
                )));
            }
            Ok((lo, b))
        }
    }
}

/// Window endpoints after nudging, with each `(from, to)` move.
type Nudged = (f64, f64, Vec<(f64, f64)>);

/// Moves window endpoints that sit on an eigenvalue (within `tol`) outward
/// by `2 tol`.
fn nudge_window<T: Scalar>(
    counter: &InertiaCounter<T>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<Nudged> {
    let mut nudges = Vec::new();
    for _ in 0..8 {
        let mut moved = false;
        if counter.count_in_interval(a - tol, a + tol)? > 0 {
            nudges.push((a, a - 2.0 * tol));
            a -= 2.0 * tol;
            moved = true;
        }
        if counter.count_in_interval(b - tol, b + tol)? > 0 {
            nudges.push((b, b + 2.0 * tol));
            b += 2.0 * tol;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    Ok((a, b, nudges))
}

/// Eigenvalues in a window by inertia-count bisection (no vectors).
pub fn eigs_by_bisection<T: Scalar>(
    counter: &InertiaCounter<T>,
    window: Window,
    tol: f64,
) -> Result<EigenResult<T>> {
    let (a, b) = resolve_window(counter, window, tol)?;
    let (a, b, nudges) = nudge_window(counter, a, b, tol)?;
    let ca = counter.count_below(a)?;
    let cb = counter.count_below(b)?;
    let mut values = Vec::new();
    let err = std::cell::RefCell::new(None);
    let count = |x: f64| match counter.count_below(x) {
        Ok(c) => c,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            ca
        }
    };
    tridiag::bisect(&count, a, b, ca, cb, tol, &mut values);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(EigenResult {
        clusters: clusters_of(&values, tol),
        values,
        vectors: None,
        residuals: Vec::new(),
        certificate: Certificate {
            lower: a,
            upper: b,
            below_lower: ca,
            below_upper: cb,
        },
        nudges,
    })
}

/// All eigenpairs in a window via shift-invert Lanczos at the window
/// midpoint, certified against the inertia count. Stagnating windows are
/// bisected and solved recursively.
pub fn interior_eigs<T: Scalar>(
    counter: &InertiaCounter<T>,
    window: Window,
    tol: f64,
    want_vectors: bool,
    seed: u64,
) -> Result<EigenResult<T>> {
    let (a, b) = resolve_window(counter, window, tol)?;
    let (a, b, nudges) = nudge_window(counter, a, b, tol)?;
    let ca = counter.count_below(a)?;
    let cb = counter.count_below(b)?;
    let mut pairs: Vec<(f64, Vec<T>, f64)> = Vec::new();
    solve_window(counter, a, b, cb - ca, tol, seed, 0, &mut pairs)?;
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    if pairs.len() != cb - ca {
        return Err(Error::contract(
            "eigensolver completeness",
            format!(
                "found {} eigenpairs in ({a}, {b}) but inertia certifies {}",
                pairs.len(),
                cb - ca
            ),
        ));
    }
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let residuals = pairs.iter().map(|p| p.2).collect();
    let vectors = want_vectors.then(|| pairs.into_iter().map(|p| p.1).collect());
    Ok(EigenResult {
        clusters: clusters_of(&values, tol),
        values,
        vectors,
        residuals,
        certificate: Certificate {
            lower: a,
            upper: b,
            below_lower: ca,
            below_upper: cb,
        },
        nudges,
    })
}

const MAX_DEPTH: usize = 24;

#[allow(clippy::too_many_arguments)]
fn solve_window<T: Scalar>(
    counter: &InertiaCounter<T>,
    a: f64,
    b: f64,
    expected: usize,
    tol: f64,
    seed: u64,
    depth: usize,
    out: &mut Vec<(f64, Vec<T>, f64)>,
) -> Result<()> {
    if expected == 0 {
        return Ok(());
    }
    let accept = tol.max(1e-12 * counter.scale());
    let sigma = 0.5 * (a + b);
    let (fac, sigma) = counter.factor_at(sigma)?;
    let mut found: Vec<(f64, Vec<T>, f64)> = Vec::new();
    let mut locked: Vec<Vec<T>> = out.iter().map(|p| p.1.clone()).collect();
    let mut pass = 0u64;
    while found.len() < expected {
        let remaining = expected - found.len();
        let steps = (3 * remaining + 40).min(counter.dim());
        let ritz = lanczos::lanczos_pass(
            counter.matrix(),
            &fac,
            sigma,
            &locked,
            steps,
            a,
            b,
            seed.wrapping_add(pass.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        pass += 1;
        let mut progress = false;
        for p in ritz {
            if p.residual <= accept && p.value > a && p.value < b && found.len() < expected {
                locked.push(p.vector.clone());
                found.push((p.value, p.vector, p.residual));
                progress = true;
            }
        }
        if !progress || pass > 50 {
            break;
        }
    }
    if found.len() == expected {
        out.extend(found);
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::contract(
            "eigensolver completeness",
            format!(
                "Lanczos stagnated on ({a}, {b}) with {} of {expected} pairs",
                found.len()
            ),
        ));
    }
    // stagnation: bisect the window and recurse
    let mid = 0.5 * (a + b);
    let (_, mid) = counter.factor_at(mid)?;
    let below_a = counter.count_below(a)?;
    let below_m = counter.count_below(mid)?;
    let below_b = counter.count_below(b)?;
    solve_window(
        counter,
        a,
        mid,
        below_m - below_a,
        tol,
        seed ^ 1,
        depth + 1,
        out,
    )?;
    solve_window(
        counter,
        mid,
        b,
        below_b - below_m,
        tol,
        seed ^ 2,
        depth + 1,
        out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{dense_eigenvalues, CsrMatrix};

    fn box_laplacian(
        nx: usize,
        ny: usize,
        h: f64,
        pot: impl Fn(usize, usize) -> f64,
    ) -> CsrMatrix<f64> {
        let id = |i: usize, j: usize| i * ny + j;
        let mut t = Vec::new();
        let c = 1.0 / (h * h);
        for i in 0..nx {
            for j in 0..ny {
                t.push((id(i, j), id(i, j), 4.0 * c + pot(i, j)));
                if i + 1 < nx {
                    t.push((id(i, j), id(i + 1, j), -c));
                    t.push((id(i + 1, j), id(i, j), -c));
                }
                if j + 1 < ny {
                    t.push((id(i, j), id(i, j + 1), -c));
                    t.push((id(i, j + 1), id(i, j), -c));
                }
            }
        }
        CsrMatrix::from_triplets(nx * ny, &t)
    }

    #[test]
    fn interior_matches_dense() {
        let a = box_laplacian(14, 11, 0.1, |i, j| ((i * 7 + j * 3) % 5) as f64 * 20.0);
        let dense = dense_eigenvalues(&a);
        let counter = InertiaCounter::new(a);
        let (lo, hi) = (900.0, 1400.0);
        let r = interior_eigs(&counter, Window::Interval(lo, hi), 1e-8, true, 11).unwrap();
        let expect: Vec<f64> = dense
            .iter()
            .copied()
            .filter(|&e| e > lo && e < hi)
            .collect();
        assert_eq!(r.values.len(), expect.len());
        assert_eq!(r.values.len(), r.certificate.count());
        for (x, y) in r.values.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
        assert!(gram_deviation(r.vectors.as_ref().unwrap()) < 1e-8);
        assert!(r
            .residuals
            .iter()
            .all(|&res| res <= 1e-8f64.max(1e-12 * counter.scale())));
    }

    #[test]
    fn interior_is_deterministic() {
        let a = box_laplacian(9, 9, 0.1, |i, _| i as f64);
        let counter = InertiaCounter::new(a);
        let r1 = interior_eigs(&counter, Window::Interval(500.0, 900.0), 1e-8, true, 5).unwrap();
        let r2 = interior_eigs(&counter, Window::Interval(500.0, 900.0), 1e-8, true, 5).unwrap();
        assert_eq!(r1.values, r2.values);
        assert_eq!(r1.vectors, r2.vectors);
    }

    #[test]
    fn degenerate_pairs_are_found() {
        // square grid: many exact double eigenvalues
        let a = box_laplacian(10, 10, 0.1, |_, _| 0.0);
        let dense = dense_eigenvalues(&a);
        let counter = InertiaCounter::new(a);
        let r = interior_eigs(&counter, Window::Interval(300.0, 700.0), 1e-8, false, 3).unwrap();
        let expect = dense.iter().filter(|&&e| e > 300.0 && e < 700.0).count();
        assert_eq!(r.values.len(), expect);
        assert!(r.clusters.iter().any(|c| c.len >= 2));
    }

    #[test]
    fn bisection_matches_dense_complex() {
        use num_complex::Complex64;
        let n = 12;
        let mut t = Vec::new();
        let ph = Complex64::from_polar(1.0, 0.7);
        for i in 0..n {
            t.push((i, i, Complex64::new(2.0 + (i % 3) as f64, 0.0)));
            let j = (i + 1) % n;
            let w = if j == 0 {
                -ph
            } else {
                Complex64::new(-1.0, 0.0)
            };
            t.push((i, j, w));
            t.push((j, i, w.conj()));
        }
        let a = CsrMatrix::from_triplets(n, &t);
        assert!(a.is_hermitian());
        let dense = dense_eigenvalues(&a);
        let counter = InertiaCounter::new(a);
        let r = eigs_by_bisection(&counter, Window::Interval(-10.0, 10.0), 1e-10).unwrap();
        assert_eq!(r.values.len(), n);
        for (x, y) in r.values.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn lowest_k_window() {
        let a = box_laplacian(6, 5, 0.2, |i, j| (i + 2 * j) as f64);
        let dense = dense_eigenvalues(&a);
        let counter = InertiaCounter::new(a);
        let r = eigs_by_bisection(&counter, Window::Lowest(4), 1e-10).unwrap();
        assert_eq!(r.values.len(), 4);
        for (x, y) in r.values.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
