//! Approximate eigenfunctions of the planar dislocation operator from a
//! strip eigenvector, cut off smoothly on a Dirichlet box.

use crate::discretize::{assemble_strip, Axis, Boundary, TensorOp};
use crate::eigensolve::{interior_eigs, InertiaCounter, Window};
use crate::error::{Error, Result};
use crate::potentials::{dislocation, Potential2D};

/// Fraction of the half-width over which the cutoff falls from 1 to 0.
pub const TAPER_MARGIN: f64 = 0.25;

/// Cutoff profile on `[−1, 1]`: one on the inner part, a `cos²` ramp over
/// the outer [`TAPER_MARGIN`], zero outside.
pub fn taper(s: f64) -> f64 {
    let a = s.abs();
    let inner = 1.0 - TAPER_MARGIN;
    if a <= inner {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        (0.5 * std::f64::consts::PI * (a - inner) / TAPER_MARGIN)
            .cos()
            .powi(2)
    }
}

#[derive(Clone, Debug)]
pub struct ApproximateEigenfunction {
    pub t: f64,
    pub e: f64,
    pub n: usize,
    pub h: f64,
    /// strip eigenvalue used
    pub strip_value: f64,
    /// box grid `(−n, n)²`; `w` is indexed `ix * ny + iy`
    pub ax: Axis,
    pub ay: Axis,
    pub w: Vec<f64>,
    /// `‖(A_box − E) w‖`, `‖w‖ = 1`
    pub residual: f64,
}

impl ApproximateEigenfunction {
    /// Fails with a contract error when the residual exceeds `threshold`.
    pub fn check(&self, threshold: f64) -> Result<&Self> {
        if self.residual > threshold {
            return Err(Error::contract(
                "approximate eigenfunction residual",
                format!(
                    "residual {} above {threshold} (n = {}, h = {})",
                    self.residual, self.n, self.h
                ),
            ));
        }
        Ok(self)
    }
}

/// Strip eigenvector at the eigenvalue nearest `e`, extended periodically
/// in `y` to `(−n, n)²`, multiplied by the cutoff and normalized. The
/// residual is taken against the Dirichlet box operator with `W_t`.
pub fn approximate_eigenfunction(
    v: &Potential2D,
    t: f64,
    e: f64,
    n: usize,
    h: f64,
    seed: u64,
) -> Result<ApproximateEigenfunction> {
    let wt = Potential2D::new(dislocation(v.spec(), t)?)?;
    let strip = assemble_strip(&wt, t, n, Boundary::Periodic, h)?;
    let mat = strip
        .matrix
        .as_real()
        .ok_or_else(|| Error::Invalid("periodic strip must be real".into()))?
        .clone();
    let counter = InertiaCounter::new(mat);
    let mut delta = 1e-6 * (1.0 + e.abs());
    let res = loop {
        let r = interior_eigs(
            &counter,
            Window::Interval(e - delta, e + delta),
            1e-10,
            true,
            seed,
        )?;
        if !r.values.is_empty() {
            break r;
        }
        delta *= 10.0;
        if delta > 1e-2 * (1.0 + e.abs()) {
            return Err(Error::Invalid(format!(
                "no strip eigenvalue near {e} at t = {t}"
            )));
        }
    };
    let idx = (0..res.values.len())
        .min_by(|&a, &b| {
            (res.values[a] - e)
                .abs()
                .partial_cmp(&(res.values[b] - e).abs())
                .unwrap()
        })
        .unwrap();
    let strip_value = res.values[idx];
    let mut u = res.vectors.unwrap().swap_remove(idx);
    // deterministic sign: largest entry positive
    let big = u
        .iter()
        .copied()
        .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if big < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }

    let sx = &strip.axes[0];
    let sy = &strip.axes[1];
    let m = sy.len();
    let nf = n as f64;
    let ax = Axis::dislocated_interval(nf, t, h)?;
    let ay = Axis::uniform(-nf, nf, h, Boundary::Dirichlet)?;
    let first = sx
        .nodes
        .iter()
        .position(|&x| (x - ax.nodes[0]).abs() < 1e-9 * h)
        .ok_or_else(|| Error::contract("grid transfer", "box nodes are not strip nodes"))?;
    let hy = 1.0 / m as f64;
    let ny = ay.len();
    let mut w = vec![0.0; ax.len() * ny];
    for (i, &x) in ax.nodes.iter().enumerate() {
        let fx = taper(x / nf);
        for (j, &y) in ay.nodes.iter().enumerate() {
            let iy = ((y / hy).round() as i64).rem_euclid(m as i64) as usize;
            w[i * ny + j] = fx * taper(y / nf) * u[(first + i) * m + iy];
        }
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::contract(
            "approximate eigenfunction",
            "cut-off vector vanishes",
        ));
    }
    w.iter_mut().for_each(|x| *x /= norm);
    let op = TensorOp::new(&wt, ax.clone(), ay.clone())?;
    let residual = op.residual(&w, e);
    Ok(ApproximateEigenfunction {
        t,
        e,
        n,
        h,
        strip_value,
        ax,
        ay,
        w,
        residual,
    })
}
