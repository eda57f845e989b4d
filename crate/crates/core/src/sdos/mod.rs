//! Gap-eigenvalue counts on Dirichlet boxes around an interface, and their
//! scaling in the box size.
//!
//! The box `Q_n = (−n, n)²` carries the dislocated grid in `x`. The
//! reference uses the same box and nodes with the unperturbed potential:
//! `t = 0` for dislocations, the right-hand potential on both sides for
//! interfaces. Box boundaries produce
//! `O(n)` gap states of their own, so positivity of the surface density is
//! judged on the differenced count.

use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::{assemble_on_axis, assemble_tensor, Axis, Boundary, Geometry};
use crate::eigensolve::{tridiag_bisection, Tridiagonal, Window};
use crate::error::{Error, Result};
use crate::potentials::{dislocation, Potential1D, Potential2D, PotentialSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    /// `A_x ⊗ I + I ⊗ A_y`: Sturm counts of `A_x` shifted by each `A_y`
    /// eigenvalue
    Separable,
    /// sparse LDLᵀ inertia of the assembled box operator
    Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxCount {
    pub n: usize,
    pub grid_t: f64,
    pub window: (f64, f64),
    pub dim: usize,
    pub count: usize,
    pub method: CountMethod,
}

fn box_axes(n: usize, grid_t: f64, h: f64) -> Result<(Axis, Axis)> {
    let nf = n as f64;
    Ok((
        Axis::dislocated_interval(nf, grid_t, h)?,
        Axis::uniform(-nf, nf, h, Boundary::Dirichlet)?,
    ))
}

fn tridiagonal(v: &Potential1D, axis: Axis) -> Result<Tridiagonal> {
    let (lo, hi) = (axis.lo, axis.hi);
    let op = assemble_on_axis(v, axis, Geometry::Interval { a: lo, b: hi });
    let m = op.matrix.as_real().expect("Dirichlet axis is real");
    let diag = m.diagonal();
    let off = (1..m.dim()).map(|i| m.get(i - 1, i)).collect();
    Tridiagonal::new(diag, off)
}

/// Eigenvalues of the box operator for `w` in `[α, β)`, counted by inertia.
/// `grid_t` fixes the `x`-nodes of the box. Separable potentials are
/// counted through their one-dimensional factors; `force_sparse` assembles
/// the full operator regardless.
pub fn box_gap_count(
    w: &Potential2D,
    grid_t: f64,
    n: usize,
    window: (f64, f64),
    h: f64,
    force_sparse: bool,
) -> Result<BoxCount> {
    if !(window.0 < window.1) {
        return Err(Error::Invalid(format!(
            "empty window ({}, {})",
            window.0, window.1
        )));
    }
    let (ax, ay) = box_axes(n, grid_t, h)?;
    let dim = ax.len() * ay.len();
    let split = if force_sparse { None } else { w.separable() };
    let (count, method) = match split {
        Some((wx, wy)) => {
            let tx = tridiagonal(&wx, ax)?;
            let ty = tridiagonal(&wy, ay)?;
            let (lo, hi) = ty.gershgorin();
            let tol = 1e-13 * (1.0 + lo.abs().max(hi.abs()));
            let mu = tridiag_bisection(&ty, Window::Interval(lo - 1.0, hi + 1.0), tol)?.values;
            if mu.len() != ty.dim() {
                return Err(Error::contract(
                    "separable count",
                    "transverse spectrum incomplete",
                ));
            }
            let count = mu
                .par_iter()
                .map(|m| tx.count_in_interval(window.0 - m, window.1 - m))
                .sum();
            (count, CountMethod::Separable)
        }
        None => {
            let nf = n as f64;
            let op = assemble_tensor(
                w,
                ax,
                ay,
                Geometry::Box {
                    x: (-nf, nf),
                    y: (-nf, nf),
                },
            );
            (
                op.count_in_interval(window.0, window.1)?,
                CountMethod::Sparse,
            )
        }
    };
    Ok(BoxCount {
        n,
        grid_t,
        window,
        dim,
        count,
        method,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdosRow {
    pub n: usize,
    pub raw: usize,
    pub reference: usize,
    pub differenced: i64,
    /// `differenced / n`
    pub scaled_surface: f64,
    /// `raw / (n ln n)`
    pub scaled_upper: f64,
}

/// Least-squares fit `differenced ≈ c n` through the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub sigma: f64,
}

impl SlopeFit {
    /// `c − k σ > 0`
    pub fn positive_with_margin(&self, k: f64) -> bool {
        self.slope - k * self.sigma > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceDosReport {
    pub potential: PotentialSpec,
    pub reference_potential: PotentialSpec,
    pub window: (f64, f64),
    pub h: f64,
    pub grid_t: f64,
    pub rows: Vec<SdosRow>,
    pub fit: SlopeFit,
    /// differenced counts, reference is the unperturbed box on the same grid
    pub convention: &'static str,
}

impl SurfaceDosReport {
    /// `raw/(n ln n)` never increases along the sizes.
    pub fn upper_non_increasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].scaled_upper <= w[0].scaled_upper)
    }
}

pub fn fit_slope(rows: &[SdosRow]) -> SlopeFit {
    let sxx: f64 = rows.iter().map(|r| (r.n as f64).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.n as f64 * r.differenced as f64).sum();
    let slope = sxy / sxx;
    let sigma = if rows.len() > 1 {
        let ss: f64 = rows
            .iter()
            .map(|r| (r.differenced as f64 - slope * r.n as f64).powi(2))
            .sum();
        (ss / (rows.len() - 1) as f64 / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    SlopeFit { slope, sigma }
}

fn sweep(
    w: &Potential2D,
    reference: &Potential2D,
    grid_t: f64,
    window: (f64, f64),
    n_list: &[usize],
    h: f64,
) -> Result<SurfaceDosReport> {
    if n_list.is_empty() || n_list.iter().any(|&n| n < 2) {
        return Err(Error::Invalid("box sizes must be at least 2".into()));
    }
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let (raw, reference) = rayon::join(
                || box_gap_count(w, grid_t, n, window, h, false),
                || box_gap_count(reference, grid_t, n, window, h, false),
            );
            let (raw, reference) = (raw?.count, reference?.count);
            let nf = n as f64;
            let differenced = raw as i64 - reference as i64;
            Ok(SdosRow {
                n,
                raw,
                reference,
                differenced,
                scaled_surface: differenced as f64 / nf,
                scaled_upper: raw as f64 / (nf * nf.ln()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_slope(&rows);
    Ok(SurfaceDosReport {
        potential: w.spec().clone(),
        reference_potential: reference.spec().clone(),
        window,
        h,
        grid_t,
        rows,
        fit,
        convention: "differenced = count(perturbed) - count(reference) on the same box; scaled_surface = differenced / n",
    })
}

/// Counts for the dislocation `W_t` of a periodic `v` against `v` itself,
/// both on the box grid of `W_t`.
pub fn surface_dos_sweep(
    v: &Potential2D,
    t: f64,
    window: (f64, f64),
    n_list: &[usize],
    h: f64,
) -> Result<SurfaceDosReport> {
    let w = Potential2D::new(dislocation(v.spec(), t)?)?;
    sweep(&w, v, t, window, n_list, h)
}

/// Counts for `χ_{x<0} V₁ + χ_{x≥0} V₂` against `V₂` on the same box.
pub fn interface_dos_sweep(
    w: &Potential2D,
    window: (f64, f64),
    n_list: &[usize],
    h: f64,
) -> Result<SurfaceDosReport> {
    let right = match w.spec() {
        PotentialSpec::Interface { right, .. } => Potential2D::new((**right).clone())?,
        _ => {
            return Err(Error::Invalid(
                "interface sweep needs an interface potential".into(),
            ))
        }
    };
    sweep(w, &right, 0.0, window, n_list, h)
}
