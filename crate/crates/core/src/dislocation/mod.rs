//! Dislocation spectra: finite sections of `−d²/dx² + W_t` on the ring
//! `(−n − t, n)`, their gap eigenvalue branches as `t` runs over `[0, 1]`,
//! and the two-dimensional strip analogues.
//!
//! The section grid keeps `t` continuous: nodes sit at `jh` on the right and
//! at `−t − ih` on the left, with one short cell at the interface. At
//! `t ∈ {0, 1}` the grid is uniform and the section is exactly a periodic
//! discrete operator, so its gap edges are those of the discrete band
//! structure at the same `h`.

mod branches;
mod eigenfunction;
mod strip;

pub use branches::{
    crossing_count, track_branches, track_on_grid, Branch, BranchFamily, BranchPoint,
    CrossingReport, Edge, PointKind, Seam, PARAMETER_END,
};
pub use eigenfunction::{approximate_eigenfunction, taper, ApproximateEigenfunction};
pub use strip::{
    bulk_gaps_2d, fiber_union_spectrum, find_t_for_energy, strip_section_spectrum, FiberUnion,
    StripHit,
};

use serde::Serialize;

use crate::bands1d::{band_structure_bloch, locate_gap, BandStructure, Gap};
use crate::discretize::{assemble_section_1d, Boundary};
use crate::eigensolve::Certificate;
use crate::error::{Error, Result};
use crate::potentials::{dislocation, Potential1D};

/// Gap eigenvalues of one section operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionSpectrum {
    pub t: f64,
    pub n: usize,
    pub h: f64,
    pub window: (f64, f64),
    pub values: Vec<f64>,
    pub certificate: Certificate,
}

/// `W_t` for a one-dimensional periodic base.
pub fn dislocated(v: &Potential1D, t: f64) -> Result<Potential1D> {
    Potential1D::new(dislocation(v.spec(), t)?)
}

/// Eigenvalues in `window` of the periodic section operator on
/// `(−n − t, n)`.
pub fn section_spectrum_1d(
    v: &Potential1D,
    t: f64,
    n: usize,
    window: (f64, f64),
    h: f64,
    tol: f64,
) -> Result<SectionSpectrum> {
    let w = dislocated(v, t)?;
    let op = assemble_section_1d(&w, n, t, Boundary::Periodic, h)?;
    let (values, certificate) = op.counter().spectrum(window.0, window.1, tol)?;
    Ok(SectionSpectrum {
        t,
        n,
        h,
        window,
        values,
        certificate,
    })
}

/// Band structure of the discrete periodic operator at mesh size `h`,
/// covering at least `gaps` gaps.
pub fn discrete_bands(v: &Potential1D, gaps: usize, h: f64, tol: f64) -> Result<BandStructure> {
    let mut e_max = ((gaps + 1) as f64 * std::f64::consts::PI).powi(2) + v.bound() + 10.0;
    for _ in 0..8 {
        let bs = band_structure_bloch(v, e_max, h, tol)?;
        if bs.gaps.len() >= gaps {
            return Ok(bs);
        }
        e_max *= 2.0;
    }
    Err(Error::GapOutOfRange {
        k: gaps,
        available: 0,
    })
}

/// Gap `k` of the discrete operator at mesh size `h`; degenerate gaps are an
/// error.
pub fn discrete_gap(v: &Potential1D, k: usize, h: f64, tol: f64) -> Result<Gap> {
    let bs = discrete_bands(v, k, h, tol)?;
    locate_gap(&bs, k)
}

/// Number of section eigenvalues in band `k` at `t ∈ {0, 1}`. The band is
/// delimited by the midpoints of the neighbouring gaps. Anything other than
/// `2n` at `t = 0` and `2n + 1` at `t = 1` is a contract failure.
pub fn band_count_check(v: &Potential1D, n: usize, k: usize, t: f64, h: f64) -> Result<usize> {
    if t != 0.0 && t != 1.0 {
        return Err(Error::Invalid(format!(
            "band counts are fixed only at t = 0 and t = 1, got {t}"
        )));
    }
    if k == 0 {
        return Err(Error::Invalid("bands are numbered from 1".into()));
    }
    let tol = 1e-9;
    let bs = discrete_bands(v, k, h, tol)?;
    let upper = locate_gap(&bs, k)?;
    let lo = if k == 1 {
        -v.bound() - 1.0
    } else {
        let g = locate_gap(&bs, k - 1)?;
        0.5 * (g.lower + g.upper)
    };
    let hi = 0.5 * (upper.lower + upper.upper);
    let w = dislocated(v, t)?;
    let op = assemble_section_1d(&w, n, t, Boundary::Periodic, h)?;
    let count = op.count_in_interval(lo, hi)?;
    let expected = if t == 0.0 { 2 * n } else { 2 * n + 1 };
    if count != expected {
        return Err(Error::contract(
            "band count",
            format!(
                "band {k} of the section n = {n}, t = {t} holds {count} eigenvalues, expected {expected}; retry with h = {}",
                h / 2.0
            ),
        ));
    }
    Ok(count)
}
