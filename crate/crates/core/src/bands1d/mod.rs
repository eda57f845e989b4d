//! Band-gap structure of one-dimensional periodic operators.
//!
//! Band edges are the solutions of `Δ(E) = ±2`. The scan runs on a grid in
//! `s = √(E − E₀)`, where `Δ` oscillates with period about `2π`; each
//! interior extremum of `Δ` is refined by golden-section search and marks a
//! (possibly closed) gap.

mod discriminant;

pub use discriminant::{discriminant, discriminant_log, monodromy, LogDisc, RK4_STEP};

use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::{assemble_1d, Boundary};
use crate::error::{Error, Result};
use crate::potentials::Potential1D;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub open: bool,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Discriminant,
    Bloch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandStructure {
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
    pub method: Method,
    pub e_max: f64,
    pub tol: f64,
    /// scan step in `√E` (discriminant) or mesh size (Bloch)
    pub resolution: f64,
}

/// Scan step in `s = √(E − E₀)`: a fiftieth of the band scale `π`.
const SCAN_STEP: f64 = std::f64::consts::PI / 50.0;

fn golden_extremum<F: Fn(f64) -> f64>(
    f: &F,
    mut a: f64,
    mut b: f64,
    maximize: bool,
    tol: f64,
) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let sgn = if maximize { -1.0 } else { 1.0 };
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = sgn * f(c);
    let mut fd = sgn * f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sgn * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sgn * f(d);
        }
    }
    0.5 * (a + b)
}

/// Root of `f` in `[a, b]` given a sign change, to absolute `tol`.
fn bisect_root<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Bands and gaps below `e_max` from the discriminant, edges to `tol`.
pub fn band_structure(v: &Potential1D, e_max: f64, tol: f64) -> Result<BandStructure> {
    if !v.is_periodic() {
        return Err(Error::Invalid(
            "band structure needs a periodic potential".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance {tol}")));
    }
    let e0 = -v.bound() - 1.0;
    if !(e_max > e0) {
        return Err(Error::Invalid(format!(
            "e_max = {e_max} below the spectrum"
        )));
    }
    let d = |e: f64| discriminant(v, e);
    // one extra oscillation past e_max so the last band closes
    let s_end = (e_max - e0).sqrt() + 2.0 * std::f64::consts::PI;
    let ns = (s_end / SCAN_STEP).ceil() as usize + 1;
    let ss: Vec<f64> = (0..=ns).map(|i| i as f64 * SCAN_STEP).collect();
    let es: Vec<f64> = ss.iter().map(|s| e0 + s * s).collect();
    let ds: Vec<f64> = es.par_iter().map(|&e| d(e)).collect();
    if !(ds[0] > 2.0) {
        return Err(Error::contract(
            "discriminant scan",
            "Δ ≤ 2 below the spectrum",
        ));
    }

    // interior extrema of Δ along the scan, refined
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    for i in 1..ns {
        let left = ds[i] - ds[i - 1];
        let right = ds[i + 1] - ds[i];
        if left * right < 0.0 || (left != 0.0 && right == 0.0) {
            let maximize = left > 0.0;
            let f = |s: f64| d(e0 + s * s);
            let s = golden_extremum(
                &f,
                ss[i - 1],
                ss[i + 1],
                maximize,
                1e-12 * ss[i + 1].max(1.0),
            );
            let e = e0 + s * s;
            extrema.push((e, d(e)));
        }
    }

    let mut bands = Vec::new();
    let mut gaps = Vec::new();
    let mut prev_point = e0;
    let mut prev_level = 2.0; // Δ = +2 at the bottom edge
    let mut band_lower = None;
    for (idx, &(e_ext, d_ext)) in extrema.iter().enumerate() {
        let level = if d_ext > 0.0 { 2.0 } else { -2.0 };
        if band_lower.is_none() {
            let f = |e: f64| d(e) - prev_level;
            band_lower = Some(bisect_root(&f, prev_point, e_ext, tol * 0.1));
        }
        let lower = band_lower.unwrap();
        let open = d_ext.abs() > 2.0;
        let (upper, next_lower) = if open {
            let f = |e: f64| d(e) - level;
            let up = bisect_root(&f, prev_point.max(lower), e_ext, tol * 0.1);
            let next_end = extrema.get(idx + 1).map(|x| x.0).unwrap_or(es[ns]);
            let dn = bisect_root(&f, e_ext, next_end, tol * 0.1);
            (up, dn)
        } else {
            (e_ext, e_ext)
        };
        if upper > e_max {
            break;
        }
        bands.push(Band { lower, upper });
        let width = next_lower - upper;
        gaps.push(Gap {
            k: gaps.len() + 1,
            lower: upper,
            upper: next_lower,
            open: open && width >= 2.0 * tol,
        });
        band_lower = Some(next_lower);
        prev_point = e_ext;
        prev_level = level;
    }
    // gaps must lie below the last computed band
    while gaps.len() >= bands.len() && !gaps.is_empty() {
        gaps.pop();
    }
    Ok(BandStructure {
        bands,
        gaps,
        method: Method::Discriminant,
        e_max,
        tol,
        resolution: SCAN_STEP,
    })
}

/// Eigenvalues of the one-cell operator with Bloch phase `phase`, in
/// `(lo, hi)`.
pub fn bloch_eigenvalues(
    v: &Potential1D,
    phase: f64,
    h: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let bc = if phase == 0.0 {
        Boundary::Periodic
    } else {
        Boundary::bloch(phase)
    };
    let op = assemble_1d(v, (0.0, 1.0), bc, h)?;
    op.counter().values_in(lo, hi, tol)
}

/// Band edges from the periodic (`φ = 0`) and antiperiodic (`φ = π`) cell
/// problems at mesh size `h`.
pub fn band_structure_bloch(
    v: &Potential1D,
    e_max: f64,
    h: f64,
    tol: f64,
) -> Result<BandStructure> {
    let lo = -v.bound() - 1.0;
    // a little headroom so the last band's edges are both present
    let hi = e_max + 4.0 * e_max.abs().sqrt().max(1.0) * std::f64::consts::PI + 10.0;
    let (p, a) = rayon::join(
        || bloch_eigenvalues(v, 0.0, h, lo, hi, tol),
        || bloch_eigenvalues(v, std::f64::consts::PI, h, lo, hi, tol),
    );
    let (p, a) = (p?, a?);
    // λ₀ < μ₁ ≤ μ₂ < λ₁ ≤ λ₂ < μ₃ ≤ μ₄ < …
    let mut seq = Vec::new();
    let (mut ip, mut ia) = (0usize, 0usize);
    let mut k = 0usize;
    loop {
        // edge pair k: band k+1 = [seq[2k], seq[2k+1]]
        let take_p_first = k.is_multiple_of(2);
        let (first, second) = if take_p_first {
            (p.get(ip).copied(), a.get(ia).copied())
        } else {
            (a.get(ia).copied(), p.get(ip).copied())
        };
        let (Some(x), Some(y)) = (first, second) else {
            break;
        };
        seq.push(x);
        seq.push(y);
        if take_p_first {
            ip += 1;
            ia += 1;
        } else {
            ia += 1;
            ip += 1;
        }
        k += 1;
    }
    let mut bands = Vec::new();
    let mut gaps = Vec::new();
    let mut i = 0;
    while i + 1 < seq.len() && seq[i + 1] <= e_max {
        bands.push(Band {
            lower: seq[i],
            upper: seq[i + 1],
        });
        i += 2;
    }
    for b in 1..bands.len() {
        let (l, u) = (bands[b - 1].upper, bands[b].lower);
        gaps.push(Gap {
            k: b,
            lower: l,
            upper: u,
            open: u - l >= 2.0 * tol,
        });
    }
    Ok(BandStructure {
        bands,
        gaps,
        method: Method::Bloch,
        e_max,
        tol,
        resolution: h,
    })
}

/// Gap `k` (1-based) of a band structure.
pub fn locate_gap(bs: &BandStructure, k: usize) -> Result<Gap> {
    if k == 0 || k > bs.gaps.len() {
        return Err(Error::GapOutOfRange {
            k,
            available: bs.gaps.len(),
        });
    }
    let g = bs.gaps[k - 1];
    if !g.open {
        return Err(Error::DegenerateGap { k });
    }
    Ok(g)
}
