//! Muffin-tin models: the plane minus a periodic array of discs
//! `B_r(P₀ + ℤ²)` carries infinitely high walls, so the operator splits into
//! independent Dirichlet problems on the discs (and on the pieces of discs
//! cut by an interface).

mod bessel;
mod disc;
mod finite;
mod geometry;

pub use bessel::{bessel_j, bessel_j_miller, bessel_j_series, bessel_zeros};
pub use disc::{
    bessel_disc_eigenvalues, cut_disc_curve, fd_disc_eigenvalues, mask_eigenvalues, richardson,
    CutDiscCurve, DiscSpectrum, SpectrumSource,
};
pub use finite::{finite_height_spectrum, finite_muffin, FiniteHeightSpectrum};
pub use geometry::{
    interpolation_curve, interpolation_grid, rotated_gap_scan, rotated_gap_scan_with,
    rotated_geometry, GapScan, MuffinDisc, RotatedMuffinGeometry, ScanValue, Side,
};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuffinRow {
    pub t: f64,
    /// `½ − r < t < ½ + r`: the disc `B_r(½ − t, 0)` meets the interface
    pub cut: bool,
    /// `(k, λ_k(t))` inside the gap
    pub in_gap: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuffinDislocationReport {
    pub r: f64,
    pub j: usize,
    pub gap: (f64, f64),
    pub bulk: DiscSpectrum,
    pub curve: CutDiscCurve,
    pub rows: Vec<MuffinRow>,
    /// the branch ending at the lower gap edge
    pub branch: usize,
    /// that branch starts above the gap and later lies inside it
    pub traverses: bool,
}

/// Surface branches of the dislocated muffin tin with `P₀ = (½, 0)` across
/// the gap `(μ̃_j, μ̃_{j+1})`, sampled on `t_grid ⊂ [0, 1]`.
pub fn muffin_dislocation_report(
    r: f64,
    j: usize,
    t_grid: &[f64],
    h_ladder: &[f64],
) -> Result<MuffinDislocationReport> {
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Invalid("t grid must lie in [0, 1]".into()));
    }
    let mut k_max = 4;
    let bulk = loop {
        let s = bessel_disc_eigenvalues(r, k_max)?;
        if s.distinct().len() > j + 1 {
            break s;
        }
        k_max *= 2;
    };
    let gap = bulk.gap(j)?;
    // every branch with μ_k < b can enter the gap
    let below: Vec<f64> = bulk.values.iter().copied().filter(|&m| m < gap.1).collect();
    let k_max = below.len();
    let branch = below
        .iter()
        .rposition(|&m| m <= gap.0 * (1.0 + 1e-12))
        .unwrap()
        + 1;
    let inside: Vec<f64> = t_grid
        .iter()
        .copied()
        .filter(|&t| t > 0.5 - r && t < 0.5 + r)
        .collect();
    let curve = cut_disc_curve(r, k_max, &inside, h_ladder)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut c = 0;
    for &t in t_grid {
        let cut = t > 0.5 - r && t < 0.5 + r;
        let in_gap = if cut {
            let vals = &curve.values[c];
            c += 1;
            vals.iter()
                .enumerate()
                .filter_map(|(k, v)| v.filter(|&x| x > gap.0 && x < gap.1).map(|x| (k + 1, x)))
                .collect()
        } else {
            Vec::new()
        };
        rows.push(MuffinRow { t, cut, in_gap });
    }
    let b = curve.branch(branch);
    let first_above = b.iter().position(|v| v.is_none_or(|x| x >= gap.1));
    let traverses = first_above.is_some_and(|i| {
        b[i..]
            .iter()
            .any(|v| v.is_some_and(|x| x > gap.0 && x < gap.1))
    });
    Ok(MuffinDislocationReport {
        r,
        j,
        gap,
        bulk,
        curve,
        rows,
        branch,
        traverses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dislocation_branch_crosses_first_gap() {
        let t_grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let rep = muffin_dislocation_report(0.3, 1, &t_grid, &[1.0 / 32.0, 1.0 / 64.0]).unwrap();
        assert_eq!(rep.branch, 1);
        assert!(rep.traverses);
        for row in &rep.rows {
            if !row.cut {
                assert!(row.in_gap.is_empty());
            }
        }
        // values are the curve's own
        let i = rep.rows.iter().position(|r| !r.in_gap.is_empty()).unwrap();
        let t = rep.rows[i].t;
        let ci = rep.curve.t_grid.iter().position(|&x| x == t).unwrap();
        assert_eq!(
            Some(rep.rows[i].in_gap[0].1),
            rep.curve.values[ci][rep.rows[i].in_gap[0].0 - 1]
        );
    }
}
