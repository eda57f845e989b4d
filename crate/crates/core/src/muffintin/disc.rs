//! Dirichlet spectra of discs and interface-cut discs.

use rayon::prelude::*;
use serde::Serialize;

use super::bessel::bessel_zeros;
use crate::discretize::{assemble_disc, DiscGeometry};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumSource {
    Bessel,
    FdExtrapolated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscSpectrum {
    pub r: f64,
    /// `μ_1 ≤ μ_2 ≤ …`, repeated with multiplicity
    pub values: Vec<f64>,
    pub source: SpectrumSource,
}

impl DiscSpectrum {
    /// Distinct values `μ̃_1 < μ̃_2 < …` with their multiplicities; values
    /// within `1e-9` relative are merged.
    pub fn distinct(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &v in &self.values {
            match out.last_mut() {
                Some(l) if (v - l.0).abs() <= 1e-9 * v.abs() => l.1 += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }

    /// Gap `(μ̃_j, μ̃_{j+1})`, `j ≥ 1`.
    pub fn gap(&self, j: usize) -> Result<(f64, f64)> {
        let d = self.distinct();
        if j == 0 || j >= d.len() {
            return Err(Error::GapOutOfRange {
                k: j,
                available: d.len().saturating_sub(1),
            });
        }
        Ok((d[j - 1].0, d[j].0))
    }
}

/// `(j_{m,s} / r)²` for all orders `m ≥ 0` and zero indices `s`, sorted,
/// each `m ≥ 1` value twice; the first `k_max` values.
pub fn bessel_disc_eigenvalues(r: f64, k_max: usize) -> Result<DiscSpectrum> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::Invalid(format!("disc radius {r} outside (0, 1/2)")));
    }
    if k_max == 0 {
        return Err(Error::Invalid("k_max must be positive".into()));
    }
    // every zero below `bound` is collected; the bound grows until the
    // k_max-th value is certainly below it
    let mut bound = 10.0;
    loop {
        let mut zs: Vec<(f64, usize)> = Vec::new();
        let mut m = 0u32;
        while (m as f64) < bound {
            let mut s = 1;
            loop {
                let z = *bessel_zeros(m, s).last().unwrap();
                if z >= bound {
                    break;
                }
                zs.push((z, if m == 0 { 1 } else { 2 }));
                s += 1;
            }
            m += 1;
        }
        let total: usize = zs.iter().map(|z| z.1).sum();
        if total >= k_max {
            zs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut values = Vec::with_capacity(total);
            for (z, mult) in zs {
                for _ in 0..mult {
                    values.push((z / r).powi(2));
                }
            }
            values.truncate(k_max);
            return Ok(DiscSpectrum {
                r,
                values,
                source: SpectrumSource::Bessel,
            });
        }
        bound *= 1.5;
    }
}

/// First-order Richardson extrapolation from the two finest values.
pub fn richardson(hs: &[f64], values: &[f64]) -> f64 {
    match hs.len() {
        0 => f64::NAN,
        1 => values[0],
        n => {
            let (hc, hf) = (hs[n - 2], hs[n - 1]);
            let (fc, ff) = (values[n - 2], values[n - 1]);
            (hc * ff - hf * fc) / (hc - hf)
        }
    }
}

fn sorted_ladder(h_ladder: &[f64]) -> Result<Vec<f64>> {
    if h_ladder.is_empty() || h_ladder.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Invalid(
            "mesh ladder must be nonempty and positive".into(),
        ));
    }
    let mut hs = h_ladder.to_vec();
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    hs.dedup();
    Ok(hs)
}

/// Lowest `k` Dirichlet eigenvalues on the staircase mask of `g`. Empty
/// masks give no values; masks with fewer than `k` nodes give fewer.
pub fn mask_eigenvalues(g: &DiscGeometry, k: usize, h: f64) -> Result<Vec<f64>> {
    let op = match assemble_disc(g, h) {
        Ok(op) => op,
        Err(Error::EmptyDomain(_)) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let want = k.min(op.dim());
    let counter = op.counter();
    let mut upper = 40.0 / (g.r * g.r);
    let top = 8.0 / (h * h) + 1.0;
    while upper < top && counter.count_below(upper)? < want {
        upper *= 2.0;
    }
    let upper = upper.min(top);
    let tol = 1e-10 * upper;
    let mut vals = counter.values_in(-1.0, upper, tol)?;
    vals.truncate(want);
    Ok(vals)
}

/// FD disc eigenvalues extrapolated over `h_ladder`.
pub fn fd_disc_eigenvalues(r: f64, k_max: usize, h_ladder: &[f64]) -> Result<DiscSpectrum> {
    let hs = sorted_ladder(h_ladder)?;
    let per_h = hs
        .par_iter()
        .map(|&h| mask_eigenvalues(&DiscGeometry::disc((0.0, 0.0), r), k_max, h))
        .collect::<Result<Vec<_>>>()?;
    if per_h.iter().any(|v| v.len() < k_max) {
        return Err(Error::TooCoarse(format!(
            "mesh too coarse for {k_max} disc eigenvalues"
        )));
    }
    let values = (0..k_max)
        .map(|k| richardson(&hs, &per_h.iter().map(|v| v[k]).collect::<Vec<_>>()))
        .collect();
    Ok(DiscSpectrum {
        r,
        values,
        source: SpectrumSource::FdExtrapolated,
    })
}

/// `λ_k(t, r)` on a `t`-grid: Dirichlet eigenvalues of
/// `B_r(½ − t, 0) ∩ {x < 0}`, extrapolated over the mesh ladder. `None`
/// means above the discrete cutoff (the cut piece holds fewer than `k`
/// nodes on some mesh of the ladder).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutDiscCurve {
    pub r: f64,
    pub k_max: usize,
    pub t_grid: Vec<f64>,
    pub h_ladder: Vec<f64>,
    /// `values[i][k]` at `t_grid[i]`
    pub values: Vec<Vec<Option<f64>>>,
}

impl CutDiscCurve {
    /// Branch `k` (from 1) along the grid.
    pub fn branch(&self, k: usize) -> Vec<Option<f64>> {
        self.values.iter().map(|v| v[k - 1]).collect()
    }

    /// Cubic interpolation of branch `k` at `t` from the four nearest grid
    /// points; `None` outside the grid or next to a cutoff.
    pub fn interpolate(&self, k: usize, t: f64) -> Option<f64> {
        let g = &self.t_grid;
        if g.len() < 4 || t < g[0] || t > g[g.len() - 1] {
            return None;
        }
        let i = g.partition_point(|&x| x <= t).clamp(2, g.len() - 2);
        let idx = [i - 2, i - 1, i, i + 1];
        let ys: Vec<f64> = idx
            .iter()
            .map(|&j| self.values[j][k - 1])
            .collect::<Option<_>>()?;
        let mut out = 0.0;
        for (a, &ja) in idx.iter().enumerate() {
            let mut w = 1.0;
            for &jb in &idx {
                if jb != ja {
                    w *= (t - g[jb]) / (g[ja] - g[jb]);
                }
            }
            out += w * ys[a];
        }
        Some(out)
    }
}

pub fn cut_disc_curve(
    r: f64,
    k_max: usize,
    t_grid: &[f64],
    h_ladder: &[f64],
) -> Result<CutDiscCurve> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::Invalid(format!("disc radius {r} outside (0, 1/2)")));
    }
    if let Some(t) = t_grid.iter().find(|&&t| !(t > 0.5 - r && t < 0.5 + r)) {
        return Err(Error::Invalid(format!(
            "t = {t} outside ({}, {})",
            0.5 - r,
            0.5 + r
        )));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("t grid must be strictly increasing".into()));
    }
    let hs = sorted_ladder(h_ladder)?;
    let values = t_grid
        .par_iter()
        .map(|&t| {
            let g = DiscGeometry::cut_disc((0.5 - t, 0.0), r);
            let per_h = hs
                .iter()
                .map(|&h| mask_eigenvalues(&g, k_max, h))
                .collect::<Result<Vec<_>>>()?;
            Ok((0..k_max)
                .map(|k| {
                    let v: Option<Vec<f64>> = per_h.iter().map(|p| p.get(k).copied()).collect();
                    v.map(|v| richardson(&hs, &v))
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = CutDiscCurve {
        r,
        k_max,
        t_grid: t_grid.to_vec(),
        h_ladder: hs,
        values,
    };
    for k in 1..=k_max {
        let b = curve.branch(k);
        for i in 1..b.len() {
            let ok = match (b[i - 1], b[i]) {
                (Some(x), Some(y)) => y < x,
                (None, _) => true,
                (Some(_), None) => false,
            };
            if !ok {
                return Err(Error::contract(
                    "cut-disc monotonicity",
                    format!(
                        "λ_{k} does not decrease between t = {} and t = {} (r = {r}); refine the mesh ladder",
                        curve.t_grid[i - 1], curve.t_grid[i]
                    ),
                ));
            }
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_law_is_exact() {
        let a = bessel_disc_eigenvalues(0.4, 8).unwrap();
        let b = bessel_disc_eigenvalues(0.25, 8).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x * 0.16 - y * 0.0625).abs() <= 1e-12 * x * 0.16);
        }
    }

    #[test]
    fn ordering_and_multiplicity() {
        let s = bessel_disc_eigenvalues(0.4, 6).unwrap();
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(s.values[1], s.values[2]);
        let d = s.distinct();
        assert_eq!(d[0].1, 1);
        assert_eq!(d[1].1, 2);
        let (a, b) = s.gap(1).unwrap();
        assert!(a < b);
        assert!(s.gap(0).is_err());
    }

    #[test]
    fn richardson_removes_first_order_error() {
        let hs = [0.1, 0.05];
        let f = |h: f64| 3.0 + 2.0 * h;
        assert!((richardson(&hs, &[f(0.1), f(0.05)]) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cut_curve_rejects_points_outside_the_disc_range() {
        assert!(cut_disc_curve(0.3, 1, &[0.1], &[1.0 / 32.0]).is_err());
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let t_grid: Vec<f64> = (0..6).map(|i| 0.2 + 0.1 * i as f64).collect();
        let f = |t: f64| 1.0 - t + 2.0 * t * t - 0.5 * t * t * t;
        let c = CutDiscCurve {
            r: 0.4,
            k_max: 1,
            t_grid: t_grid.clone(),
            h_ladder: vec![0.1],
            values: t_grid.iter().map(|&t| vec![Some(f(t))]).collect(),
        };
        for t in [0.2, 0.33, 0.5, 0.61, 0.7] {
            assert!((c.interpolate(1, t).unwrap() - f(t)).abs() < 1e-12);
        }
        assert!(c.interpolate(1, 0.75).is_none());
    }
}
