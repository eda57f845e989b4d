//! Disc arrangements of the rotated muffin tin `Ω_{r,θ}` and the gap
//! eigenvalues contributed by discs cut by the interface.

use rayon::prelude::*;
use serde::Serialize;

use super::disc::{cut_disc_curve, CutDiscCurve};
use crate::error::{Error, Result};
use crate::rotation::Angle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuffinDisc {
    pub center: (f64, f64),
    pub side: Side,
    /// meets `{x = 0}`: `|c_x| < r`
    pub cut: bool,
    /// `½ − c_x` for cut discs
    pub t_eff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotatedMuffinGeometry {
    pub r: f64,
    pub theta: f64,
    pub angle: Angle,
    /// discs with center in `[−w, w]²`
    pub window: f64,
    pub discs: Vec<MuffinDisc>,
    pub cut_count: usize,
    /// period of the left arrangement along the interface (rational slopes)
    pub period: Option<f64>,
    /// smallest nonzero `|c_x|` over left centers (rational slopes)
    pub r_theta: Option<f64>,
    /// left centers on the interface itself: cut in half for every `r`
    pub centered_cuts: bool,
    /// `tan θ = 1/(2k + 1)`
    pub excluded_family: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `x`-coordinate of `M_θ(i + ½, j + ½)` as `cos θ · d / (2q)`, with
/// `d = (2i + 1) q − (2j + 1) p` exact.
fn left_offset(p: u64, q: u64, i: i64, j: i64) -> i128 {
    (2 * i as i128 + 1) * q as i128 - (2 * j as i128 + 1) * p as i128
}

pub fn rotated_geometry(r: f64, angle: &Angle, window: f64) -> Result<RotatedMuffinGeometry> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::Invalid(format!("disc radius {r} outside (0, 1/2)")));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Invalid(format!("window half-width {window}")));
    }
    let theta = angle.theta();
    let (sn, cs) = theta.sin_cos();
    let reduced = match *angle {
        Angle::Rational { p, q } => {
            let g = gcd(p, q).max(1);
            Some((p / g, q / g))
        }
        Angle::Float { .. } => None,
    };
    let mut discs = Vec::new();
    let n = window.ceil() as i64 + 1;
    for i in 0..=n {
        for j in -n - 1..=n {
            let c = (i as f64 + 0.5, j as f64 + 0.5);
            if c.0 <= window && c.1.abs() <= window {
                discs.push(MuffinDisc {
                    center: c,
                    side: Side::Right,
                    cut: false,
                    t_eff: None,
                });
            }
        }
    }
    let span = (window * std::f64::consts::SQRT_2).ceil() as i64 + 2;
    for i in -span..=span {
        for j in -span..=span {
            let (u, v) = (i as f64 + 0.5, j as f64 + 0.5);
            let c = (cs * u - sn * v, sn * u + cs * v);
            if c.0.abs() > window || c.1.abs() > window {
                continue;
            }
            let cut = match reduced {
                Some((p, q)) => {
                    let d = left_offset(p, q, i, j).unsigned_abs() as f64;
                    cs * d / (2.0 * q as f64) < r
                }
                None => c.0.abs() < r,
            };
            // the left half keeps only x < 0: whole discs left of −r and cut ones
            if !cut && c.0 > -r {
                continue;
            }
            discs.push(MuffinDisc {
                center: c,
                side: Side::Left,
                cut,
                t_eff: cut.then_some(0.5 - c.0),
            });
        }
    }
    let cut_count = discs.iter().filter(|d| d.cut).count();
    let (period, r_theta, centered_cuts, excluded_family) = match reduced {
        Some((p, q)) if p > 0 => {
            // d = aq − bp with a, b odd and p, q coprime: odd when one of
            // p, q is even, even (and possibly 0) when both are odd
            let both_odd = p % 2 == 1 && q % 2 == 1;
            let dmin = if both_odd { 2.0 } else { 1.0 };
            (
                Some(((p * p + q * q) as f64).sqrt()),
                Some(cs * dmin / (2.0 * q as f64)),
                both_odd,
                p == 1 && q % 2 == 1 && q >= 3,
            )
        }
        Some(_) => (Some(1.0), None, false, false),
        None => (None, None, false, false),
    };
    Ok(RotatedMuffinGeometry {
        r,
        theta,
        angle: *angle,
        window,
        discs,
        cut_count,
        period,
        r_theta,
        centered_cuts,
        excluded_family,
    })
}

/// One gap eigenvalue and the disc that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanValue {
    pub value: f64,
    pub k: usize,
    pub center: (f64, f64),
    pub t_eff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapScan {
    pub theta: f64,
    pub gap: (f64, f64),
    pub window: f64,
    pub cut_discs: usize,
    /// cut discs whose depth lies outside the interpolation grid
    pub outside_grid: usize,
    pub values: Vec<ScanValue>,
}

impl GapScan {
    /// Indices of the `parts` equal subintervals of the gap holding no value.
    pub fn empty_subintervals(&self, parts: usize) -> Vec<usize> {
        let (a, b) = self.gap;
        let w = (b - a) / parts as f64;
        (0..parts)
            .filter(|&i| {
                let (lo, hi) = (a + i as f64 * w, a + (i + 1) as f64 * w);
                !self.values.iter().any(|v| v.value > lo && v.value < hi)
            })
            .collect()
    }
}

/// Points of the interpolation grid for cut depths, 40 by default.
pub fn interpolation_grid(r: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| 0.5 - r + 2.0 * r * (i as f64 + 0.5) / points as f64)
        .collect()
}

/// Cut-disc curve on the default 40-point interpolation grid.
pub fn interpolation_curve(r: f64, k_max: usize, h_ladder: &[f64]) -> Result<CutDiscCurve> {
    cut_disc_curve(r, k_max, &interpolation_grid(r, 40), h_ladder)
}

/// Gap eigenvalues of `H_{r,θ}` on the window from a precomputed curve.
/// Every cut disc is solved on its own (by interpolation at its depth) and
/// the result is the multiset union.
pub fn rotated_gap_scan_with(
    curve: &CutDiscCurve,
    angle: &Angle,
    gap: (f64, f64),
    window: f64,
) -> Result<GapScan> {
    let geo = rotated_geometry(curve.r, angle, window)?;
    let cut: Vec<&MuffinDisc> = geo.discs.iter().filter(|d| d.cut).collect();
    let per_disc: Vec<Option<Vec<ScanValue>>> = cut
        .par_iter()
        .map(|d| {
            let t = d.t_eff.unwrap();
            if t < curve.t_grid[0] || t > *curve.t_grid.last().unwrap() {
                return None;
            }
            Some(
                (1..=curve.k_max)
                    .filter_map(|k| {
                        curve.interpolate(k, t).map(|value| ScanValue {
                            value,
                            k,
                            center: d.center,
                            t_eff: t,
                        })
                    })
                    .filter(|v| v.value > gap.0 && v.value < gap.1)
                    .collect(),
            )
        })
        .collect();
    let outside_grid = per_disc.iter().filter(|p| p.is_none()).count();
    let expected: usize = per_disc.iter().flatten().map(Vec::len).sum();
    let mut values: Vec<ScanValue> = per_disc.into_iter().flatten().flatten().collect();
    values.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    if values.len() != expected {
        return Err(Error::contract("union law", "scan lost per-disc values"));
    }
    Ok(GapScan {
        theta: geo.theta,
        gap,
        window,
        cut_discs: cut.len(),
        outside_grid,
        values,
    })
}

pub fn rotated_gap_scan(
    r: f64,
    angle: &Angle,
    gap: (f64, f64),
    window: f64,
    k_max: usize,
    h_ladder: &[f64],
) -> Result<GapScan> {
    let curve = interpolation_curve(r, k_max, h_ladder)?;
    rotated_gap_scan_with(&curve, angle, gap, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_angle_has_no_cut_discs() {
        let g = rotated_geometry(0.45, &Angle::rational(0, 1).unwrap(), 20.0).unwrap();
        assert_eq!(g.cut_count, 0);
        // left and right centers coincide with ℤ² + (½, ½)
        for d in &g.discs {
            assert!(((d.center.0 - 0.5).rem_euclid(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn half_slope_threshold() {
        let a = Angle::rational(1, 2).unwrap();
        let g = rotated_geometry(0.1, &a, 30.0).unwrap();
        let rt = g.r_theta.unwrap();
        assert!((rt - 0.5f64.atan().cos() / 4.0).abs() < 1e-15);
        assert!(!g.excluded_family && !g.centered_cuts);
        // brute force over left centers
        let (s, c) = 0.5f64.atan().sin_cos();
        let mut min = f64::INFINITY;
        for i in -40i64..40 {
            for j in -40i64..40 {
                let x = (c * (i as f64 + 0.5) - s * (j as f64 + 0.5)).abs();
                if x > 1e-12 {
                    min = min.min(x);
                }
            }
        }
        assert!((min - rt).abs() < 1e-12);
        assert_eq!(rotated_geometry(rt * 0.99, &a, 50.0).unwrap().cut_count, 0);
        assert!(rotated_geometry(rt * 1.01, &a, 50.0).unwrap().cut_count > 0);
    }

    #[test]
    fn excluded_family_is_flagged() {
        let g = rotated_geometry(0.1, &Angle::rational(1, 3).unwrap(), 10.0).unwrap();
        assert!(g.excluded_family && g.centered_cuts);
        // centers on the interface are cut at any radius
        assert!(g.cut_count > 0);
        assert!(
            !rotated_geometry(0.1, &Angle::rational(2, 5).unwrap(), 10.0)
                .unwrap()
                .excluded_family
        );
    }

    #[test]
    fn same_half_discs_do_not_overlap() {
        let g = rotated_geometry(0.3, &Angle::float(0.05).unwrap(), 6.0).unwrap();
        for side in [Side::Left, Side::Right] {
            let c: Vec<_> = g.discs.iter().filter(|d| d.side == side).collect();
            for (i, a) in c.iter().enumerate() {
                for b in &c[i + 1..] {
                    let d = (a.center.0 - b.center.0).hypot(a.center.1 - b.center.1);
                    assert!(d > 2.0 * g.r);
                }
            }
        }
        for d in &g.discs {
            assert_eq!(d.cut, d.center.0.abs() < g.r);
        }
    }
}
