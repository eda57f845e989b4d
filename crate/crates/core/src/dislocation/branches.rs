//! Continuation of gap eigenvalues in `t` and the net crossing count.

use rayon::prelude::*;
use serde::Serialize;

use super::{discrete_gap, dislocated};
use crate::discretize::{assemble_section_1d, Boundary};
use crate::error::{Error, Result};
use crate::potentials::Potential1D;

/// Local refinement levels (factor 4 each) before a seam is recorded.
const MAX_REFINE: usize = 3;
/// `t`-resolution of birth and death points.
const EVENT_T_TOL: f64 = 1e-13;
/// Branch ends this close to the end of the parameter range count as ends
/// at the boundary: right after `t = 0` the interface cell has length `t`
/// and the matrix norm grows like `1/(t h)`.
pub const PARAMETER_END: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    /// lower gap edge
    A,
    /// upper gap edge
    B,
    /// `t` at the end of the parameter range
    Boundary,
    /// inside the gap (continuation seam)
    Interior,
}

impl Edge {
    pub fn label(&self) -> &'static str {
        match self {
            Edge::A => "a",
            Edge::B => "b",
            Edge::Boundary => "boundary",
            Edge::Interior => "interior",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Grid,
    Refined,
    Event,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchPoint {
    pub t: f64,
    pub value: f64,
    pub kind: PointKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub id: usize,
    pub entry: Edge,
    pub exit: Edge,
    pub points: Vec<BranchPoint>,
}

impl Branch {
    /// `(t_start, t_end)` in the order of traversal.
    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].t, self.points[self.points.len() - 1].t)
    }

    /// Largest difference quotient between consecutive grid or refined
    /// points.
    pub fn max_slope(&self) -> f64 {
        let pts: Vec<&BranchPoint> = self
            .points
            .iter()
            .filter(|p| p.kind != PointKind::Event)
            .collect();
        pts.windows(2)
            .map(|w| ((w[1].value - w[0].value) / (w[1].t - w[0].t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Matching failure that survived all refinement levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Seam {
    pub t0: f64,
    pub t1: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchFamily {
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub tol: f64,
    /// gap of the discrete periodic operator
    pub gap: (f64, f64),
    /// gap shrunk by `4 tol` at both edges
    pub window: (f64, f64),
    pub t_grid: Vec<f64>,
    pub branches: Vec<Branch>,
    pub seams: Vec<Seam>,
}

impl BranchFamily {
    pub fn max_slope(&self) -> f64 {
        self.branches
            .iter()
            .map(Branch::max_slope)
            .fold(0.0, f64::max)
    }

    /// Branches whose end values are not within `slack` of a gap edge
    /// (ends within [`PARAMETER_END`] of `t = 0` or `t = 1` are exempt).
    pub fn edge_law_violations(&self, slack: f64) -> Vec<usize> {
        let near = |v: f64| (v - self.gap.0).abs() <= slack || (self.gap.1 - v).abs() <= slack;
        let at_end = |p: &BranchPoint| p.t <= PARAMETER_END || p.t >= 1.0 - PARAMETER_END;
        self.branches
            .iter()
            .filter(|b| {
                let first = b.points[0];
                let last = b.points[b.points.len() - 1];
                let ok_first = b.entry == Edge::Boundary || at_end(&first) || near(first.value);
                let ok_last = b.exit == Edge::Boundary || at_end(&last) || near(last.value);
                !(ok_first && ok_last)
            })
            .map(|b| b.id)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossingReport {
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub n_k: i64,
    pub downward: usize,
    pub upward: usize,
    /// branches entering and leaving through the same edge
    pub returning: usize,
    pub seams: usize,
    /// `(id, entry, exit)` per branch
    pub ledger: Vec<(usize, Edge, Edge)>,
}

struct Tracker<'a> {
    v: &'a Potential1D,
    n: usize,
    h: f64,
    tol: f64,
    window: (f64, f64),
}

impl Tracker<'_> {
    fn spectrum(&self, t: f64) -> Result<Vec<f64>> {
        let w = dislocated(self.v, t)?;
        let op = assemble_section_1d(&w, self.n, t, Boundary::Periodic, self.h)?;
        op.counter()
            .values_in(self.window.0, self.window.1, self.tol)
    }

    fn zone_count(&self, t: f64, zone: (f64, f64)) -> Result<usize> {
        let w = dislocated(self.v, t)?;
        let op = assemble_section_1d(&w, self.n, t, Boundary::Periodic, self.h)?;
        op.count_in_interval(zone.0, zone.1)
    }

    fn width(&self) -> f64 {
        self.window.1 - self.window.0
    }

    /// Zone of width `gap / 4` next to the nearest window edge of `x`, if
    /// `x` lies in one.
    fn edge_zone(&self, x: f64) -> Option<(Edge, (f64, f64))> {
        let q = self.width() / 4.0;
        if x - self.window.0 <= q {
            Some((Edge::A, (self.window.0, self.window.0 + q)))
        } else if self.window.1 - x <= q {
            Some((Edge::B, (self.window.1 - q, self.window.1)))
        } else {
            None
        }
    }

    /// Locates the `t` between `t_in` (value present) and `t_out` (absent)
    /// at which the zone count changes from `c_in` to `c_out`; returns the
    /// last value inside the window, nearest the edge.
    fn event(&self, t_in: f64, t_out: f64, zone: (f64, f64), edge: Edge) -> Result<(f64, f64)> {
        let c_in = self.zone_count(t_in, zone)?;
        let (mut a, mut b) = (t_in, t_out);
        while (b - a).abs() > EVENT_T_TOL {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if self.zone_count(m, zone)? >= c_in {
                a = m;
            } else {
                b = m;
            }
        }
        let w = dislocated(self.v, a)?;
        let op = assemble_section_1d(&w, self.n, a, Boundary::Periodic, self.h)?;
        let vals = op.counter().values_in(zone.0, zone.1, self.tol * 0.1)?;
        let value = match edge {
            Edge::A => vals.first().copied(),
            _ => vals.last().copied(),
        }
        .unwrap_or(match edge {
            Edge::A => zone.0,
            _ => zone.1,
        });
        Ok((a, value))
    }
}

/// Matching of two value lists, `Some(j)` for every matched `i`.
fn match_lists(l0: &[f64], l1: &[f64], cap: f64) -> Vec<Option<usize>> {
    let spacing = |l: &[f64]| {
        l.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    };
    let thr = cap.min(0.5 * spacing(l0)).min(0.5 * spacing(l1));
    let nearest = |x: f64, l: &[f64]| {
        l.iter()
            .enumerate()
            .map(|(j, &y)| (j, (x - y).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    };
    l0.iter()
        .map(|&x| match nearest(x, l1) {
            Some((j, d)) if d < thr => match nearest(l1[j], l0) {
                Some((_, d2)) if d2 >= d => Some(j),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

#[derive(Clone)]
struct Frame {
    t: f64,
    values: Vec<f64>,
    kind: PointKind,
}

/// Interior frames between two frames such that every consecutive pair
/// matches cleanly, refining by 4 up to [`MAX_REFINE`] levels.
fn refine(tr: &Tracker, f0: &Frame, f1: &Frame, depth: usize) -> Result<Vec<Frame>> {
    if depth >= MAX_REFINE || clean(tr, &f0.values, &f1.values) {
        return Ok(Vec::new());
    }
    let ts: Vec<f64> = (1..4)
        .map(|i| f0.t + (f1.t - f0.t) * i as f64 / 4.0)
        .collect();
    let specs: Vec<Result<Vec<f64>>> = ts.par_iter().map(|&t| tr.spectrum(t)).collect();
    let mut chain = vec![f0.clone()];
    for (t, s) in ts.into_iter().zip(specs) {
        chain.push(Frame {
            t,
            values: s?,
            kind: PointKind::Refined,
        });
    }
    chain.push(f1.clone());
    let mut out = Vec::new();
    for i in 0..chain.len() - 1 {
        out.extend(refine(tr, &chain[i], &chain[i + 1], depth + 1)?);
        if i + 1 < chain.len() - 1 {
            out.push(chain[i + 1].clone());
        }
    }
    Ok(out)
}

/// Unmatched values per edge zone `[a, b]`, or `None` when some unmatched
/// value lies away from both edges.
fn events_per_edge(
    tr: &Tracker,
    l0: &[f64],
    l1: &[f64],
    m: &[Option<usize>],
) -> Option<[usize; 2]> {
    let mut hit = vec![false; l1.len()];
    let mut per_edge = [0usize; 2];
    let mut tally = |x: f64| -> bool {
        match tr.edge_zone(x) {
            Some((e, _)) => {
                per_edge[(e == Edge::B) as usize] += 1;
                true
            }
            None => false,
        }
    };
    for (i, j) in m.iter().enumerate() {
        match j {
            Some(j) => hit[*j] = true,
            None => {
                if !tally(l0[i]) {
                    return None;
                }
            }
        }
    }
    for (h, &y) in hit.iter().zip(l1) {
        if !*h && !tally(y) {
            return None;
        }
    }
    Some(per_edge)
}

fn clean(tr: &Tracker, l0: &[f64], l1: &[f64]) -> bool {
    let m = match_lists(l0, l1, tr.width() / 4.0);
    // at most one event per edge zone keeps event location unambiguous
    matches!(events_per_edge(tr, l0, l1, &m), Some(c) if c.iter().all(|&c| c <= 1))
}

/// Tracks the gap-`k` eigenvalues of the sections on a uniform grid of
/// `t_steps` points in `[0, 1]`.
pub fn track_branches(
    v: &Potential1D,
    k: usize,
    n: usize,
    t_steps: usize,
    h: f64,
    tol: f64,
) -> Result<BranchFamily> {
    if t_steps < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 t-steps, got {t_steps}"
        )));
    }
    let grid: Vec<f64> = (0..t_steps)
        .map(|i| i as f64 / (t_steps - 1) as f64)
        .collect();
    track_on_grid(v, k, n, &grid, h, tol)
}

/// Tracks gap-`k` branches along an arbitrary monotone `t` grid (it may
/// run from 1 down to 0).
pub fn track_on_grid(
    v: &Potential1D,
    k: usize,
    n: usize,
    grid: &[f64],
    h: f64,
    tol: f64,
) -> Result<BranchFamily> {
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance {tol}")));
    }
    let monotone = grid.windows(2).all(|w| w[1] > w[0]) || grid.windows(2).all(|w| w[1] < w[0]);
    if grid.len() < 2 || !monotone || grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Invalid(
            "t grid must be monotone inside [0, 1]".into(),
        ));
    }
    let gap = discrete_gap(v, k, h, tol * 0.1)?;
    let window = (gap.lower + 4.0 * tol, gap.upper - 4.0 * tol);
    if !(window.1 > window.0) {
        return Err(Error::DegenerateGap { k });
    }
    let tr = Tracker {
        v,
        n,
        h,
        tol,
        window,
    };

    let specs: Vec<Result<Vec<f64>>> = grid.par_iter().map(|&t| tr.spectrum(t)).collect();
    let mut frames = Vec::with_capacity(grid.len());
    for (&t, s) in grid.iter().zip(specs) {
        frames.push(Frame {
            t,
            values: s?,
            kind: PointKind::Grid,
        });
    }

    let mut branches: Vec<Branch> = Vec::new();
    let mut seams = Vec::new();
    // open branch index per value of the current frame
    let mut open: Vec<usize> = Vec::new();
    let ends = (grid[0], grid[grid.len() - 1]);
    for &x in &frames[0].values {
        open.push(branches.len());
        branches.push(Branch {
            id: branches.len(),
            entry: Edge::Boundary,
            exit: Edge::Boundary,
            points: vec![BranchPoint {
                t: ends.0,
                value: x,
                kind: PointKind::Grid,
            }],
        });
    }

    for g in 0..frames.len() - 1 {
        let seq = refine(&tr, &frames[g], &frames[g + 1], 0)?;
        let mut path: Vec<&Frame> = vec![&frames[g]];
        path.extend(seq.iter());
        path.push(&frames[g + 1]);
        for w in path.windows(2) {
            let (f0, f1) = (w[0], w[1]);
            let m = match_lists(&f0.values, &f1.values, tr.width() / 4.0);
            let mut next_open = vec![usize::MAX; f1.values.len()];
            let per_edge =
                events_per_edge(&tr, &f0.values, &f1.values, &m).unwrap_or([usize::MAX; 2]);
            let single = |e: Edge| per_edge[(e == Edge::B) as usize] == 1;
            for (i, j) in m.iter().enumerate() {
                let b = open[i];
                match j {
                    Some(j) => {
                        next_open[*j] = b;
                        branches[b].points.push(BranchPoint {
                            t: f1.t,
                            value: f1.values[*j],
                            kind: f1.kind,
                        });
                    }
                    None => {
                        let x = f0.values[i];
                        match tr.edge_zone(x).filter(|z| single(z.0)) {
                            Some((edge, zone)) => {
                                let (te, ve) = tr.event(f0.t, f1.t, zone, edge)?;
                                branches[b].points.push(BranchPoint {
                                    t: te,
                                    value: ve,
                                    kind: PointKind::Event,
                                });
                                branches[b].exit = edge;
                            }
                            None => {
                                seams.push(Seam {
                                    t0: f0.t,
                                    t1: f1.t,
                                    value: x,
                                });
                                branches[b].exit = Edge::Interior;
                            }
                        }
                    }
                }
            }
            for (j, slot) in next_open.iter_mut().enumerate() {
                if *slot != usize::MAX {
                    continue;
                }
                let y = f1.values[j];
                let id = branches.len();
                let (entry, first) = match tr.edge_zone(y).filter(|z| single(z.0)) {
                    Some((edge, zone)) => {
                        // searched from the side where the value exists
                        let (te, ve) = tr.event(f1.t, f0.t, zone, edge)?;
                        (
                            edge,
                            BranchPoint {
                                t: te,
                                value: ve,
                                kind: PointKind::Event,
                            },
                        )
                    }
                    None => {
                        seams.push(Seam {
                            t0: f0.t,
                            t1: f1.t,
                            value: y,
                        });
                        (
                            Edge::Interior,
                            BranchPoint {
                                t: f0.t,
                                value: y,
                                kind: PointKind::Event,
                            },
                        )
                    }
                };
                branches.push(Branch {
                    id,
                    entry,
                    exit: Edge::Boundary,
                    points: vec![
                        first,
                        BranchPoint {
                            t: f1.t,
                            value: y,
                            kind: f1.kind,
                        },
                    ],
                });
                *slot = id;
            }
            open = next_open;
        }
    }
    Ok(BranchFamily {
        k,
        n,
        h,
        tol,
        gap: (gap.lower, gap.upper),
        window,
        t_grid: grid.to_vec(),
        branches,
        seams,
    })
}

/// Net number of branches crossing gap `k` downward: entering at `b` and
/// leaving at `a`, minus the reverse. Seams are excluded and counted.
pub fn crossing_count(family: &BranchFamily) -> CrossingReport {
    let mut downward = 0;
    let mut upward = 0;
    let mut returning = 0;
    let mut ledger = Vec::new();
    for b in &family.branches {
        match (b.entry, b.exit) {
            (Edge::B, Edge::A) => downward += 1,
            (Edge::A, Edge::B) => upward += 1,
            (Edge::A, Edge::A) | (Edge::B, Edge::B) => returning += 1,
            _ => {}
        }
        ledger.push((b.id, b.entry, b.exit));
    }
    CrossingReport {
        k: family.k,
        n: family.n,
        h: family.h,
        n_k: downward as i64 - upward as i64,
        downward,
        upward,
        returning,
        seams: family.seams.len(),
        ledger,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_respects_spacing() {
        let m = match_lists(&[1.0, 2.0], &[1.1, 2.05], 3.0);
        assert_eq!(m, vec![Some(0), Some(1)]);
        let m = match_lists(&[1.0], &[1.6], 3.0);
        assert_eq!(m, vec![Some(0)]);
        let m = match_lists(&[1.0, 1.2], &[1.25], 3.0);
        assert_eq!(m, vec![None, Some(0)]);
    }

    #[test]
    fn free_operator_has_no_gap() {
        let r = track_branches(&Potential1D::zero(), 1, 2, 5, 1.0 / 50.0, 1e-8);
        assert!(matches!(r, Err(Error::DegenerateGap { .. })));
    }

    #[test]
    fn single_downward_branch_in_first_gap() {
        let v = Potential1D::default_step();
        let fam = track_branches(&v, 1, 2, 21, 1.0 / 100.0, 1e-7).unwrap();
        let rep = crossing_count(&fam);
        assert_eq!(rep.seams, 0);
        assert_eq!(rep.n_k, 1, "{rep:?}");
        assert!(fam.edge_law_violations(5.0 * fam.tol).is_empty());
        let rev: Vec<f64> = fam.t_grid.iter().rev().copied().collect();
        let back = crossing_count(&track_on_grid(&v, 1, 2, &rev, 1.0 / 100.0, 1e-7).unwrap());
        assert_eq!(back.n_k, -1);
        assert_eq!((back.downward, back.upward), (rep.upward, rep.downward));
    }
}
