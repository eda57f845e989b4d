//! One-dimensional grids.
//!
//! Every operator is the symmetrized finite-volume form
//! `M^{-1/2} K M^{-1/2}` of the three-point stencil: `K` is the stiffness
//! matrix built from cell lengths and `M` is diagonal with the dual-cell
//! length of each node. On uniform cells this is the standard
//! `(−u_{i−1} + 2u_i − u_{i+1}) / h²` stencil.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
    /// `u(x + L) = e^{iφ} u(x)`
    Bloch {
        phase: f64,
    },
}

impl Boundary {
    /// Bloch phases are normalized into `[0, 2π)`.
    pub fn bloch(phase: f64) -> Self {
        Boundary::Bloch {
            phase: phase.rem_euclid(2.0 * std::f64::consts::PI),
        }
    }

    fn wraps(&self) -> bool {
        !matches!(self, Boundary::Dirichlet)
    }
}

/// Nodes and cells of a 1D grid on `[lo, hi]`.
///
/// Wrapping boundaries: `cells[i]` joins node `i` to node `i + 1`, the last
/// cell wraps to `nodes[0] + (hi − lo)`. Dirichlet: `cells[0]` joins `lo`
/// to node 0 and `cells[N]` joins the last node to `hi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub cells: Vec<f64>,
    pub bc: Boundary,
}

/// Cells shorter than this fraction of `h` are merged away.
const SHORT_CELL: f64 = 1e-7;

/// Number of cells per unit length, requiring `1/h` to be an integer.
pub fn cells_per_unit(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Invalid(format!("mesh size h = {h} outside (0, 1]")));
    }
    let m = (1.0 / h).round();
    if (m * h - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "1/h must be an integer, got h = {h}"
        )));
    }
    Ok(m as usize)
}

impl Axis {
    fn check(self) -> Result<Self> {
        // Dirichlet grids count their two boundary nodes
        let total = self.nodes.len() + if self.bc.wraps() { 0 } else { 2 };
        if self.nodes.is_empty() || total < 3 {
            return Err(Error::TooCoarse(format!(
                "{} nodes on [{}, {}]",
                self.nodes.len(),
                self.lo,
                self.hi
            )));
        }
        Ok(self)
    }

    /// Uniform grid with spacing close to `h`: `round((hi − lo)/h)` cells.
    pub fn uniform(lo: f64, hi: f64, h: f64, bc: Boundary) -> Result<Self> {
        if !(hi > lo) || !(h > 0.0) {
            return Err(Error::Invalid(format!(
                "interval [{lo}, {hi}] with h = {h}"
            )));
        }
        let ncell = ((hi - lo) / h).round().max(1.0) as usize;
        let step = (hi - lo) / ncell as f64;
        let (nodes, cells) = if bc.wraps() {
            (
                (0..ncell).map(|i| lo + i as f64 * step).collect(),
                vec![step; ncell],
            )
        } else {
            (
                (1..ncell).map(|i| lo + i as f64 * step).collect(),
                vec![step; ncell],
            )
        };
        Axis {
            lo,
            hi,
            nodes,
            cells,
            bc,
        }
        .check()
    }

    /// Ring `(−n − t, n)` for the dislocated section: nodes at `jh` on the
    /// right, `−t − ih` on the left and `−t + ih` across `[−t, 0)`. One cell
    /// of length `t mod h` touches `x = 0`; at `t = 0` there are `2n/h`
    /// nodes and at `t = 1` there are `(2n + 1)/h`.
    pub fn dislocated_ring(n: usize, t: f64, h: f64, bc: Boundary) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Invalid(format!(
                "dislocation parameter {t} outside [0, 1]"
            )));
        }
        if !bc.wraps() {
            return Err(Error::Invalid(
                "dislocated ring needs a wrapping boundary".into(),
            ));
        }
        let m = cells_per_unit(h)?;
        let h = 1.0 / m as f64;
        let mut nodes = Vec::new();
        for i in (1..=n * m).rev() {
            nodes.push(-t - i as f64 * h);
        }
        nodes.extend(interface_nodes(t, m));
        for j in 0..n * m {
            nodes.push(j as f64 * h);
        }
        let lo = -(n as f64) - t;
        let hi = n as f64;
        let mut cells: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        cells.push(hi - nodes[nodes.len() - 1]);
        // the first node is exactly lo; keep it
        nodes[0] = lo;
        cells[0] = nodes[1] - lo;
        Axis {
            lo,
            hi,
            nodes,
            cells,
            bc,
        }
        .check()
    }

    /// Dirichlet interval `(−n, n)` carrying the same nodes as
    /// [`Axis::dislocated_ring`] restricted to it; a short cell may touch
    /// `−n`.
    pub fn dislocated_interval(n: f64, t: f64, h: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Invalid(format!(
                "dislocation parameter {t} outside [0, 1]"
            )));
        }
        if !(n > 0.0) {
            return Err(Error::Invalid(format!("box half-width {n}")));
        }
        let m = cells_per_unit(h)?;
        let h = 1.0 / m as f64;
        let mut nodes = Vec::new();
        let mut i = 1usize;
        loop {
            let x = -t - i as f64 * h;
            if x <= -n + SHORT_CELL * h {
                break;
            }
            nodes.push(x);
            i += 1;
        }
        nodes.reverse();
        nodes.extend(
            interface_nodes(t, m)
                .into_iter()
                .filter(|&x| x > -n + SHORT_CELL * h),
        );
        let mut j = 0usize;
        loop {
            let x = j as f64 * h;
            if x >= n - SHORT_CELL * h {
                break;
            }
            nodes.push(x);
            j += 1;
        }
        let mut cells = vec![nodes[0] + n];
        cells.extend(nodes.windows(2).map(|w| w[1] - w[0]));
        cells.push(n - nodes[nodes.len() - 1]);
        Axis {
            lo: -n,
            hi: n,
            nodes,
            cells,
            bc: Boundary::Dirichlet,
        }
        .check()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn left_cell(&self, i: usize) -> f64 {
        match self.bc {
            Boundary::Dirichlet => self.cells[i],
            _ => self.cells[(i + self.len() - 1) % self.len()],
        }
    }

    fn right_cell(&self, i: usize) -> f64 {
        match self.bc {
            Boundary::Dirichlet => self.cells[i + 1],
            _ => self.cells[i],
        }
    }

    /// Dual-cell lengths (diagonal of `M`).
    pub fn masses(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| 0.5 * (self.left_cell(i) + self.right_cell(i)))
            .collect()
    }

    /// Quadrature points `(x, weight)` of the dual cell of node `i`: the
    /// midpoints of its two half-cells. Exact for potentials that are
    /// constant between nodes.
    pub fn dual_points(&self, i: usize) -> [(f64, f64); 2] {
        let x = self.nodes[i];
        let l = self.left_cell(i);
        let r = self.right_cell(i);
        [(x - 0.25 * l, 0.5 * l), (x + 0.25 * r, 0.5 * r)]
    }

    /// Symmetrized kinetic operator as (row, col, value) triplets, no
    /// potential.
    pub fn kinetic_triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.len();
        let m = self.masses();
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            let d = (1.0 / self.left_cell(i) + 1.0 / self.right_cell(i)) / m[i];
            out.push((i, i, Complex64::new(d, 0.0)));
        }
        let links = if self.bc.wraps() { n } else { n - 1 };
        for i in 0..links {
            let j = (i + 1) % n;
            let c = self.right_cell(i);
            let w = -1.0 / (c * (m[i] * m[j]).sqrt());
            let phase = match self.bc {
                Boundary::Bloch { phase } if j == 0 => Complex64::from_polar(1.0, phase),
                _ => Complex64::new(1.0, 0.0),
            };
            // u_{i+1} = e^{iφ} u_0 across the wrap
            out.push((i, j, phase * w));
            out.push((j, i, phase.conj() * w));
        }
        out
    }

    /// Real symmetric tridiagonal-plus-corner kinetic entries
    /// `(diag, links)` with `links[k] = (i, j, w)`; Bloch phases are not
    /// representable here.
    pub fn real_kinetic(&self) -> (Vec<f64>, Vec<(usize, usize, f64)>) {
        let n = self.len();
        let mut diag = vec![0.0; n];
        let mut links = Vec::new();
        for (i, j, v) in self.kinetic_triplets() {
            if i == j {
                diag[i] += v.re;
            } else if i < j {
                links.push((i, j, v.re));
            }
        }
        (diag, links)
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.bc, Boundary::Bloch { phase } if phase != 0.0)
    }
}

/// Nodes `−t + ih` in `[−t, 0)`; the last one is dropped when it falls
/// within the short-cell threshold of `0`.
fn interface_nodes(t: f64, m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let x = -t + i as f64 * h;
        if x > -SHORT_CELL * h {
            break;
        }
        out.push(x);
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_node_counts() {
        let h = 1.0 / 8.0;
        for n in 1..4 {
            assert_eq!(
                Axis::dislocated_ring(n, 0.0, h, Boundary::Periodic)
                    .unwrap()
                    .len(),
                2 * n * 8
            );
            assert_eq!(
                Axis::dislocated_ring(n, 1.0, h, Boundary::Periodic)
                    .unwrap()
                    .len(),
                (2 * n + 1) * 8
            );
        }
    }

    #[test]
    fn ring_cells_sum_to_length() {
        for t in [0.0, 0.1, 0.37, 0.5, 0.999, 1.0] {
            let a = Axis::dislocated_ring(2, t, 1.0 / 16.0, Boundary::Periodic).unwrap();
            let total: f64 = a.cells.iter().sum();
            assert!((total - (4.0 + t)).abs() < 1e-12);
            assert!(a.cells.iter().all(|&c| c > 0.0 && c <= 1.0 / 16.0 + 1e-12));
        }
    }

    #[test]
    fn interval_matches_ring_nodes_inside() {
        let t = 0.3;
        let h = 1.0 / 10.0;
        let ring = Axis::dislocated_ring(3, t, h, Boundary::Periodic).unwrap();
        let boxed = Axis::dislocated_interval(2.0, t, h).unwrap();
        let inside: Vec<f64> = ring
            .nodes
            .iter()
            .copied()
            .filter(|&x| x > -2.0 && x < 2.0)
            .collect();
        assert_eq!(inside.len(), boxed.len());
        for (a, b) in inside.iter().zip(&boxed.nodes) {
            assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = boxed.cells.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn non_integer_inverse_mesh_rejected() {
        assert!(cells_per_unit(0.3).is_err());
        assert_eq!(cells_per_unit(0.001).unwrap(), 1000);
    }
}
