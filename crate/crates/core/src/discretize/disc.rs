//! Staircase Dirichlet masks for discs and interface-cut discs.
//!
//! Unknowns are the nodes `(ih, jh)` of the absolute grid strictly inside
//! the domain; every node outside is a zero Dirichlet value.

use num_complex::Complex64;
use serde::Serialize;

use super::{AssembledOperator, Boundary, Geometry, OperatorMatrix};
use crate::error::{Error, Result};

/// Disc `B_r(center)`, optionally cut to `{x < 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscGeometry {
    pub center: (f64, f64),
    pub r: f64,
    pub cut: bool,
}

impl DiscGeometry {
    pub fn disc(center: (f64, f64), r: f64) -> Self {
        DiscGeometry {
            center,
            r,
            cut: false,
        }
    }

    pub fn cut_disc(center: (f64, f64), r: f64) -> Self {
        DiscGeometry {
            center,
            r,
            cut: true,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        dx * dx + dy * dy < self.r * self.r && (!self.cut || x < 0.0)
    }
}

/// Grid indices `(i, j)` of the nodes inside the domain, sorted.
pub fn disc_mask(g: &DiscGeometry, h: f64) -> Vec<(i64, i64)> {
    let i0 = ((g.center.0 - g.r) / h).floor() as i64 - 1;
    let i1 = ((g.center.0 + g.r) / h).ceil() as i64 + 1;
    let j0 = ((g.center.1 - g.r) / h).floor() as i64 - 1;
    let j1 = ((g.center.1 + g.r) / h).ceil() as i64 + 1;
    let mut out = Vec::new();
    for i in i0..=i1 {
        for j in j0..=j1 {
            if g.contains(i as f64 * h, j as f64 * h) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Dirichlet Laplacian on the staircase mask. An empty mask is reported as
/// [`Error::EmptyDomain`]: the domain has no eigenvalues below `+∞`.
pub fn assemble_disc(g: &DiscGeometry, h: f64) -> Result<AssembledOperator> {
    if !(g.r >= 4.0 * h) {
        return Err(Error::TooCoarse(format!(
            "radius {} below 4h = {}",
            g.r,
            4.0 * h
        )));
    }
    let mask = disc_mask(g, h);
    if mask.is_empty() {
        return Err(Error::EmptyDomain(format!(
            "no grid node inside the disc at ({}, {}) with r = {}",
            g.center.0, g.center.1, g.r
        )));
    }
    let index: std::collections::HashMap<(i64, i64), usize> =
        mask.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let c = 1.0 / (h * h);
    let mut trip = Vec::with_capacity(mask.len() * 5);
    for (k, &(i, j)) in mask.iter().enumerate() {
        trip.push((k, k, Complex64::new(4.0 * c, 0.0)));
        for nb in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
            if let Some(&l) = index.get(&nb) {
                trip.push((k, l, Complex64::new(-c, 0.0)));
            }
        }
    }
    let geometry = if g.cut {
        Geometry::CutDisc {
            center: g.center,
            r: g.r,
        }
    } else {
        Geometry::Disc {
            center: g.center,
            r: g.r,
        }
    };
    Ok(AssembledOperator {
        matrix: OperatorMatrix::from_triplets(mask.len(), trip, false),
        geometry,
        bc: vec![Boundary::Dirichlet, Boundary::Dirichlet],
        axes: Vec::new(),
        node_potential: vec![0.0; mask.len()],
    })
}
