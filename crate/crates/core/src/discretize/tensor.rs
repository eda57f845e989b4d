//! Matrix-free application of a real tensor-grid operator
//! `A_x ⊗ I + I ⊗ A_y + diag(V)`, for boxes too large to assemble.

use rayon::prelude::*;

use super::{node_average_2d, Axis};
use crate::error::{Error, Result};
use crate::potentials::Field2D;

#[derive(Clone, Debug)]
pub struct TensorOp {
    pub ax: Axis,
    pub ay: Axis,
    dx: Vec<f64>,
    xnbr: Vec<Vec<(usize, f64)>>,
    dy: Vec<f64>,
    ly: Vec<(usize, usize, f64)>,
    pub potential: Vec<f64>,
}

impl TensorOp {
    pub fn new<V: Field2D + ?Sized>(v: &V, ax: Axis, ay: Axis) -> Result<Self> {
        if ax.is_complex() || ay.is_complex() {
            return Err(Error::Invalid(
                "matrix-free tensor operator is real only".into(),
            ));
        }
        let ny = ay.len();
        let potential: Vec<f64> = (0..ax.len() * ny)
            .into_par_iter()
            .map(|k| node_average_2d(v, &ax, &ay, k / ny, k % ny))
            .collect();
        let (dx, lx) = ax.real_kinetic();
        let (dy, ly) = ay.real_kinetic();
        let mut xnbr = vec![Vec::new(); ax.len()];
        for (a, b, c) in lx {
            xnbr[a].push((b, c));
            xnbr[b].push((a, c));
        }
        Ok(TensorOp {
            ax,
            ay,
            dx,
            xnbr,
            dy,
            ly,
            potential,
        })
    }

    pub fn dim(&self) -> usize {
        self.ax.len() * self.ay.len()
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let ny = self.ay.len();
        let mut out = vec![0.0; w.len()];
        out.par_chunks_mut(ny).enumerate().for_each(|(ix, row)| {
            let base = ix * ny;
            for iy in 0..ny {
                row[iy] = (self.dx[ix] + self.dy[iy] + self.potential[base + iy]) * w[base + iy];
            }
            for &(a, b, c) in &self.ly {
                row[a] += c * w[base + b];
                row[b] += c * w[base + a];
            }
            for &(b, c) in &self.xnbr[ix] {
                for iy in 0..ny {
                    row[iy] += c * w[b * ny + iy];
                }
            }
        });
        out
    }

    /// `‖(A − E) w‖` in the Euclidean norm of the symmetrized unknowns.
    pub fn residual(&self, w: &[f64], e: f64) -> f64 {
        let aw = self.apply(w);
        aw.par_iter()
            .zip(w.par_iter())
            .map(|(a, b)| (a - e * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
