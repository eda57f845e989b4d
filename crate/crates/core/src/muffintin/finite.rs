//! Muffin tins of finite height `n`: `H_0 + n V_{r,θ}` with `V_{r,θ}` zero
//! on `Ω_{r,θ}` and one elsewhere, on a Dirichlet box.

use serde::Serialize;

use crate::discretize::assemble_box;
use crate::error::Result;
use crate::potentials::{rotated, Potential2D, PotentialSpec};
use crate::rotation::Angle;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteHeightSpectrum {
    pub r: f64,
    pub theta: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub h: f64,
    pub window: (f64, f64),
    pub dim: usize,
    pub values: Vec<f64>,
}

/// `n V_{r,θ}` as a potential.
pub fn finite_muffin(r: f64, angle: &Angle, height: f64) -> Result<Potential2D> {
    let base = PotentialSpec::Muffin {
        r,
        center: [0.5, 0.5],
        height: Some(height),
    };
    Potential2D::new(rotated(&base, angle.theta())?)
}

/// Eigenvalues in `window` of `H_0 + n V_{r,θ}` on the Dirichlet box
/// `x_range × y_range`.
pub fn finite_height_spectrum(
    r: f64,
    angle: &Angle,
    height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    window: (f64, f64),
    h: f64,
) -> Result<FiniteHeightSpectrum> {
    let v = finite_muffin(r, angle, height)?;
    let op = assemble_box(&v, x_range, y_range, h)?;
    let tol = 1e-9 * (1.0 + window.0.abs().max(window.1.abs()));
    let values = op.counter().values_in(window.0, window.1, tol)?;
    Ok(FiniteHeightSpectrum {
        r,
        theta: angle.theta(),
        height,
        x_range,
        y_range,
        h,
        window,
        dim: op.dim(),
        values,
    })
}
