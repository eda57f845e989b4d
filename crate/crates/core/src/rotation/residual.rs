//! Transplanting a dislocation eigenfunction into the rotated lattice.
//!
//! The approximate eigenfunction of `W_t` on `(−n, n)²` is shifted up by `η`
//! and zero-padded into the Dirichlet box `(−N, N) × (η − N, η + N)` with
//! `N = ⌈1.25 n⌉`. Its `x`-grid is the dislocated grid, so both `A_θ` and
//! the reference operator with `W_t` act on exactly the same unknowns and
//! differ only in the diagonal. That makes
//! `‖(A_θ − E)w‖ ≤ ‖(A_t − E)w‖ + max_{supp w}|V_θ − W_t| · ‖w‖`
//! an identity of the discrete operators.

use serde::Serialize;

use super::AlignmentWitness;
use crate::discretize::{assemble_tensor, Axis, Boundary, Geometry, TensorOp};
use crate::dislocation::approximate_eigenfunction;
use crate::error::{Error, Result};
use crate::potentials::{dislocation, rotated, Potential2D};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotationResidual {
    pub theta: f64,
    pub t: f64,
    pub k: u64,
    pub eta: u64,
    pub e: f64,
    pub n: usize,
    pub h: f64,
    /// window `Q_n(0, η)`
    pub window_center: (f64, f64),
    pub window_half_width: f64,
    pub box_x: (f64, f64),
    pub box_y: (f64, f64),
    pub dim: usize,
    /// residual of the untransplanted function on `(−n, n)²`
    pub source_residual: f64,
    /// `‖(A_t − E)w‖` on the large box
    pub r0: f64,
    /// `max |V_θ − W_t|` over node averages on `supp w`
    pub deviation: f64,
    pub w_norm: f64,
    /// `‖(A_θ − E)w‖`
    pub residual: f64,
}

struct Transplant {
    report: RotationResidual,
    bx: Axis,
    by: Axis,
    rotated: Potential2D,
}

fn transplant(
    v: &Potential2D,
    witness: &AlignmentWitness,
    e: f64,
    n: usize,
    h: f64,
    seed: u64,
) -> Result<Transplant> {
    let (d1, d2) = witness.defects;
    if !(d1 < witness.eps && d2 < witness.eps) {
        return Err(Error::Invalid(format!(
            "alignment defects ({d1}, {d2}) are not below ε = {}",
            witness.eps
        )));
    }
    let t = witness.t;
    let src = approximate_eigenfunction(v, t, e, n, h, seed)?;
    let big = (1.25 * n as f64).ceil();
    let eta = witness.eta as f64;
    let bx = Axis::dislocated_interval(big, t, h)?;
    let by = Axis::uniform(eta - big, eta + big, h, Boundary::Dirichlet)?;
    let x0 = bx
        .nodes
        .iter()
        .position(|&x| (x - src.ax.nodes[0]).abs() < 1e-9 * h)
        .ok_or_else(|| Error::contract("grid transfer", "window nodes are not box nodes"))?;
    let y0 = by
        .nodes
        .iter()
        .position(|&y| (y - eta - src.ay.nodes[0]).abs() < 1e-9 * h)
        .ok_or_else(|| Error::contract("grid transfer", "window nodes are not box nodes"))?;
    let (sny, ny) = (src.ay.len(), by.len());
    let mut w = vec![0.0; bx.len() * ny];
    for i in 0..src.ax.len() {
        let (a, b) = ((x0 + i) * ny + y0, i * sny);
        w[a..a + sny].copy_from_slice(&src.w[b..b + sny]);
    }

    let wt = Potential2D::new(dislocation(v.spec(), t)?)?;
    let vt = Potential2D::new(rotated(v.spec(), witness.theta)?)?;
    let ref_op = TensorOp::new(&wt, bx.clone(), by.clone())?;
    let rot_op = TensorOp::new(&vt, bx.clone(), by.clone())?;
    let r0 = ref_op.residual(&w, e);
    let residual = rot_op.residual(&w, e);
    let deviation = w
        .iter()
        .zip(ref_op.potential.iter().zip(&rot_op.potential))
        .filter(|(x, _)| **x != 0.0)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    let w_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();

    let bound = r0 + deviation * w_norm;
    if residual > bound * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::contract(
            "rotation residual",
            format!("residual {residual} exceeds r0 + deviation·‖w‖ = {bound}"),
        ));
    }
    let report = RotationResidual {
        theta: witness.theta,
        t,
        k: witness.k,
        eta: witness.eta,
        e,
        n,
        h,
        window_center: (0.0, eta),
        window_half_width: n as f64,
        box_x: (-big, big),
        box_y: (eta - big, eta + big),
        dim: w.len(),
        source_residual: src.residual,
        r0,
        deviation,
        w_norm,
        residual,
    };
    Ok(Transplant {
        report,
        bx,
        by,
        rotated: vt,
    })
}

/// `‖(A_θ − E)w‖` for the approximate eigenfunction of `W_t` at `E`,
/// transplanted to the window `Q_n(0, η)` named by the witness. One
/// matrix-vector product, no eigensolve.
pub fn rotation_residual(
    v: &Potential2D,
    witness: &AlignmentWitness,
    e: f64,
    n: usize,
    h: f64,
    seed: u64,
) -> Result<RotationResidual> {
    transplant(v, witness, e, n, h, seed).map(|t| t.report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualCertificate {
    pub residual: RotationResidual,
    /// eigenvalues of the assembled `A_θ` in `(E − ρ, E + ρ)`
    pub count: usize,
}

/// Residual plus a sparse inertia count confirming that `A_θ` has an
/// eigenvalue within the residual of `E`. Meant for small boxes.
pub fn certify_residual(
    v: &Potential2D,
    witness: &AlignmentWitness,
    e: f64,
    n: usize,
    h: f64,
    seed: u64,
) -> Result<ResidualCertificate> {
    let tr = transplant(v, witness, e, n, h, seed)?;
    let r = tr.report;
    let op = assemble_tensor(
        &tr.rotated,
        tr.bx,
        tr.by,
        Geometry::Box {
            x: r.box_x,
            y: r.box_y,
        },
    );
    let rho = r.residual / r.w_norm;
    let count = op.count_in_interval(e - rho, e + rho)?;
    if count == 0 {
        return Err(Error::contract(
            "rotation certificate",
            format!("no eigenvalue of A_θ within {rho} of {e}"),
        ));
    }
    Ok(ResidualCertificate { residual: r, count })
}
