//! Finite-difference assembly of `−Δ + V` on intervals, strips, boxes and
//! discs.
//!
//! Potentials enter through dual-cell averages (midpoint rule on the two
//! half-cells of each node), which keeps step potentials with jumps on grid
//! nodes exact. Bloch conditions produce complex Hermitian matrices; all
//! other boundary conditions produce real symmetric ones. 2D unknowns are
//! ordered with `y` fastest: index `ix * ny + iy`.

mod axis;
mod disc;
mod tensor;

pub use axis::{cells_per_unit, Axis, Boundary};
pub use disc::{assemble_disc, disc_mask, DiscGeometry};
pub use tensor::TensorOp;

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::eigensolve::{self, Certificate, EigenResult, InertiaCounter, Window};
use crate::error::{Error, Result};
use crate::potentials::{Field1D, Field2D};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Interval { a: f64, b: f64 },
    Strip { a: f64, b: f64 },
    Box { x: (f64, f64), y: (f64, f64) },
    Disc { center: (f64, f64), r: f64 },
    CutDisc { center: (f64, f64), r: f64 },
}

/// Real symmetric or complex Hermitian sparse matrix.
#[derive(Clone, Debug)]
pub enum OperatorMatrix {
    Real(CsrMatrix<f64>),
    Complex(CsrMatrix<Complex64>),
}

impl OperatorMatrix {
    fn from_triplets(n: usize, trip: Vec<(usize, usize, Complex64)>, complex: bool) -> Self {
        if complex {
            OperatorMatrix::Complex(CsrMatrix::from_triplets(n, &trip))
        } else {
            let real: Vec<(usize, usize, f64)> =
                trip.into_iter().map(|(i, j, v)| (i, j, v.re)).collect();
            OperatorMatrix::Real(CsrMatrix::from_triplets(n, &real))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorMatrix::Real(m) => m.dim(),
            OperatorMatrix::Complex(m) => m.dim(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        match self {
            OperatorMatrix::Real(m) => m.is_hermitian(),
            OperatorMatrix::Complex(m) => m.is_hermitian(),
        }
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        match self {
            OperatorMatrix::Real(m) => m.gershgorin(),
            OperatorMatrix::Complex(m) => m.gershgorin(),
        }
    }

    pub fn write_matrix_market<W: Write>(&self, out: W) -> std::io::Result<()> {
        match self {
            OperatorMatrix::Real(m) => m.write_matrix_market(out),
            OperatorMatrix::Complex(m) => m.write_matrix_market(out),
        }
    }

    pub fn dense_eigenvalues(&self) -> Vec<f64> {
        match self {
            OperatorMatrix::Real(m) => crate::sparse::dense_eigenvalues(m),
            OperatorMatrix::Complex(m) => crate::sparse::dense_eigenvalues(m),
        }
    }

    pub fn as_real(&self) -> Option<&CsrMatrix<f64>> {
        match self {
            OperatorMatrix::Real(m) => Some(m),
            OperatorMatrix::Complex(_) => None,
        }
    }
}

/// Inertia counter over either scalar field.
pub enum Counter {
    Real(InertiaCounter<f64>),
    Complex(InertiaCounter<Complex64>),
}

impl Counter {
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        match self {
            Counter::Real(c) => c.count_below(sigma),
            Counter::Complex(c) => c.count_below(sigma),
        }
    }

    pub fn count_in_interval(&self, a: f64, b: f64) -> Result<usize> {
        match self {
            Counter::Real(c) => c.count_in_interval(a, b),
            Counter::Complex(c) => c.count_in_interval(a, b),
        }
    }

    /// Eigenvalues in `(a, b)` by count bisection.
    pub fn values_in(&self, a: f64, b: f64, tol: f64) -> Result<Vec<f64>> {
        Ok(match self {
            Counter::Real(c) => {
                eigensolve::eigs_by_bisection(c, Window::Interval(a, b), tol)?.values
            }
            Counter::Complex(c) => {
                eigensolve::eigs_by_bisection(c, Window::Interval(a, b), tol)?.values
            }
        })
    }

    /// Eigenvalues in `(a, b)` with the inertia certificate of the
    /// (possibly nudged) window.
    pub fn spectrum(&self, a: f64, b: f64, tol: f64) -> Result<(Vec<f64>, Certificate)> {
        Ok(match self {
            Counter::Real(c) => {
                let r = eigensolve::eigs_by_bisection(c, Window::Interval(a, b), tol)?;
                (r.values, r.certificate)
            }
            Counter::Complex(c) => {
                let r = eigensolve::eigs_by_bisection(c, Window::Interval(a, b), tol)?;
                (r.values, r.certificate)
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Counter::Real(c) => c.dim(),
            Counter::Complex(c) => c.dim(),
        }
    }
}

/// Sparse operator together with the grid it lives on.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub matrix: OperatorMatrix,
    pub geometry: Geometry,
    /// boundary condition per direction (x, then y for 2D)
    pub bc: Vec<Boundary>,
    /// tensor grids: one axis per direction; empty for masked domains
    pub axes: Vec<Axis>,
    /// potential at each unknown (dual-cell average)
    pub node_potential: Vec<f64>,
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn counter(&self) -> Counter {
        match &self.matrix {
            OperatorMatrix::Real(m) => Counter::Real(InertiaCounter::new(m.clone())),
            OperatorMatrix::Complex(m) => Counter::Complex(InertiaCounter::new(m.clone())),
        }
    }

    pub fn count_in_interval(&self, a: f64, b: f64) -> Result<usize> {
        self.counter().count_in_interval(a, b)
    }

    /// Real eigenpairs in a window (shift-invert Lanczos).
    pub fn eigenpairs(&self, a: f64, b: f64, tol: f64, seed: u64) -> Result<EigenResult<f64>> {
        match &self.matrix {
            OperatorMatrix::Real(m) => {
                let c = InertiaCounter::new(m.clone());
                eigensolve::interior_eigs(&c, Window::Interval(a, b), tol, true, seed)
            }
            OperatorMatrix::Complex(_) => Err(Error::Invalid(
                "real eigenpairs requested from a Bloch operator".into(),
            )),
        }
    }
}

fn node_average_1d<V: Field1D + ?Sized>(v: &V, axis: &Axis, i: usize) -> f64 {
    let pts = axis.dual_points(i);
    let m: f64 = pts.iter().map(|p| p.1).sum();
    pts.iter().map(|&(x, w)| w * v.at(x)).sum::<f64>() / m
}

pub(crate) fn node_average_2d<V: Field2D + ?Sized>(
    v: &V,
    ax: &Axis,
    ay: &Axis,
    i: usize,
    j: usize,
) -> f64 {
    let px = ax.dual_points(i);
    let py = ay.dual_points(j);
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for &(x, wx) in &px {
        for &(y, wy) in &py {
            acc += wx * wy * v.at(x, y);
            wsum += wx * wy;
        }
    }
    acc / wsum
}

/// `−d²/dx² + V` on a given axis.
pub fn assemble_on_axis<V: Field1D + ?Sized>(
    v: &V,
    axis: Axis,
    geometry: Geometry,
) -> AssembledOperator {
    let n = axis.len();
    let pot: Vec<f64> = (0..n).map(|i| node_average_1d(v, &axis, i)).collect();
    let mut trip = axis.kinetic_triplets();
    for (i, &p) in pot.iter().enumerate() {
        trip.push((i, i, Complex64::new(p, 0.0)));
    }
    AssembledOperator {
        matrix: OperatorMatrix::from_triplets(n, trip, axis.is_complex()),
        geometry,
        bc: vec![axis.bc],
        axes: vec![axis],
        node_potential: pot,
    }
}

/// `−d²/dx² + V` on `(a, b)` with spacing `h`.
pub fn assemble_1d<V: Field1D + ?Sized>(
    v: &V,
    interval: (f64, f64),
    bc: Boundary,
    h: f64,
) -> Result<AssembledOperator> {
    let (a, b) = interval;
    if !(b - a >= 2.0 * h) {
        return Err(Error::TooCoarse(format!(
            "interval ({a}, {b}) shorter than 2h"
        )));
    }
    let axis = Axis::uniform(a, b, h, bc)?;
    Ok(assemble_on_axis(v, axis, Geometry::Interval { a, b }))
}

/// Dislocated section `(−n − t, n)` with periodic (or Bloch) closure.
pub fn assemble_section_1d<V: Field1D + ?Sized>(
    v: &V,
    n: usize,
    t: f64,
    bc: Boundary,
    h: f64,
) -> Result<AssembledOperator> {
    let axis = Axis::dislocated_ring(n, t, h, bc)?;
    Ok(assemble_on_axis(
        v,
        axis,
        Geometry::Interval {
            a: -(n as f64) - t,
            b: n as f64,
        },
    ))
}

/// `−Δ + V` on the tensor grid `ax × ay`.
pub fn assemble_tensor<V: Field2D + ?Sized>(
    v: &V,
    ax: Axis,
    ay: Axis,
    geometry: Geometry,
) -> AssembledOperator {
    let nx = ax.len();
    let ny = ay.len();
    let dim = nx * ny;
    let pot: Vec<f64> = (0..dim)
        .map(|k| node_average_2d(v, &ax, &ay, k / ny, k % ny))
        .collect();
    let tx = ax.kinetic_triplets();
    let ty = ay.kinetic_triplets();
    let mut trip = Vec::with_capacity(dim * 5);
    for ix in 0..nx {
        for &(a, b, w) in &ty {
            trip.push((ix * ny + a, ix * ny + b, w));
        }
    }
    for iy in 0..ny {
        for &(a, b, w) in &tx {
            trip.push((a * ny + iy, b * ny + iy, w));
        }
    }
    for (k, &p) in pot.iter().enumerate() {
        trip.push((k, k, Complex64::new(p, 0.0)));
    }
    let complex = ax.is_complex() || ay.is_complex();
    AssembledOperator {
        matrix: OperatorMatrix::from_triplets(dim, trip, complex),
        geometry,
        bc: vec![ax.bc, ay.bc],
        axes: vec![ax, ay],
        node_potential: pot,
    }
}

/// Strip `(−n − t, n) × (0, 1)`: periodic in `x`, `transverse` in `y`.
pub fn assemble_strip<V: Field2D + ?Sized>(
    v: &V,
    t: f64,
    n: usize,
    transverse: Boundary,
    h: f64,
) -> Result<AssembledOperator> {
    assemble_strip_with(v, t, n, Boundary::Periodic, transverse, h)
}

/// Strip with an explicit longitudinal closure (Bloch in `x` gives the
/// fibers of a periodic cell).
pub fn assemble_strip_with<V: Field2D + ?Sized>(
    v: &V,
    t: f64,
    n: usize,
    longitudinal: Boundary,
    transverse: Boundary,
    h: f64,
) -> Result<AssembledOperator> {
    if matches!(transverse, Boundary::Dirichlet) {
        return Err(Error::Invalid(
            "strip transverse condition must be periodic or Bloch".into(),
        ));
    }
    let ax = Axis::dislocated_ring(n, t, h, longitudinal)?;
    let ay = Axis::uniform(0.0, 1.0, h, transverse)?;
    Ok(assemble_tensor(
        v,
        ax,
        ay,
        Geometry::Strip {
            a: -(n as f64) - t,
            b: n as f64,
        },
    ))
}

/// Dirichlet box `x_range × y_range` with uniform spacing `h`.
pub fn assemble_box<V: Field2D + ?Sized>(
    v: &V,
    x_range: (f64, f64),
    y_range: (f64, f64),
    h: f64,
) -> Result<AssembledOperator> {
    if !(x_range.1 - x_range.0 >= 2.0 * h && y_range.1 - y_range.0 >= 2.0 * h) {
        return Err(Error::TooCoarse("box side shorter than 2h".into()));
    }
    let ax = Axis::uniform(x_range.0, x_range.1, h, Boundary::Dirichlet)?;
    let ay = Axis::uniform(y_range.0, y_range.1, h, Boundary::Dirichlet)?;
    Ok(assemble_tensor(
        v,
        ax,
        ay,
        Geometry::Box {
            x: x_range,
            y: y_range,
        },
    ))
}

/// Dirichlet box `(−n, n)²` whose `x`-grid follows the dislocation `t`
/// (same nodes as the strip `(−n − t, n)`).
pub fn assemble_dislocated_box<V: Field2D + ?Sized>(
    v: &V,
    n: f64,
    t: f64,
    h: f64,
) -> Result<AssembledOperator> {
    let ax = Axis::dislocated_interval(n, t, h)?;
    let ay = Axis::uniform(-n, n, h, Boundary::Dirichlet)?;
    Ok(assemble_tensor(
        v,
        ax,
        ay,
        Geometry::Box {
            x: (-n, n),
            y: (-n, n),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Potential1D, Potential2D};
    use std::f64::consts::PI;

    fn zero1(_: f64) -> f64 {
        0.0
    }

    #[test]
    fn circulant_spectrum() {
        let op = assemble_1d(&zero1, (0.0, 1.0), Boundary::Periodic, 0.25).unwrap();
        let ev = op.matrix.dense_eigenvalues();
        let expect = [0.0, 32.0, 32.0, 64.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(op.count_in_interval(-1.0, 1.0).unwrap(), 1);
        assert_eq!(op.count_in_interval(31.0, 65.0).unwrap(), 3);
    }

    #[test]
    fn constant_shift() {
        let c = 3.5;
        let shifted = move |_: f64| c;
        let a = assemble_1d(&zero1, (0.0, 1.0), Boundary::Periodic, 0.1)
            .unwrap()
            .matrix
            .dense_eigenvalues();
        let b = assemble_1d(&shifted, (0.0, 1.0), Boundary::Periodic, 0.1)
            .unwrap()
            .matrix
            .dense_eigenvalues();
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - c).abs() < 1e-10);
        }
    }

    #[test]
    fn too_coarse_rejected() {
        assert!(assemble_1d(&zero1, (0.0, 1.0), Boundary::Periodic, 0.5).is_err());
    }

    #[test]
    fn dirichlet_box_product() {
        let z = |_: f64, _: f64| 0.0;
        let h = 1.0 / 3.0;
        let op = assemble_box(&z, (0.0, 1.0), (0.0, 1.0), h).unwrap();
        let lam: Vec<f64> = (1..3)
            .map(|k| (2.0 - 2.0 * (k as f64 * PI / 3.0).cos()) / (h * h))
            .collect();
        let mut expect: Vec<f64> = lam
            .iter()
            .flat_map(|a| lam.iter().map(move |b| a + b))
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ev = op.matrix.dense_eigenvalues();
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(op.matrix.gershgorin().0 <= ev[0]);
    }

    #[test]
    fn free_strip_is_sum_of_circulants() {
        let z = |_: f64, _: f64| 0.0;
        let h = 0.25;
        let op = assemble_strip(&z, 0.0, 1, Boundary::Periodic, h).unwrap();
        let cx: Vec<f64> = (0..8)
            .map(|k| (2.0 - 2.0 * (2.0 * PI * k as f64 / 8.0).cos()) / (h * h))
            .collect();
        let cy: Vec<f64> = (0..4)
            .map(|k| (2.0 - 2.0 * (2.0 * PI * k as f64 / 4.0).cos()) / (h * h))
            .collect();
        let mut expect: Vec<f64> = cx
            .iter()
            .flat_map(|a| cy.iter().map(move |b| a + b))
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ev = op.matrix.dense_eigenvalues();
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn strip_node_counts_follow_t() {
        let z = |_: f64, _: f64| 0.0;
        let h = 0.25;
        for n in 1..3 {
            let a = assemble_strip(&z, 0.0, n, Boundary::Periodic, h).unwrap();
            let b = assemble_strip(&z, 1.0, n, Boundary::Periodic, h).unwrap();
            assert_eq!(a.axes[0].len(), 2 * n * 4);
            assert_eq!(b.axes[0].len(), (2 * n + 1) * 4);
        }
    }

    #[test]
    fn separable_strip_tensor_oracle() {
        let v = Potential2D::new(Potential1D::default_step().spec().clone()).unwrap();
        let h = 0.125;
        let strip = assemble_strip(&v, 0.0, 1, Boundary::Periodic, h).unwrap();
        let line = assemble_section_1d(&Potential1D::default_step(), 1, 0.0, Boundary::Periodic, h)
            .unwrap();
        let ex = line.matrix.dense_eigenvalues();
        let ey: Vec<f64> = (0..8)
            .map(|k| (2.0 - 2.0 * (2.0 * PI * k as f64 / 8.0).cos()) / (h * h))
            .collect();
        let mut expect: Vec<f64> = ex
            .iter()
            .flat_map(|a| ey.iter().map(move |b| a + b))
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ev = strip.matrix.dense_eigenvalues();
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bloch_is_hermitian_and_phase_normalized() {
        let op = assemble_1d(&zero1, (0.0, 1.0), Boundary::bloch(-1.0), 0.1).unwrap();
        assert!(op.matrix.is_hermitian());
        match op.bc[0] {
            Boundary::Bloch { phase } => assert!((phase - (2.0 * PI - 1.0)).abs() < 1e-12),
            _ => panic!(),
        }
        // free Bloch spectrum: (2 − 2cos((φ + 2πk)/N)) / h²
        let ev = op.matrix.dense_eigenvalues();
        let phi = 2.0 * PI - 1.0;
        let mut expect: Vec<f64> = (0..10)
            .map(|k| (2.0 - 2.0 * ((phi + 2.0 * PI * k as f64) / 10.0).cos()) / 0.01)
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_shift_commutes_with_periodic_operator() {
        // window of 3 whole cells, shift by one cell = 8 nodes
        let v = Potential1D::default_step();
        let op = assemble_1d(&v, (0.0, 3.0), Boundary::Periodic, 0.125).unwrap();
        let n = op.dim();
        let perm: Vec<usize> = (0..n).map(|i| (i + 8) % n).collect();
        assert_eq!(op.matrix.as_real().unwrap().commutator_norm(&perm), 0.0);
    }

    #[test]
    fn step_fd_matches_dense_oracle_fine_grid() {
        // values from the sparse path agree with dense diagonalization
        let v = Potential1D::default_step();
        let op = assemble_1d(&v, (0.0, 2.0), Boundary::Periodic, 1e-2).unwrap();
        let dense = op.matrix.dense_eigenvalues();
        let c = op.counter();
        let vals = c.values_in(-1.0, 60.0, 1e-11).unwrap();
        let expect: Vec<f64> = dense
            .iter()
            .copied()
            .filter(|&e| e > -1.0 && e < 60.0)
            .collect();
        assert_eq!(vals.len(), expect.len());
        for (a, b) in vals.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn richardson_ratio_smooth_potential() {
        let v = |x: f64| 10.0 * (2.0 * PI * x).cos();
        let lows = |h: f64| {
            let op = assemble_1d(&v, (0.0, 1.0), Boundary::Periodic, h).unwrap();
            op.counter().values_in(-20.0, 300.0, 1e-11).unwrap()[..5].to_vec()
        };
        let (a, b, c) = (lows(1.0 / 20.0), lows(1.0 / 40.0), lows(1.0 / 80.0));
        for k in 0..5 {
            let ratio = (a[k] - b[k]) / (b[k] - c[k]);
            assert!((3.5..=4.5).contains(&ratio), "mode {k}: ratio {ratio}");
        }
    }
}
