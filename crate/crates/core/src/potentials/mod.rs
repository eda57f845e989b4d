//! Potential models as pure samplable functions.
//!
//! Every model is described by a serializable [`PotentialSpec`] tree. A spec
//! is validated once and then wrapped as [`Potential1D`] or [`Potential2D`];
//! the wrappers are immutable and `Sync`, so they can be sampled from any
//! number of worker threads.
//!
//! The interface line `x = 0` always belongs to the right piece.

mod spec;

pub use spec::{load_spec, parse_spec};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One constant piece `[start, end) -> value` of a periodic step function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// Fourier term `cos * cos(2π(kx x + ky y)) + sin * sin(2π(kx x + ky y))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub kx: i32,
    #[serde(default)]
    pub ky: i32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl TrigTerm {
    fn amplitude(&self) -> f64 {
        self.cos.hypot(self.sin)
    }
}

/// Serializable description of any potential model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    /// ℤ-periodic step function; used in 2D as `V(x, y) = v(x)`.
    Step { levels: Vec<Level> },
    /// Trigonometric polynomial, periodic in every coordinate.
    Trig {
        #[serde(default = "default_dim")]
        dim: u8,
        #[serde(default)]
        constant: f64,
        terms: Vec<TrigTerm>,
    },
    /// Zero on the discs `B_r(P₀ + (i, j))`, `height` outside (infinite if
    /// omitted).
    Muffin {
        r: f64,
        #[serde(default = "default_center")]
        center: [f64; 2],
        #[serde(default)]
        height: Option<f64>,
    },
    /// `base(x)` for `x ≥ 0`, `base(x + t)` for `x < 0`.
    Dislocation { base: Box<PotentialSpec>, t: f64 },
    /// `base(p)` for `x ≥ 0`, `base(M_{-θ} p)` for `x < 0`.
    Rotation {
        base: Box<PotentialSpec>,
        theta: f64,
    },
    /// `left` on `x < 0`, `right` on `x ≥ 0`.
    Interface {
        left: Box<PotentialSpec>,
        right: Box<PotentialSpec>,
    },
}

fn default_dim() -> u8 {
    1
}

fn default_center() -> [f64; 2] {
    [0.5, 0.5]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Regularity {
    L1loc,
    /// `∫₀¹ |V(x+s) − V(x)| dx ≤ c s^α`
    Holder {
        alpha: f64,
        c: f64,
    },
    Lipschitz {
        l: f64,
    },
}

impl PotentialSpec {
    /// Spatial dimension the spec is natively defined in.
    pub fn dim(&self) -> u8 {
        match self {
            PotentialSpec::Step { .. } => 1,
            PotentialSpec::Trig { dim, .. } => *dim,
            PotentialSpec::Muffin { .. } | PotentialSpec::Rotation { .. } => 2,
            PotentialSpec::Dislocation { base, .. } => base.dim(),
            PotentialSpec::Interface { left, right } => left.dim().max(right.dim()),
        }
    }

    pub fn is_periodic(&self) -> bool {
        match self {
            PotentialSpec::Step { .. }
            | PotentialSpec::Trig { .. }
            | PotentialSpec::Muffin { .. } => true,
            PotentialSpec::Dislocation { t, .. } => *t == 0.0 || *t == 1.0,
            PotentialSpec::Rotation { theta, .. } => *theta == 0.0,
            PotentialSpec::Interface { left, right } => left == right && left.is_periodic(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Step { levels } => validate_levels(levels),
            PotentialSpec::Trig {
                dim,
                constant,
                terms,
            } => {
                if *dim != 1 && *dim != 2 {
                    return Err(Error::Invalid(format!("trig potential dimension {dim}")));
                }
                if !constant.is_finite() {
                    return Err(Error::Invalid("non-finite constant".into()));
                }
                for t in terms {
                    if *dim == 1 && t.ky != 0 {
                        return Err(Error::Invalid("1D trig term with ky != 0".into()));
                    }
                    if !t.cos.is_finite() || !t.sin.is_finite() {
                        return Err(Error::Invalid("non-finite trig coefficient".into()));
                    }
                }
                Ok(())
            }
            PotentialSpec::Muffin { r, center, height } => {
                if !(*r > 0.0 && *r < 0.5) {
                    return Err(Error::Invalid(format!(
                        "muffin-tin radius {r} outside (0, 1/2): discs would touch"
                    )));
                }
                if !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::Invalid("non-finite muffin-tin center".into()));
                }
                if let Some(hgt) = height {
                    if !(*hgt >= 0.0 && hgt.is_finite()) {
                        return Err(Error::Invalid(format!("muffin-tin height {hgt}")));
                    }
                }
                Ok(())
            }
            PotentialSpec::Dislocation { base, t } => {
                if !(0.0..=1.0).contains(t) {
                    return Err(Error::Invalid(format!(
                        "dislocation parameter t = {t} outside [0, 1]"
                    )));
                }
                base.validate()
            }
            PotentialSpec::Rotation { base, theta } => {
                if !(0.0..=PI / 2.0).contains(theta) {
                    return Err(Error::Invalid(format!(
                        "rotation angle {theta} outside [0, π/2]"
                    )));
                }
                base.validate()
            }
            PotentialSpec::Interface { left, right } => {
                left.validate()?;
                right.validate()
            }
        }
    }

    fn sample1(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Step { levels } => {
                let u = x - x.floor();
                levels
                    .iter()
                    .find(|l| u >= l.start && u < l.end)
                    .or(levels.last())
                    .map(|l| l.value)
                    .unwrap_or(0.0)
            }
            PotentialSpec::Trig {
                constant, terms, ..
            } => {
                constant
                    + terms
                        .iter()
                        .map(|t| {
                            let a = 2.0 * PI * t.kx as f64 * x;
                            t.cos * a.cos() + t.sin * a.sin()
                        })
                        .sum::<f64>()
            }
            PotentialSpec::Dislocation { base, t } => {
                if x >= 0.0 {
                    base.sample1(x)
                } else {
                    base.sample1(x + t)
                }
            }
            PotentialSpec::Interface { left, right } => {
                if x >= 0.0 {
                    right.sample1(x)
                } else {
                    left.sample1(x)
                }
            }
            _ => unreachable!("two-dimensional spec sampled on a line"),
        }
    }

    fn sample2(&self, x: f64, y: f64) -> f64 {
        match self {
            PotentialSpec::Step { .. } => self.sample1(x),
            PotentialSpec::Trig { dim: 1, .. } => self.sample1(x),
            PotentialSpec::Trig {
                constant, terms, ..
            } => {
                constant
                    + terms
                        .iter()
                        .map(|t| {
                            let a = 2.0 * PI * (t.kx as f64 * x + t.ky as f64 * y);
                            t.cos * a.cos() + t.sin * a.sin()
                        })
                        .sum::<f64>()
            }
            PotentialSpec::Muffin { r, center, height } => {
                if in_disc_lattice(x, y, *r, *center) {
                    0.0
                } else {
                    height.unwrap_or(f64::INFINITY)
                }
            }
            PotentialSpec::Dislocation { base, t } => {
                if x >= 0.0 {
                    base.sample2(x, y)
                } else {
                    base.sample2(x + t, y)
                }
            }
            PotentialSpec::Rotation { base, theta } => {
                if x >= 0.0 {
                    base.sample2(x, y)
                } else {
                    let (u, v) = rotate(-theta, x, y);
                    base.sample2(u, v)
                }
            }
            PotentialSpec::Interface { left, right } => {
                if x >= 0.0 {
                    right.sample2(x, y)
                } else {
                    left.sample2(x, y)
                }
            }
        }
    }

    fn sup_norm(&self) -> f64 {
        match self {
            PotentialSpec::Step { levels } => {
                levels.iter().map(|l| l.value.abs()).fold(0.0, f64::max)
            }
            PotentialSpec::Trig {
                constant, terms, ..
            } => constant.abs() + terms.iter().map(TrigTerm::amplitude).sum::<f64>(),
            PotentialSpec::Muffin { height, .. } => height.unwrap_or(f64::INFINITY),
            PotentialSpec::Dislocation { base, .. } | PotentialSpec::Rotation { base, .. } => {
                base.sup_norm()
            }
            PotentialSpec::Interface { left, right } => left.sup_norm().max(right.sup_norm()),
        }
    }

    /// Lipschitz constant of the periodic pieces (`None` if discontinuous).
    fn lipschitz(&self) -> Option<f64> {
        match self {
            PotentialSpec::Step { levels } => {
                let distinct = levels.windows(2).any(|w| w[0].value != w[1].value)
                    || levels.first().map(|l| l.value) != levels.last().map(|l| l.value);
                if distinct {
                    None
                } else {
                    Some(0.0)
                }
            }
            PotentialSpec::Trig { terms, .. } => Some(
                terms
                    .iter()
                    .map(|t| 2.0 * PI * (t.kx as f64).hypot(t.ky as f64) * t.amplitude())
                    .sum(),
            ),
            PotentialSpec::Muffin { .. } => None,
            PotentialSpec::Dislocation { base, .. } | PotentialSpec::Rotation { base, .. } => {
                base.lipschitz()
            }
            PotentialSpec::Interface { left, right } => {
                Some(left.lipschitz()?.max(right.lipschitz()?))
            }
        }
    }
}

fn validate_levels(levels: &[Level]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Invalid("step potential without levels".into()));
    }
    let mut sorted: Vec<&Level> = levels.iter().collect();
    sorted.sort_by(|a, b| {
        a.start
            .partial_cmp(&b.start)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut cursor = 0.0;
    for l in sorted {
        if !(l.start < l.end) || !l.value.is_finite() {
            return Err(Error::Invalid(format!(
                "bad level [{}, {})",
                l.start, l.end
            )));
        }
        if l.start < cursor {
            return Err(Error::Invalid(format!("levels overlap at {}", l.start)));
        }
        if l.start > cursor {
            return Err(Error::Invalid(format!(
                "levels leave [{cursor}, {}) uncovered",
                l.start
            )));
        }
        cursor = l.end;
    }
    if cursor != 1.0 {
        return Err(Error::Invalid(format!("levels end at {cursor}, not 1")));
    }
    Ok(())
}

/// `M_θ (x, y)`.
pub fn rotate(theta: f64, x: f64, y: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c * x - s * y, s * x + c * y)
}

fn in_disc_lattice(x: f64, y: f64, r: f64, center: [f64; 2]) -> bool {
    let u = x - center[0];
    let v = y - center[1];
    let u = u - u.round();
    let v = v - v.round();
    u * u + v * v < r * r
}

/// Validated one-dimensional potential.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Potential1D {
    spec: PotentialSpec,
}

impl Potential1D {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        spec.validate()?;
        if spec.dim() != 1 {
            return Err(Error::Invalid(
                "expected a one-dimensional potential".into(),
            ));
        }
        Ok(Potential1D { spec })
    }

    pub fn zero() -> Self {
        Potential1D::new(PotentialSpec::Trig {
            dim: 1,
            constant: 0.0,
            terms: Vec::new(),
        })
        .unwrap()
    }

    pub fn constant(c: f64) -> Result<Self> {
        Potential1D::new(PotentialSpec::Trig {
            dim: 1,
            constant: c,
            terms: Vec::new(),
        })
    }

    /// The two-level step `0` on `[0, ½)`, `20` on `[½, 1)`.
    pub fn default_step() -> Self {
        make_step_potential(&[((0.0, 0.5), 0.0), ((0.5, 1.0), 20.0)]).unwrap()
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn sample(&self, x: f64) -> f64 {
        self.spec.sample1(x)
    }

    pub fn is_periodic(&self) -> bool {
        self.spec.is_periodic()
    }

    /// Period (normalized lattice) for periodic potentials.
    pub fn period(&self) -> Option<f64> {
        self.is_periodic().then_some(1.0)
    }

    pub fn bound(&self) -> f64 {
        self.spec.sup_norm()
    }

    pub fn lipschitz_constant(&self) -> Option<f64> {
        self.spec.lipschitz()
    }

    pub fn regularity(&self) -> Regularity {
        if let Some(l) = self.lipschitz_constant() {
            return Regularity::Lipschitz { l };
        }
        match &self.spec {
            PotentialSpec::Step { levels } => Regularity::Holder {
                alpha: 1.0,
                c: step_total_variation(levels),
            },
            _ => Regularity::L1loc,
        }
    }

    /// Constant pieces over one period, if the potential is a periodic step.
    pub fn levels(&self) -> Option<&[Level]> {
        match &self.spec {
            PotentialSpec::Step { levels } => Some(levels),
            _ => None,
        }
    }

    /// Points of `[0, 1)` where the potential may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.spec {
            PotentialSpec::Step { levels } => {
                let mut b: Vec<f64> = levels.iter().map(|l| l.start).collect();
                b.sort_by(|a, c| a.partial_cmp(c).unwrap());
                b
            }
            _ => Vec::new(),
        }
    }
}

fn step_total_variation(levels: &[Level]) -> f64 {
    let mut sorted: Vec<&Level> = levels.iter().collect();
    sorted.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
    let n = sorted.len();
    (0..n)
        .map(|i| (sorted[(i + 1) % n].value - sorted[i].value).abs())
        .sum()
}

/// Builds a periodic step potential from `((start, end), value)` pieces
/// partitioning `[0, 1)`.
pub fn make_step_potential(levels: &[((f64, f64), f64)]) -> Result<Potential1D> {
    let mut levels: Vec<Level> = levels
        .iter()
        .map(|&((start, end), value)| Level { start, end, value })
        .collect();
    validate_levels(&levels)?;
    levels.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
    Potential1D::new(PotentialSpec::Step { levels })
}

/// Validated two-dimensional potential. One-dimensional specs are accepted
/// and extended as `V(x, y) = v(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Potential2D {
    spec: PotentialSpec,
}

impl Potential2D {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Potential2D { spec })
    }

    /// `−20 (cos 2πx + cos 2πy)`.
    pub fn default_cosine() -> Self {
        Potential2D::cosine(20.0)
    }

    /// `−a (cos 2πx + cos 2πy)`.
    pub fn cosine(a: f64) -> Self {
        Potential2D::new(PotentialSpec::Trig {
            dim: 2,
            constant: 0.0,
            terms: vec![
                TrigTerm {
                    kx: 1,
                    ky: 0,
                    cos: -a,
                    sin: 0.0,
                },
                TrigTerm {
                    kx: 0,
                    ky: 1,
                    cos: -a,
                    sin: 0.0,
                },
            ],
        })
        .unwrap()
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn sample(&self, x: f64, y: f64) -> f64 {
        self.spec.sample2(x, y)
    }

    pub fn is_periodic(&self) -> bool {
        self.spec.is_periodic()
    }

    pub fn bound(&self) -> f64 {
        self.spec.sup_norm()
    }

    pub fn lipschitz_constant(&self) -> Option<f64> {
        self.spec.lipschitz()
    }

    /// Splits `V(x, y) = v₁(x) + v₂(y)` when the structure allows it.
    pub fn separable(&self) -> Option<(Potential1D, Potential1D)> {
        match &self.spec {
            PotentialSpec::Step { .. } | PotentialSpec::Trig { dim: 1, .. } => Some((
                Potential1D::new(self.spec.clone()).ok()?,
                Potential1D::zero(),
            )),
            PotentialSpec::Trig {
                constant, terms, ..
            } => {
                if terms.iter().any(|t| t.kx != 0 && t.ky != 0) {
                    return None;
                }
                let xs: Vec<TrigTerm> = terms.iter().filter(|t| t.ky == 0).cloned().collect();
                let ys: Vec<TrigTerm> = terms
                    .iter()
                    .filter(|t| t.ky != 0)
                    .map(|t| TrigTerm {
                        kx: t.ky,
                        ky: 0,
                        cos: t.cos,
                        sin: t.sin,
                    })
                    .collect();
                Some((
                    Potential1D::new(PotentialSpec::Trig {
                        dim: 1,
                        constant: *constant,
                        terms: xs,
                    })
                    .ok()?,
                    Potential1D::new(PotentialSpec::Trig {
                        dim: 1,
                        constant: 0.0,
                        terms: ys,
                    })
                    .ok()?,
                ))
            }
            PotentialSpec::Dislocation { base, t } => {
                let (vx, vy) = Potential2D::new((**base).clone()).ok()?.separable()?;
                Some((
                    Potential1D::new(PotentialSpec::Dislocation {
                        base: Box::new(vx.spec),
                        t: *t,
                    })
                    .ok()?,
                    vy,
                ))
            }
            PotentialSpec::Interface { left, right } => {
                let (lx, ly) = Potential2D::new((**left).clone()).ok()?.separable()?;
                let (rx, ry) = Potential2D::new((**right).clone()).ok()?.separable()?;
                if ly.spec != ry.spec {
                    return None;
                }
                Some((
                    Potential1D::new(PotentialSpec::Interface {
                        left: Box::new(lx.spec),
                        right: Box::new(rx.spec),
                    })
                    .ok()?,
                    ly,
                ))
            }
            _ => None,
        }
    }

    /// Muffin-tin parameters `(r, center, height)` of a plain muffin tin.
    pub fn muffin(&self) -> Option<(f64, [f64; 2], Option<f64>)> {
        match &self.spec {
            PotentialSpec::Muffin { r, center, height } => Some((*r, *center, *height)),
            _ => None,
        }
    }
}

/// Dislocation `W_t` of a periodic base potential.
pub fn dislocation(base: &PotentialSpec, t: f64) -> Result<PotentialSpec> {
    let spec = PotentialSpec::Dislocation {
        base: Box::new(base.clone()),
        t,
    };
    spec.validate()?;
    Ok(spec)
}

/// Rotated potential `V_θ` of a two-dimensional periodic base.
pub fn rotated(base: &PotentialSpec, theta: f64) -> Result<PotentialSpec> {
    let spec = PotentialSpec::Rotation {
        base: Box::new(base.clone()),
        theta,
    };
    spec.validate()?;
    Ok(spec)
}

/// Two-sided interface potential `χ_{x<0} V₁ + χ_{x≥0} V₂`.
pub fn interface(left: &PotentialSpec, right: &PotentialSpec) -> Result<PotentialSpec> {
    let spec = PotentialSpec::Interface {
        left: Box::new(left.clone()),
        right: Box::new(right.clone()),
    };
    spec.validate()?;
    Ok(spec)
}

/// Samples a one-dimensional dislocation potential at `points`.
pub fn sample_dislocation(w: &Potential1D, points: &[f64]) -> Vec<f64> {
    points.iter().map(|&x| w.sample(x)).collect()
}

/// Samples a two-dimensional (e.g. rotated) potential at `points`.
pub fn sample_rotated(v: &Potential2D, points: &[(f64, f64)]) -> Vec<f64> {
    points.iter().map(|&(x, y)| v.sample(x, y)).collect()
}

/// Real field on the line; implemented by potentials and plain closures.
pub trait Field1D: Sync {
    fn at(&self, x: f64) -> f64;
}

/// Real field on the plane; implemented by potentials and plain closures.
pub trait Field2D: Sync {
    fn at(&self, x: f64, y: f64) -> f64;
}

impl Field1D for Potential1D {
    fn at(&self, x: f64) -> f64 {
        self.sample(x)
    }
}

impl Field2D for Potential2D {
    fn at(&self, x: f64, y: f64) -> f64 {
        self.sample(x, y)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Field1D for F {
    fn at(&self, x: f64) -> f64 {
        self(x)
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Field2D for F {
    fn at(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_step() {
        let v = make_step_potential(&[((0.0, 1.0), 0.0)]).unwrap();
        assert_eq!(v.sample(0.3), 0.0);
    }

    #[test]
    fn default_step_values() {
        let v = Potential1D::default_step();
        assert_eq!(v.sample(0.25), 0.0);
        assert_eq!(v.sample(0.75), 20.0);
        assert_eq!(v.sample(1.25), 0.0);
    }

    #[test]
    fn partition_errors() {
        assert!(make_step_potential(&[((0.0, 0.6), 0.0), ((0.5, 1.0), 1.0)]).is_err());
        assert!(make_step_potential(&[((0.0, 0.4), 0.0), ((0.5, 1.0), 1.0)]).is_err());
        assert!(make_step_potential(&[((0.0, 0.5), 0.0)]).is_err());
    }

    #[test]
    fn step_l1_holder_constant() {
        // ∫₀¹ |V(x+s) − V(x)| dx by exact quadrature over the breakpoints
        let v = Potential1D::default_step();
        for s in [0.01, 0.1, 0.25, 0.5] {
            let mut pts = vec![0.0, 1.0, 0.5, 0.5 - s, 1.0 - s];
            pts.retain(|p| (0.0..=1.0).contains(p));
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let integral: f64 = pts
                .windows(2)
                .map(|w| {
                    let m = 0.5 * (w[0] + w[1]);
                    (w[1] - w[0]) * (v.sample(m + s) - v.sample(m)).abs()
                })
                .sum();
            assert!((integral - 40.0 * s).abs() < 1e-12);
        }
        assert_eq!(
            v.regularity(),
            Regularity::Holder {
                alpha: 1.0,
                c: 40.0
            }
        );
    }

    #[test]
    fn dislocation_substitution() {
        let w = Potential1D::new(dislocation(Potential1D::default_step().spec(), 0.25).unwrap())
            .unwrap();
        assert_eq!(w.sample(-0.1), 0.0);
        let w0 = Potential1D::new(dislocation(Potential1D::default_step().spec(), 0.0).unwrap())
            .unwrap();
        for x in [-3.3, -0.2, 0.0, 0.7] {
            assert_eq!(w0.sample(x), Potential1D::default_step().sample(x));
        }
    }

    #[test]
    fn quarter_turn_of_separable_base() {
        let g = Potential2D::new(PotentialSpec::Trig {
            dim: 2,
            constant: 0.0,
            terms: vec![TrigTerm {
                kx: 1,
                ky: 0,
                cos: 1.0,
                sin: 0.3,
            }],
        })
        .unwrap();
        let r = Potential2D::new(rotated(g.spec(), PI / 2.0).unwrap()).unwrap();
        for (x, y) in [(-0.3, 0.1), (-1.7, 2.2), (-0.01, -0.4)] {
            assert!((r.sample(x, y) - g.sample(y, 0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_split() {
        let v = Potential2D::default_cosine();
        let (a, b) = v.separable().unwrap();
        for (x, y) in [(0.1, 0.7), (0.33, -0.2)] {
            assert!((a.sample(x) + b.sample(y) - v.sample(x, y)).abs() < 1e-12);
        }
        assert!((v.lipschitz_constant().unwrap() - 80.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn muffin_rejects_touching_discs() {
        assert!(Potential2D::new(PotentialSpec::Muffin {
            r: 0.5,
            center: [0.5, 0.5],
            height: None
        })
        .is_err());
        let m = Potential2D::new(PotentialSpec::Muffin {
            r: 0.3,
            center: [0.5, 0.5],
            height: Some(5.0),
        })
        .unwrap();
        assert_eq!(m.sample(0.5, 0.5), 0.0);
        assert_eq!(m.sample(0.0, 0.0), 5.0);
    }

    fn naive_dislocation(x: f64, t: f64) -> f64 {
        let u = if x >= 0.0 { x } else { x + t };
        let frac = u.rem_euclid(1.0);
        if frac < 0.5 {
            0.0
        } else {
            20.0
        }
    }

    proptest! {
        #[test]
        fn step_is_periodic(x in -50.0f64..50.0) {
            let v = Potential1D::default_step();
            let a = v.sample(x);
            let b = v.sample(x + 1.0);
            // exact unless x + 1 rounds across a breakpoint
            let near = [0.0, 0.5, 1.0].iter().any(|b| ((x - x.floor()) - b).abs() < 1e-12);
            prop_assert!(a == b || near);
        }

        #[test]
        fn dislocation_matches_naive(x in -20.0f64..20.0, t in 0.0f64..=1.0) {
            let w = Potential1D::new(dislocation(Potential1D::default_step().spec(), t).unwrap()).unwrap();
            let u = if x >= 0.0 { x } else { x + t };
            let near = [0.0, 0.5, 1.0].iter().any(|b| ((u - u.floor()) - b).abs() < 1e-12);
            prop_assert!(near || w.sample(x) == naive_dislocation(x, t));
        }

        #[test]
        fn dislocation_at_one_is_periodic(x in -20.0f64..20.0) {
            let w = Potential1D::new(dislocation(Potential1D::default_step().spec(), 1.0).unwrap()).unwrap();
            let near = [0.0, 0.5, 1.0].iter().any(|b| ((x - x.floor()) - b).abs() < 1e-12);
            prop_assert!(near || w.sample(x) == Potential1D::default_step().sample(x));
        }

        #[test]
        fn cosine_is_lattice_periodic_and_lipschitz(
            x in -5.0f64..5.0, y in -5.0f64..5.0, dx in -0.1f64..0.1, dy in -0.1f64..0.1
        ) {
            let v = Potential2D::default_cosine();
            prop_assert!((v.sample(x + 1.0, y) - v.sample(x, y)).abs() < 1e-9);
            prop_assert!((v.sample(x, y + 1.0) - v.sample(x, y)).abs() < 1e-9);
            let l = v.lipschitz_constant().unwrap();
            prop_assert!((v.sample(x + dx, y + dy) - v.sample(x, y)).abs() <= l * dx.hypot(dy) + 1e-12);
        }

        #[test]
        fn rotation_zero_is_identity(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let v = Potential2D::default_cosine();
            let r = Potential2D::new(rotated(v.spec(), 0.0).unwrap()).unwrap();
            prop_assert_eq!(r.sample(x, y), v.sample(x, y));
        }

        #[test]
        fn rotation_right_half_translation(
            x in 0.0f64..5.0, y in -5.0f64..5.0, i in 0i32..4, j in -4i32..4, theta in 0.0f64..1.5
        ) {
            let v = Potential2D::default_cosine();
            let r = Potential2D::new(rotated(v.spec(), theta).unwrap()).unwrap();
            let a = r.sample(x, y);
            let b = r.sample(x + i as f64, y + j as f64);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
