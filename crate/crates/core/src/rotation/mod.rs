//! Small-angle grain boundaries: alignment witnesses `(k, η)`, orbit
//! statistics of the torus translation `T_θ(x, y) = (x + tan θ, y + sec θ)`,
//! window comparisons of `V_θ` against `W_t`, and residual certificates for
//! the rotated operator.

mod residual;

pub use residual::{certify_residual, rotation_residual, ResidualCertificate, RotationResidual};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{dislocation, rotated, Potential2D};

/// Rotation angle, either through an exact rational slope `tan θ = p/q` or
/// as a float.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Angle {
    Rational { p: u64, q: u64 },
    Float { theta: f64 },
}

impl Angle {
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Invalid("tan θ = p/0".into()));
        }
        Ok(Angle::Rational { p, q })
    }

    pub fn float(theta: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(Error::Invalid(format!("angle {theta} outside [0, π/2)")));
        }
        Ok(Angle::Float { theta })
    }

    /// Angle with `tan θ = 1/φ`, `φ` the golden ratio.
    pub fn golden() -> Self {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        Angle::Float {
            theta: (1.0 / phi).atan(),
        }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            Angle::Rational { p, q } => (p as f64).atan2(q as f64),
            Angle::Float { theta } => theta,
        }
    }

    pub fn tan(&self) -> f64 {
        match *self {
            Angle::Rational { p, q } => p as f64 / q as f64,
            Angle::Float { theta } => theta.tan(),
        }
    }

    pub fn sec(&self) -> f64 {
        match *self {
            Angle::Rational { p, q } => (p as f64).hypot(q as f64) / q as f64,
            Angle::Float { theta } => 1.0 / theta.cos(),
        }
    }

    /// `√(p² + q²)` when it is an integer (Pythagorean slope).
    pub fn pythagorean(&self) -> Option<u64> {
        match *self {
            Angle::Rational { p, q } => {
                let s2 = p * p + q * q;
                let s = (s2 as f64).sqrt().round() as u64;
                (s * s == s2).then_some(s)
            }
            Angle::Float { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlignmentWitness {
    pub theta: f64,
    pub t: f64,
    pub eps: f64,
    pub k: u64,
    pub eta: u64,
    /// `(|k tan θ − ⌊k tan θ⌋ − t|, |k sec θ − η|)`
    pub defects: (f64, f64),
}

fn defects(angle: &Angle, k: u64, t: f64) -> (u64, (f64, f64)) {
    match *angle {
        Angle::Rational { p, q } => {
            let frac = ((k * p) % q) as f64 / q as f64;
            match angle.pythagorean() {
                Some(s) => {
                    // k s / q exactly: nearest integer, ties to even
                    let num = k * s;
                    let (fl, rem) = (num / q, num % q);
                    let eta = match (2 * rem).cmp(&q) {
                        std::cmp::Ordering::Less => fl,
                        std::cmp::Ordering::Greater => fl + 1,
                        std::cmp::Ordering::Equal => fl + (fl % 2),
                    };
                    let d = (num as i128 - (eta * q) as i128).unsigned_abs() as f64 / q as f64;
                    (eta, ((frac - t).abs(), d))
                }
                None => {
                    let ks = k as f64 * angle.sec();
                    let eta = ks.round_ties_even();
                    (eta as u64, ((frac - t).abs(), (ks - eta).abs()))
                }
            }
        }
        Angle::Float { .. } => {
            let kt = k as f64 * angle.tan();
            let ks = k as f64 * angle.sec();
            let eta = ks.round_ties_even();
            (eta as u64, ((kt - kt.floor() - t).abs(), (ks - eta).abs()))
        }
    }
}

/// Smallest `k ≤ k_max` whose alignment defects are both below `eps`, with
/// `η` the nearest integer to `k sec θ`. `None` is a legitimate answer.
pub fn find_alignment(
    angle: &Angle,
    t: f64,
    eps: f64,
    k_max: u64,
) -> Result<Option<AlignmentWitness>> {
    let theta = angle.theta();
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Invalid(format!(
            "alignment needs θ in (0, π/2), got {theta}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps = {eps}")));
    }
    let hit = (1..=k_max).into_par_iter().find_first(|&k| {
        let (_, d) = defects(angle, k, t);
        d.0 < eps && d.1 < eps
    });
    Ok(hit.map(|k| {
        let (eta, d) = defects(angle, k, t);
        AlignmentWitness {
            theta,
            t,
            eps,
            k,
            eta,
            defects: d,
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitStats {
    pub angle: Angle,
    pub t: f64,
    pub eps: f64,
    pub steps: u64,
    pub visits: u64,
    pub frequency: f64,
    /// both coordinates iterated in integer arithmetic
    pub exact: bool,
}

/// Circular distance on `ℝ/ℤ`.
fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// `x + y` as a rounded sum and its rounding error.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Torus coordinate carried as value plus compensation.
#[derive(Clone, Copy)]
struct Compensated {
    hi: f64,
    lo: f64,
}

impl Compensated {
    fn add(&mut self, step: f64) {
        let (s, e) = two_sum(self.hi, step);
        let lo = self.lo + e;
        let (s, e2) = two_sum(s, lo);
        self.hi = s;
        self.lo = e2;
        if self.hi >= 1.0 {
            self.hi -= 1.0;
        }
    }

    fn value(&self) -> f64 {
        (self.hi + self.lo).rem_euclid(1.0)
    }
}

fn in_box(x: f64, y: f64, t: f64, eps: f64) -> bool {
    circ(x, t) < eps && circ(y, 0.0) < eps
}

/// Frequency of visits of `T_θ^m(0, 0)`, `0 ≤ m < steps`, to the box
/// `(t − ε, t + ε) × (−ε, ε)` on the torus.
pub fn orbit_frequency(angle: &Angle, t: f64, eps: f64, steps: u64) -> Result<OrbitStats> {
    if steps == 0 {
        return Err(Error::Invalid("orbit needs at least one step".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps = {eps}")));
    }
    let mut visits = 0u64;
    let exact;
    match (*angle, angle.pythagorean()) {
        (Angle::Rational { p, q }, Some(s)) => {
            exact = true;
            let (mut a, mut b) = (0u64, 0u64);
            for _ in 0..steps {
                if in_box(a as f64 / q as f64, b as f64 / q as f64, t, eps) {
                    visits += 1;
                }
                a = (a + p) % q;
                b = (b + s) % q;
            }
        }
        (Angle::Rational { p, q }, None) => {
            exact = false;
            let mut a = 0u64;
            let mut y = Compensated { hi: 0.0, lo: 0.0 };
            let sec = angle.sec().fract();
            for _ in 0..steps {
                if in_box(a as f64 / q as f64, y.value(), t, eps) {
                    visits += 1;
                }
                a = (a + p) % q;
                y.add(sec);
            }
        }
        (Angle::Float { .. }, _) => {
            exact = false;
            let (dx, dy) = (angle.tan().fract(), angle.sec().fract());
            let mut x = Compensated { hi: 0.0, lo: 0.0 };
            let mut y = Compensated { hi: 0.0, lo: 0.0 };
            for _ in 0..steps {
                if in_box(x.value(), y.value(), t, eps) {
                    visits += 1;
                }
                x.add(dx);
                y.add(dy);
            }
        }
    }
    Ok(OrbitStats {
        angle: *angle,
        t,
        eps,
        steps,
        visits,
        frequency: visits as f64 / steps as f64,
        exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowDeviation {
    /// `max |V_θ − W_t|` over the sampled window
    pub max: f64,
    /// `L · (2n (sin θ + 1 − cos θ) + δ₁ + δ₂ (sin θ + cos θ))`
    pub bound: f64,
    pub lipschitz: f64,
    pub n: f64,
    pub eta: u64,
}

/// Bound on the coordinate mismatch between `M_{−θ} p` and `p + (t, 0)`
/// modulo `ℤ²` over the half-width-`n` window at `(0, η)`.
pub fn argument_bound(theta: f64, n: f64, defects: (f64, f64)) -> f64 {
    let (s, c) = theta.sin_cos();
    2.0 * n * (s + 1.0 - c) + defects.0 + defects.1 * (s + c)
}

/// Sup-norm deviation of `V_θ` from `W_t` on `Q_n(0, η)`, sampled on a grid
/// of spacing `spacing`.
pub fn window_deviation(
    v: &Potential2D,
    witness: &AlignmentWitness,
    n: f64,
    spacing: f64,
) -> Result<WindowDeviation> {
    let lip = v
        .lipschitz_constant()
        .ok_or_else(|| Error::Invalid("window deviation needs a Lipschitz potential".into()))?;
    let vt = Potential2D::new(rotated(v.spec(), witness.theta)?)?;
    let wt = Potential2D::new(dislocation(v.spec(), witness.t)?)?;
    let m = (2.0 * n / spacing).round() as usize;
    let eta = witness.eta as f64;
    let max = (0..=m)
        .into_par_iter()
        .map(|i| {
            let x = -n + i as f64 * spacing;
            (0..=m)
                .map(|j| {
                    let y = eta - n + j as f64 * spacing;
                    (vt.sample(x, y) - wt.sample(x, y)).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(WindowDeviation {
        max,
        bound: lip * argument_bound(witness.theta, n, witness.defects),
        lipschitz: lip,
        n,
        eta: witness.eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_witness() {
        let a = Angle::rational(3, 4).unwrap();
        let w = find_alignment(&a, 0.0, 1e-3, 100).unwrap().unwrap();
        assert_eq!((w.k, w.eta), (4, 5));
        assert_eq!(w.defects, (0.0, 0.0));
    }

    #[test]
    fn pythagorean_half_shift_has_no_witness() {
        let a = Angle::rational(3, 4).unwrap();
        assert!(find_alignment(&a, 0.5, 0.01, 10_000).unwrap().is_none());
        // exhaustive: the fractional part of 3k/4 is 1/2 only for k ≡ 2 mod 4,
        // and then 5k/4 sits at distance 1/2 from the integers
        for k in 1..10_000u64 {
            let near_t = ((3 * k) % 4) * 2 == 4;
            let near_int = (5 * k) % 4 == 0;
            assert!(!(near_t && near_int));
        }
    }

    #[test]
    fn golden_witness_exists() {
        let w = find_alignment(&Angle::golden(), 0.37, 0.02, 1_000_000)
            .unwrap()
            .unwrap();
        assert!(w.defects.0 < 0.02 && w.defects.1 < 0.02);
        // smallest: no smaller k qualifies (brute force)
        let a = Angle::golden();
        for k in 1..w.k {
            let kt = k as f64 * a.tan();
            let ks = k as f64 * a.sec();
            assert!(!((kt - kt.floor() - 0.37).abs() < 0.02 && (ks - ks.round()).abs() < 0.02));
        }
    }

    #[test]
    fn rational_orbit_matches_closed_form() {
        let a = Angle::rational(3, 4).unwrap();
        let eps = 0.1;
        let s = orbit_frequency(&a, 0.25, eps, 1003).unwrap();
        assert!(s.exact);
        // orbit of (3m/4, 5m/4) mod 1 has period 4: points (0,0), (3/4,1/4), (1/2,1/2), (1/4,3/4)
        let pts = [(0.0, 0.0), (0.75, 0.25), (0.5, 0.5), (0.25, 0.75)];
        let hits: Vec<bool> = pts
            .iter()
            .map(|&(x, y)| circ(x, 0.25) < eps && circ(y, 0.0) < eps)
            .collect();
        let expected = (0..1003).filter(|m| hits[m % 4]).count() as u64;
        assert_eq!(s.visits, expected);
    }

    #[test]
    fn golden_orbit_frequency_is_box_area() {
        let s = orbit_frequency(&Angle::golden(), 0.3, 0.1, 200_000).unwrap();
        assert!((s.frequency - 0.04).abs() < 0.01);
        assert_eq!(
            s,
            orbit_frequency(&Angle::golden(), 0.3, 0.1, 200_000).unwrap()
        );
    }

    #[test]
    fn full_height_box_frequency() {
        // ε = 1/2 covers the torus in y: only the x-condition remains
        let s = orbit_frequency(&Angle::golden(), 0.5, 0.5, 100_000).unwrap();
        assert!((s.frequency - 1.0).abs() < 0.01);
        let s = orbit_frequency(&Angle::golden(), 0.5, 0.25, 100_000).unwrap();
        assert!((s.frequency - 0.25).abs() < 0.01);
    }

    #[test]
    fn deviation_respects_bound_and_grows_with_window() {
        let v = Potential2D::default_cosine();
        let a = Angle::rational(3, 4).unwrap();
        let w = find_alignment(&a, 0.0, 1e-3, 100).unwrap().unwrap();
        let mut prev = 0.0;
        for n in [0.5, 1.0, 2.0] {
            let d = window_deviation(&v, &w, n, 1.0 / 16.0).unwrap();
            assert!(d.max <= d.bound);
            assert!(d.max >= prev);
            prev = d.max;
        }
    }
}
