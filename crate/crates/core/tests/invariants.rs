//! Property tests against independent oracles: dense diagonalization for
//! counts, one-period enumeration for rational orbits, direct evaluation for
//! alignment defects, and Bessel scaling for disc spectra.

use gapcross::dislocation::band_count_check;
use gapcross::eigensolve::reference::reference_spectrum;
use gapcross::eigensolve::{InertiaCounter, Tridiagonal};
use gapcross::muffintin::bessel_disc_eigenvalues;
use gapcross::potentials::Potential1D;
use gapcross::rotation::{find_alignment, orbit_frequency, Angle};
use gapcross::sparse::{dense_eigenvalues, CsrMatrix, Scalar};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(seed: u64, n: usize, fill: f64) -> CsrMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, Complex64::new(rng.gen_range(-4.0..4.0), 0.0)));
        for j in (i + 1)..n {
            if rng.gen_bool(fill) {
                let v = Complex64::sample(&mut rng);
                t.push((i, j, v));
                t.push((j, i, v.conj()));
            }
        }
    }
    CsrMatrix::from_triplets(n, &t)
}

fn away_from(spec: &[f64], x: f64) -> bool {
    spec.iter().all(|e| (e - x).abs() > 1e-8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inertia_counts_match_dense(seed in any::<u64>(), n in 2usize..60, fill in 0.02f64..0.3, x in -6.0f64..6.0) {
        let a = random_hermitian(seed, n, fill);
        let dense = dense_eigenvalues(&a);
        prop_assume!(away_from(&dense, x));
        let c = InertiaCounter::new(a).count_below(x).unwrap();
        prop_assert_eq!(c, dense.partition_point(|&e| e < x));
    }

    #[test]
    fn reference_spectrum_matches_dense(seed in any::<u64>(), n in 2usize..60, fill in 0.02f64..0.3) {
        let a = random_hermitian(seed, n, fill);
        for (r, d) in reference_spectrum(&a).iter().zip(dense_eigenvalues(&a)) {
            prop_assert!((r - d).abs() < 1e-10);
        }
    }

    #[test]
    fn sturm_counts_match_dense(d in prop::collection::vec(-3.0f64..3.0, 2..40), x in -5.0f64..5.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let off: Vec<f64> = (1..d.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut t = Vec::new();
        for (i, &v) in d.iter().enumerate() {
            t.push((i, i, v));
        }
        for (i, &v) in off.iter().enumerate() {
            t.push((i, i + 1, v));
            t.push((i + 1, i, v));
        }
        let dense = dense_eigenvalues(&CsrMatrix::from_triplets(d.len(), &t));
        prop_assume!(away_from(&dense, x));
        let tri = Tridiagonal::new(d, off).unwrap();
        prop_assert_eq!(tri.count_below(x), dense.partition_point(|&e| e < x));
    }

    #[test]
    fn rational_orbit_frequency_is_periodic(which in 0usize..3, t in 0.0f64..1.0, eps in 0.01f64..0.3, periods in 1u64..50) {
        let (p, q, s) = [(3u64, 4u64, 5u64), (5, 12, 13), (8, 15, 17)][which];
        let circ = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(1.0);
            d.min(1.0 - d)
        };
        // one period of the orbit enumerates every residue class once
        let per_period = (0..q)
            .filter(|m| circ((m * p % q) as f64 / q as f64, t) < eps && circ((m * s % q) as f64 / q as f64, 0.0) < eps)
            .count() as u64;
        let stats = orbit_frequency(&Angle::rational(p, q).unwrap(), t, eps, periods * q).unwrap();
        prop_assert!(stats.exact);
        prop_assert_eq!(stats.visits, per_period * periods);
    }

    #[test]
    fn witnesses_are_first_and_within_eps(theta in 0.05f64..1.5, t in 0.0f64..1.0, eps in 0.02f64..0.2) {
        let angle = Angle::float(theta).unwrap();
        let defect = |k: u64| {
            let kt = k as f64 * theta.tan();
            let ks = k as f64 / theta.cos();
            ((kt - kt.floor() - t).abs(), (ks - ks.round()).abs())
        };
        match find_alignment(&angle, t, eps, 20_000).unwrap() {
            Some(w) => {
                let (dx, dy) = defect(w.k);
                prop_assert!(dx < eps && dy < eps);
                prop_assert!((w.eta as f64 - w.k as f64 / theta.cos()).abs() < eps);
                for k in 1..w.k {
                    let (dx, dy) = defect(k);
                    // strictly earlier hits would contradict minimality
                    prop_assert!(!(dx < eps - 1e-9 && dy < eps - 1e-9), "earlier witness at {}", k);
                }
            }
            None => {
                for k in 1..=20_000 {
                    let (dx, dy) = defect(k);
                    prop_assert!(!(dx < eps - 1e-9 && dy < eps - 1e-9), "missed witness at {}", k);
                }
            }
        }
    }

    #[test]
    fn disc_spectrum_scales_as_inverse_square(r in 0.05f64..0.49) {
        let base = bessel_disc_eigenvalues(0.25, 8).unwrap().values;
        let scaled = bessel_disc_eigenvalues(r, 8).unwrap().values;
        for (a, b) in base.iter().zip(&scaled) {
            let expect = a * (0.25 / r).powi(2);
            prop_assert!((b - expect).abs() <= 1e-10 * expect);
        }
        prop_assert!((base[0] - (2.404_825_557_695_773f64 / 0.25).powi(2)).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn band_counts_follow_the_floquet_law(n in 1usize..6) {
        let v = Potential1D::default_step();
        prop_assert_eq!(band_count_check(&v, n, 1, 0.0, 1.0 / 100.0).unwrap(), 2 * n);
        prop_assert_eq!(band_count_check(&v, n, 1, 1.0, 1.0 / 100.0).unwrap(), 2 * n + 1);
    }
}
