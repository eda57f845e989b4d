//! Bessel functions of the first kind `J_m` and their positive zeros.

/// Below this argument the power series is used; above it, Miller's
/// backward recurrence.
const SERIES_LIMIT: f64 = 4.0;

/// Power series `Σ (−1)^k (x/2)^{2k+m} / (k! (m+k)!)`.
pub fn bessel_j_series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=m {
        term *= half / i as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for k in 1..500u32 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_0(x), …, J_{m_max}(x)` by backward recurrence normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_miller(m_max: u32, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m_max as usize + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = (m_max as f64).max(ax);
    let mut n = (top + 20.0 + 2.0 * top.sqrt() * 3.0) as usize;
    n += n % 2;
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=n).rev() {
        let jm = 2.0 * k as f64 / ax * j - jp;
        jp = j;
        j = jm;
        // k − 1 is the index of j now
        if k - 1 <= m_max as usize {
            out[k - 1] = j;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            // rescale everything accumulated so far
            let s = 1e-250;
            j *= s;
            jp *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm += j;
    out.iter_mut().for_each(|v| *v /= norm);
    if x < 0.0 {
        for (m, v) in out.iter_mut().enumerate() {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_m(x)`.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    if x.abs() <= SERIES_LIMIT {
        bessel_j_series(m, x)
    } else {
        bessel_j_miller(m, x)[m as usize]
    }
}

/// The first `count` positive zeros of `J_m`, by a sign scan with step 0.1
/// followed by bisection to machine precision.
pub fn bessel_zeros(m: u32, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let step = 0.1;
    // j_{m,1} > m
    let mut a = (m as f64).max(step);
    let mut fa = bessel_j(m, a);
    while out.len() < count {
        let b = a + step;
        let fb = bessel_j(m, b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = bessel_j(m, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `(1/π) ∫₀^π cos(mτ − x sin τ) dτ` by the trapezoid rule, exponentially
    /// accurate for this periodic integrand.
    fn bessel_integral(m: u32, x: f64) -> f64 {
        let n = 400;
        let f = |tau: f64| (m as f64 * tau - x * tau.sin()).cos();
        let h = PI / n as f64;
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..n {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn evaluation_matches_integral_oracle() {
        for m in 0..6 {
            for i in 0..120 {
                let x = 0.05 + i as f64 * 0.25;
                let a = bessel_j(m, x);
                let b = bessel_integral(m, x);
                assert!((a - b).abs() < 1e-12, "J_{m}({x}) = {a} vs {b}");
            }
        }
    }

    #[test]
    fn series_and_recurrence_agree() {
        for m in 0..6 {
            for i in 1..80 {
                let x = i as f64 * 0.1;
                let s = bessel_j_series(m, x);
                let r = bessel_j_miller(m, x)[m as usize];
                if s.abs() > 1e-3 {
                    assert!(((s - r) / s).abs() < 1e-10, "m={m} x={x}: {s} vs {r}");
                }
            }
        }
    }

    #[test]
    fn low_zeros() {
        // frozen from Newton iteration on the integral representation
        let j01 = 2.404_825_557_695_773;
        let j11 = 3.831_705_970_207_512;
        let j02 = 5.520_078_110_286_311;
        assert!((bessel_zeros(0, 2)[0] - j01).abs() < 1e-12);
        assert!((bessel_zeros(0, 2)[1] - j02).abs() < 1e-12);
        assert!((bessel_zeros(1, 1)[0] - j11).abs() < 1e-12);
        for (m, z) in [(0u32, j01), (1, j11)] {
            assert!(bessel_integral(m, z).abs() < 1e-13);
        }
    }

    #[test]
    fn zeros_interlace() {
        // j_{m,s} < j_{m+1,s} < j_{m,s+1}
        for m in 0..5 {
            let a = bessel_zeros(m, 4);
            let b = bessel_zeros(m + 1, 4);
            for s in 0..3 {
                assert!(a[s] < b[s] && b[s] < a[s + 1]);
            }
        }
    }
}
