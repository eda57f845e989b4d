//! Full acceptance ladder. Runs every criterion once with the inertia audit
//! switched on, prints one pass/fail line per criterion, and re-checks each
//! verdict from the measured values against fixed thresholds and oracles.
//! Built without the test harness so the lines are always shown.

use gapcross::cli::verify::{run_suite, Tolerances, CRITERIA};
use serde_json::Value;

// first zeros of J₀ and J₁
const J01: f64 = 2.404_825_557_695_773;
const J11: f64 = 3.831_705_970_207_512;

fn f(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn u(v: &Value, key: &str) -> u64 {
    v[key]
        .as_u64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

/// Independent reading of one criterion's measurements.
fn recheck(id: usize, m: &Value) -> Result<(), String> {
    let ensure = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
    match id {
        1 => {
            ensure(f(m, "max_rel_error") < 1e-3, "band edge error")?;
            ensure(m["all_degenerate"] == true, "open gap for V = 0")
        }
        2 => {
            let rows = m.as_array().unwrap();
            ensure(rows.len() == 5, "n range")?;
            for r in rows {
                let n = u(r, "n");
                ensure(u(r, "t0") == 2 * n && u(r, "t1") == 2 * n + 1, "count law")?;
            }
            Ok(())
        }
        3 => {
            let rows = m.as_array().unwrap();
            for k in [1, 2] {
                let fam: Vec<&Value> = rows.iter().filter(|r| u(r, "k") == k).collect();
                ensure(fam.len() == 3, "three resolutions per gap")?;
                ensure(fam.iter().any(|r| u(r, "n") == 4), "n + 1 run")?;
                ensure(fam.iter().any(|r| f(r, "h") == 1.0 / 400.0), "h / 2 run")?;
                for r in fam {
                    ensure(r["n_k"].as_i64() == Some(k as i64), "N_k = k")?;
                    ensure(u(r, "seams") == 0, "seams")?;
                }
            }
            Ok(())
        }
        4 => ensure(u(m, "violations") == 0 && u(m, "branches") > 0, "edge law"),
        5 => {
            let r = f(m, "fine") / f(m, "coarse");
            ensure((0.5..=2.0).contains(&r), "slope ratio")
        }
        6 => {
            let gap: Vec<f64> = serde_json::from_value(m["gap"].clone()).unwrap();
            let accept = (gap[1] - gap[0]) / 100.0;
            let hits = m["hits"].as_array().unwrap();
            ensure(hits.len() == 3, "three energies")?;
            for h in hits {
                ensure(
                    (f(h, "value") - f(h, "target")).abs() <= accept,
                    "hit accuracy",
                )?;
                ensure(
                    f(h, "target") > gap[0] && f(h, "target") < gap[1],
                    "target in gap",
                )?;
            }
            Ok(())
        }
        7 => {
            let rows = m["rows"].as_array().unwrap();
            let ns: Vec<f64> = rows.iter().map(|r| f(r, "n")).collect();
            let ds: Vec<f64> = rows.iter().map(|r| f(r, "differenced")).collect();
            let raw: Vec<f64> = rows.iter().map(|r| f(r, "raw")).collect();
            // least squares through the origin
            let snn: f64 = ns.iter().map(|n| n * n).sum();
            let c = ns.iter().zip(&ds).map(|(n, d)| n * d).sum::<f64>() / snn;
            let rss: f64 = ns.iter().zip(&ds).map(|(n, d)| (d - c * n).powi(2)).sum();
            let sigma = (rss / (ns.len() - 1) as f64 / snn).sqrt();
            ensure(ns == [10.0, 20.0, 40.0], "sizes")?;
            ensure(c - 2.0 * sigma > 0.0, "slope margin")?;
            let scaled: Vec<f64> = ns.iter().zip(&raw).map(|(n, r)| r / (n * n.ln())).collect();
            ensure(
                scaled.windows(2).all(|w| w[1] <= w[0]),
                "raw / (n ln n) grows",
            )
        }
        8 => {
            ensure(
                (f(m, "golden_frequency") - 0.04).abs() < 0.01,
                "golden frequency",
            )?;
            ensure(m["rational_visits"] == m["oracle_visits"], "rational orbit")
        }
        9 => {
            let p = &m["pythagorean"];
            ensure(u(p, "k") == 4 && u(p, "eta") == 5, "Pythagorean witness")?;
            ensure(
                p["defects"].as_array().unwrap().iter().all(|d| d == 0.0),
                "defects",
            )?;
            let g = &m["golden"];
            let ok = g["defects"]
                .as_array()
                .unwrap()
                .iter()
                .all(|d| d.as_f64().unwrap() < 0.02);
            ensure(ok, "golden defects")
        }
        10 => {
            let gap: Vec<f64> = serde_json::from_value(m["gap"].clone()).unwrap();
            let width = gap[1] - gap[0];
            let ladder = m["ladder"].as_array().unwrap();
            ensure(ladder.len() == 3, "three witnesses")?;
            let thetas: Vec<f64> = ladder.iter().map(|r| f(r, "theta")).collect();
            let res: Vec<f64> = ladder.iter().map(|r| f(r, "residual")).collect();
            ensure(thetas.windows(2).all(|w| w[1] < w[0]), "θ decreasing")?;
            ensure(res.iter().all(|&r| r <= 0.1 * width), "residual bound")?;
            ensure(res.windows(2).all(|w| w[1] < w[0]), "residuals decreasing")?;
            ensure(u(&m["certificate"], "count") >= 1, "certificate")
        }
        11 => {
            let r: f64 = 0.4;
            let mu1 = (J01 / r).powi(2);
            let half = (J11 / r).powi(2);
            ensure(
                (f(m, "bessel_mu1") - mu1).abs() < 1e-9 * mu1,
                "Bessel oracle",
            )?;
            ensure(
                (f(m, "fd_mu1") - mu1).abs() / mu1 < 0.005,
                "extrapolated μ₁",
            )?;
            ensure(
                (f(m, "half_disc") - half).abs() / half < 0.01,
                "λ₁ at t = ½",
            )?;
            ensure(f(m, "limit_rel") < 0.01, "endpoint limit")?;
            ensure(m["strictly_decreasing"] == true, "monotone curve")
        }
        12 => {
            let ladder = m["ladder"].as_array().unwrap();
            let full = ladder
                .iter()
                .any(|r| r["empty"].as_array().is_some_and(Vec::is_empty));
            ensure(full, "no θ covers the partition")
        }
        13 => {
            // tan θ = 1/2: r_θ = cos θ / (2q), q = 2
            let r_theta = (2.0 / 5f64.sqrt()) / 4.0;
            ensure((f(m, "r_theta") - r_theta).abs() < 1e-12, "r_θ")?;
            ensure(f(m, "r") < r_theta, "radius")?;
            ensure(u(m, "cut_discs") == 0 && u(m, "discs") > 0, "cut discs")
        }
        14 => ensure(
            u(m, "mismatches") == 0 && u(m, "checked") > 0,
            "count mismatch",
        ),
        _ => Err("unknown criterion".into()),
    }
}

fn stated_tolerances() {
    let t = Tolerances::default();
    let expected = [
        ("free_edges.rel", 1e-3),
        ("crossings.tol", 1e-7),
        ("edge_law.factor", 5.0),
        ("slope.factor", 2.0),
        ("strip.accept", 0.01),
        ("sdos.sigmas", 2.0),
        ("birkhoff.abs", 0.01),
        ("witness.defect", 0.02),
        ("residual.gap_fraction", 0.1),
        ("muffin.bessel_rel", 0.005),
        ("muffin.limit_rel", 0.01),
        ("muffin.half_rel", 0.01),
        ("density.parts", 10.0),
        ("audit.mismatches", 0.0),
    ];
    for (k, v) in expected {
        assert_eq!(t.get(k), v, "{k}");
    }
}

fn main() {
    stated_tolerances();
    let report = run_suite(&Tolerances::default(), None, 0).expect("suite runs");
    assert_eq!(report.criteria.len(), CRITERIA.len());
    let mut failed = Vec::new();
    for c in &report.criteria {
        let again = recheck(c.id, &c.measured);
        let ok = c.passed && again.is_ok();
        let note = again.err().map(|e| format!(" ({e})")).unwrap_or_default();
        println!(
            "[{}] {:>2} {}{}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            note
        );
        if !ok {
            failed.push((c.id, c.measured.clone()));
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
