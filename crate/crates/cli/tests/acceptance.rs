//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use tempered_share::modality::{
    classify, critical_delta_exponential, curvature_coefficient, find_extrema, ExtremumKind, ModalClass,
    DEFAULT_RESOLUTION,
};
use tempered_share::phase_diagram::{column_boundary, sweep, SweepSpec};
use tempered_share::share_distribution::ORACLE_QUADRATURE;
use tempered_share::special_functions::bessel::bessel_k_by_integral;
use tempered_share::special_functions::bessel_k;
use tempered_share::{EnsembleKind, EnsembleSpec, ShareDensity};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const KINDS: [EnsembleKind; 2] = [EnsembleKind::Bounded, EnsembleKind::ExponentialTempered];
const GRID_ALPHAS: [f64; 4] = [0.3, 0.5, 1.0, 2.0];
const GRID_DELTAS: [f64; 4] = [1e-4, 1e-2, 0.1, 0.5];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn spec(kind: EnsembleKind, alpha: f64, delta: f64) -> EnsembleSpec {
    EnsembleSpec::from_delta(kind, alpha, delta).expect("valid spec")
}

fn tshare_json(args: &[&str]) -> Result<(serde_json::Value, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_tshare"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let v = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok((v, elapsed))
}

fn field(v: &serde_json::Value, key: &str) -> Result<f64, String> {
    v[key].as_f64().ok_or_else(|| format!("missing {key} in {v}"))
}

fn exact_bounded_delta_c() -> f64 {
    1.0 / (17.0 + 12.0 * 2f64.sqrt())
}

fn exact_bounded_delta_cc() -> f64 {
    let s3 = 3f64.sqrt();
    (259.0 + 144.0 * s3 - 12.0 * (897.0 + 518.0 * s3).sqrt()) / 11.0
}

fn bounded_critical_via_cli() -> Result<(f64, f64, Duration), String> {
    let (v, t) = tshare_json(&["critical", "--kind", "bounded", "--alpha", "0.5"])?;
    Ok((field(&v, "delta_c")?, field(&v, "delta_cc")?, t))
}

fn criterion_1() -> Outcome {
    let (dc, _, t) = bounded_critical_via_cli()?;
    let exact = exact_bounded_delta_c();
    ensure((dc - exact).abs() < 1e-5, || {
        format!("delta_c = {dc}, expected {exact}")
    })?;
    ensure(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!("delta_c = {dc:.9} (exact {exact:.9}) in {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let (dc, dcc, _) = bounded_critical_via_cli()?;
    let exact = exact_bounded_delta_cc();
    ensure((dcc - exact).abs() < 1e-5, || {
        format!("delta_cc = {dcc}, expected {exact}")
    })?;
    ensure(dcc < dc, || format!("delta_cc = {dcc} not below delta_c = {dc}"))?;
    let delta = format!("{dcc:e}");
    let (profile, _) = tshare_json(&["classify", "--kind", "bounded", "--alpha", "0.5", "--delta", &delta])?;
    let maxima: Vec<f64> = profile["extrema"]
        .as_array()
        .ok_or("no extrema")?
        .iter()
        .filter(|e| e["kind"] == "Maximum" || e["kind"] == "Cusp")
        .filter_map(|e| e["value"].as_f64())
        .collect();
    ensure(maxima.len() == 3, || {
        format!("expected 3 maxima at delta_cc, got {maxima:?}")
    })?;
    let spread = maxima.iter().map(|m| rel(*m, maxima[1])).fold(0.0, f64::max);
    ensure(spread < 1e-5, || {
        format!("maxima differ by relative {spread:e}: {maxima:?}")
    })?;
    Ok(format!(
        "delta_cc = {dcc:.9} (exact {exact:.9}); maxima spread {spread:.1e}"
    ))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for delta in [0.001, 0.005, 0.02] {
        let ex =
            find_extrema(&spec(EnsembleKind::Bounded, 0.5, delta), DEFAULT_RESOLUTION).map_err(|e| e.to_string())?;
        let root = (1.0 - 34.0 * delta + delta * delta).sqrt();
        let den = 8.0 * (1.0 + delta);
        let w_max = (1.0 + 7.0 * delta - root) / den;
        let w_min = (1.0 + 7.0 * delta + root) / den;
        let expected = [w_max, w_min, 0.5, 1.0 - w_min, 1.0 - w_max];
        let kinds = [
            ExtremumKind::Maximum,
            ExtremumKind::Minimum,
            ExtremumKind::Cusp,
            ExtremumKind::Minimum,
            ExtremumKind::Maximum,
        ];
        ensure(ex.len() == 5, || format!("delta = {delta}: {} extrema", ex.len()))?;
        for ((e, w), k) in ex.iter().zip(expected).zip(kinds) {
            ensure(e.kind == k, || format!("delta = {delta}: {e:?} expected {k:?}"))?;
            worst = worst.max((e.location - w).abs());
        }
    }
    ensure(worst < 1e-6, || format!("worst location error {worst:e}"))?;
    Ok(format!("worst location error {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let dc = critical_delta_exponential(0.5).map_err(|e| e.to_string())?;
    ensure((dc - 0.12).abs() <= 0.01, || format!("delta_c = {dc}"))?;
    let residual = curvature_coefficient(&spec(EnsembleKind::ExponentialTempered, 0.5, dc))
        .map_err(|e| e.to_string())?
        .abs();
    ensure(residual < 1e-9, || format!("residual {residual:e}"))?;
    let second = |d: f64| {
        let p = ShareDensity::new(spec(EnsembleKind::ExponentialTempered, 0.5, d)).expect("density");
        let h = 1e-3;
        (p.pdf(0.5 + h) - 2.0 * p.pdf(0.5) + p.pdf(0.5 - h)) / (h * h)
    };
    let (below, above) = (second(dc * 0.99), second(dc * 1.01));
    ensure(below > 0.0 && above < 0.0, || {
        format!("P'' below {below:e}, above {above:e}")
    })?;
    Ok(format!(
        "delta_c = {dc:.9}, residual {residual:.1e}, P''(1/2) flips {below:.2e} -> {above:.2e}"
    ))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for kind in KINDS {
        for alpha in GRID_ALPHAS {
            for delta in GRID_DELTAS {
                let d = ShareDensity::new(spec(kind, alpha, delta)).map_err(|e| e.to_string())?;
                let (a, b) = d.support();
                for i in 1..=17 {
                    let w = a + (b - a) * i as f64 / 18.0;
                    if kind == EnsembleKind::Bounded && (w - 0.5).abs() < 1e-4 {
                        continue;
                    }
                    let closed = d.pdf(w);
                    let integral = d.value_by_integral(w, &ORACLE_QUADRATURE).map_err(|e| e.to_string())?;
                    let err = if closed == 0.0 && integral == 0.0 {
                        0.0
                    } else {
                        rel(closed, integral)
                    };
                    ensure(err < 1e-6, || {
                        format!("{kind} a={alpha} d={delta} w={w}: {closed} vs {integral}")
                    })?;
                    worst = worst.max(err);
                }
            }
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    Ok(format!("worst relative deviation {worst:.1e} in {t:.2?}"))
}

fn criterion_6() -> Outcome {
    let (mut worst_norm, mut worst_mean): (f64, f64) = (0.0, 0.0);
    for kind in KINDS {
        for alpha in GRID_ALPHAS {
            for delta in GRID_DELTAS {
                let d = ShareDensity::new(spec(kind, alpha, delta)).map_err(|e| e.to_string())?;
                let norm = (d.normalization().map_err(|e| e.to_string())? - 1.0).abs();
                let mean = (d.mean().map_err(|e| e.to_string())? - 0.5).abs();
                ensure(norm < 1e-6, || {
                    format!("{kind} a={alpha} d={delta}: |norm - 1| = {norm:e}")
                })?;
                ensure(mean < 1e-8, || {
                    format!("{kind} a={alpha} d={delta}: |mean - 1/2| = {mean:e}")
                })?;
                worst_norm = worst_norm.max(norm);
                worst_mean = worst_mean.max(mean);
            }
        }
    }
    Ok(format!(
        "worst |norm - 1| {worst_norm:.1e}, worst |mean - 1/2| {worst_mean:.1e}"
    ))
}

fn criterion_7() -> Outcome {
    let mut checked = 0;
    let mut expect = |kind, alpha, delta, class: ModalClass| -> Result<(), String> {
        let got = classify(&spec(kind, alpha, delta))
            .map_err(|e| e.to_string())?
            .modal_class;
        checked += 1;
        ensure(got == class, || {
            format!("{kind} a={alpha} d={delta}: {got}, expected {class}")
        })
    };
    for kind in KINDS {
        for alpha in [1.0, 1.5, 2.0, 2.5] {
            for delta in GRID_DELTAS {
                expect(kind, alpha, delta, ModalClass::Unimodal)?;
            }
        }
    }
    expect(EnsembleKind::ExponentialTempered, 0.5, 0.01, ModalClass::MShaped)?;
    expect(EnsembleKind::Bounded, 0.5, 0.005, ModalClass::WEdgeDominant)?;
    expect(EnsembleKind::Bounded, 0.5, 0.02, ModalClass::WCenterDominant)?;
    Ok(format!("{checked} classifications as expected"))
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    for (kind, alpha) in [("bounded", "1"), ("exp", "2")] {
        let (r, t) = tshare_json(&[
            "validate", "--kind", kind, "--alpha", alpha, "--delta", "0.1", "--n", "1000000", "--bins", "100",
        ])?;
        let l1 = field(&r, "l1_distance")?;
        let ks = field(&r, "ks_statistic")?;
        let z = (field(&r, "sample_mean")? - 0.5) / field(&r, "mean_std_error")?;
        let ks_limit = 1.358 / 1e3;
        ensure(l1 < 0.01, || format!("{kind}: L1 {l1}"))?;
        ensure(ks < ks_limit, || format!("{kind}: KS {ks} >= {ks_limit}"))?;
        ensure(z.abs() < 3.0, || format!("{kind}: mean off by {z:.2} sigma"))?;
        ensure(t < Duration::from_secs(30), || format!("{kind}: took {t:?}"))?;
        lines.push(format!("{kind}: L1 {l1:.4}, KS {ks:.5}, z {z:+.2}, {t:.2?}"));
    }
    Ok(lines.join("; "))
}

fn criterion_9() -> Outcome {
    let k = |nu: f64, x: f64| bessel_k(nu, x).map_err(|e| e.to_string());
    let mut worst_half: f64 = 0.0;
    for x in [0.1, 1.0, 5.0, 20.0] {
        let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
        let by_quadrature = bessel_k_by_integral(0.5, x).map_err(|e| e.to_string())?;
        worst_half = worst_half.max(rel(k(0.5, x)?, exact)).max(rel(by_quadrature, exact));
    }
    ensure(worst_half < 1e-10, || format!("K_1/2 deviation {worst_half:e}"))?;

    let (mut worst_sym, mut worst_rec): (f64, f64) = (0.0, 0.0);
    for i in 0..=14 {
        let nu = 0.5 + 0.25 * i as f64;
        for j in 1..=20 {
            let x = 0.5 * j as f64;
            worst_sym = worst_sym.max(rel(k(-nu, x)?, k(nu, x)?));
            let lhs = k(nu + 1.0, x)?;
            worst_rec = worst_rec.max(rel(lhs, k(nu - 1.0, x)? + 2.0 * nu / x * k(nu, x)?));
        }
    }
    ensure(worst_sym < 1e-12, || format!("reflection deviation {worst_sym:e}"))?;
    ensure(worst_rec < 1e-8, || format!("recurrence deviation {worst_rec:e}"))?;
    Ok(format!(
        "K_1/2 {worst_half:.1e}, reflection {worst_sym:.1e}, recurrence {worst_rec:.1e}"
    ))
}

fn criterion_10() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let b = column_boundary(EnsembleKind::ExponentialTempered, alpha);
        let by_class = b
            .ln_delta_c
            .ok_or_else(|| format!("alpha {alpha}: {:?}", b.error))?
            .exp();
        let by_eq = critical_delta_exponential(alpha).map_err(|e| e.to_string())?;
        let err = (by_class - by_eq).abs();
        ensure(err < 1e-6, || format!("alpha {alpha}: {by_class} vs {by_eq}"))?;
        worst = worst.max(err);
    }

    let s = SweepSpec::new(EnsembleKind::Bounded, (0.1, 2.0), (-8.0, -0.1), 20, 20).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let grid = sweep(&s).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(300), || format!("sweep took {t:?}"))?;
    for c in grid.cells.iter().filter(|c| c.alpha > 1.0) {
        ensure(c.class == Ok(ModalClass::Unimodal), || format!("cell {c:?}"))?;
    }
    Ok(format!(
        "column boundaries within {worst:.1e}; 20x20 bounded sweep in {t:.2?}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("bounded delta_c at alpha = 1/2", criterion_1),
        ("bounded delta_cc at alpha = 1/2", criterion_2),
        ("bounded extrema locations", criterion_3),
        ("exponential delta_c at alpha = 1/2", criterion_4),
        ("closed form vs integral", criterion_5),
        ("normalization and mean", criterion_6),
        ("modal phase structure", criterion_7),
        ("Monte Carlo agreement", criterion_8),
        ("special functions", criterion_9),
        ("phase diagram consistency", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{t:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{t:.2?}]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
