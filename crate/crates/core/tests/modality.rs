use tempered_share::modality::*;
use tempered_share::{EnsembleKind, EnsembleSpec, ShareDensity};

const KINDS: [EnsembleKind; 2] = [EnsembleKind::Bounded, EnsembleKind::ExponentialTempered];

fn spec(kind: EnsembleKind, alpha: f64, delta: f64) -> EnsembleSpec {
    EnsembleSpec::from_delta(kind, alpha, delta).unwrap()
}

fn bounded_half_extrema(delta: f64) -> (f64, f64) {
    let root = (1.0 - 34.0 * delta + delta * delta).sqrt();
    let den = 8.0 * (1.0 + delta);
    ((1.0 + 7.0 * delta - root) / den, (1.0 + 7.0 * delta + root) / den)
}

fn second_difference(d: &ShareDensity, h: f64) -> f64 {
    (d.pdf(0.5 + h) - 2.0 * d.pdf(0.5) + d.pdf(0.5 - h)) / (h * h)
}

#[test]
fn bounded_extrema_match_closed_form() {
    for delta in [0.001, 0.005, 0.02] {
        let ex = find_extrema(&spec(EnsembleKind::Bounded, 0.5, delta), DEFAULT_RESOLUTION).unwrap();
        assert_eq!(ex.len(), 5, "delta={delta}: {ex:?}");
        let (w_max, w_min) = bounded_half_extrema(delta);
        assert_eq!(ex[0].kind, ExtremumKind::Maximum);
        assert_eq!(ex[1].kind, ExtremumKind::Minimum);
        assert_eq!(ex[2].kind, ExtremumKind::Cusp);
        assert!((ex[0].location - w_max).abs() < 1e-6, "{} vs {w_max}", ex[0].location);
        assert!((ex[1].location - w_min).abs() < 1e-6, "{} vs {w_min}", ex[1].location);
        assert!((ex[3].location - (1.0 - w_min)).abs() < 1e-6);
        assert!((ex[4].location - (1.0 - w_max)).abs() < 1e-6);
    }
}

#[test]
fn bounded_unit_alpha_single_cusp() {
    let ex = find_extrema(&spec(EnsembleKind::Bounded, 1.0, 0.1), DEFAULT_RESOLUTION).unwrap();
    assert_eq!(ex.len(), 1);
    assert_eq!(ex[0].location, 0.5);
    assert!(ex[0].kind.is_maximum());
}

#[test]
fn extrema_are_symmetric() {
    for (kind, alpha, delta) in [
        (EnsembleKind::Bounded, 0.5, 0.005),
        (EnsembleKind::Bounded, 0.3, 0.001),
        (EnsembleKind::ExponentialTempered, 0.5, 0.01),
        (EnsembleKind::ExponentialTempered, 0.3, 0.05),
    ] {
        let ex = find_extrema(&spec(kind, alpha, delta), DEFAULT_RESOLUTION).unwrap();
        let n = ex.len();
        assert_eq!(n % 2, 1);
        assert_eq!(ex[n / 2].location, 0.5);
        for i in 0..n / 2 {
            let (a, b) = (ex[i], ex[n - 1 - i]);
            assert_eq!(a.kind, b.kind);
            assert!((a.location + b.location - 1.0).abs() < 1e-15);
            assert!((a.value - b.value).abs() <= 1e-10 * a.value, "{a:?} {b:?}");
        }
    }
}

#[test]
fn bounded_centre_is_always_a_cusp() {
    for alpha in [0.3, 0.5, 1.0, 2.0] {
        for delta in [1e-4, 1e-2, 0.1, 0.5] {
            let ex = find_extrema(&spec(EnsembleKind::Bounded, alpha, delta), DEFAULT_RESOLUTION).unwrap();
            let c = ex.iter().find(|e| e.location == 0.5).unwrap();
            assert_eq!(c.kind, ExtremumKind::Cusp, "alpha={alpha} delta={delta}");
        }
    }
}

#[test]
fn classify_examples() {
    let cases = [
        (EnsembleKind::ExponentialTempered, 2.0, 0.1, ModalClass::Unimodal),
        (EnsembleKind::ExponentialTempered, 0.5, 0.01, ModalClass::MShaped),
        (EnsembleKind::Bounded, 0.5, 0.005, ModalClass::WEdgeDominant),
        (EnsembleKind::Bounded, 0.5, 0.02, ModalClass::WCenterDominant),
        (EnsembleKind::Bounded, 0.5, 0.05, ModalClass::Unimodal),
    ];
    for (kind, alpha, delta, expected) in cases {
        let p = classify(&spec(kind, alpha, delta)).unwrap();
        assert_eq!(
            p.modal_class, expected,
            "{kind} alpha={alpha} delta={delta}: {:?}",
            p.extrema
        );
    }
}

#[test]
fn large_alpha_is_unimodal() {
    for kind in KINDS {
        for alpha in [1.0, 1.5, 2.0, 2.5] {
            for delta in [1e-6, 1e-4, 1e-2, 0.1, 0.5, 0.9] {
                let p = classify(&spec(kind, alpha, delta)).unwrap();
                assert_eq!(
                    p.modal_class,
                    ModalClass::Unimodal,
                    "{kind} alpha={alpha} delta={delta}"
                );
                assert!(p.has_single_peak());
            }
        }
    }
}

#[test]
fn profile_json_field_names() {
    let p = classify(&spec(EnsembleKind::Bounded, 0.5, 0.005)).unwrap();
    let v: serde_json::Value = serde_json::to_value(&p).unwrap();
    assert_eq!(v["modal_class"], "WEdgeDominant");
    assert_eq!(v["extrema"][2]["kind"], "Cusp");
    assert!(v["extrema"][0]["location"].is_f64());
    let t = critical_thresholds(EnsembleKind::ExponentialTempered, 0.5).unwrap();
    let v: serde_json::Value = serde_json::to_value(t).unwrap();
    assert_eq!(v["kind"], "exponential");
    assert!(v["delta_cc"].is_null());
}

#[test]
fn curvature_sign_matches_second_difference() {
    for alpha in [0.2, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0] {
        for delta in [1e-3, 1e-2, 0.05, 0.1, 0.3, 0.7] {
            let s = spec(EnsembleKind::ExponentialTempered, alpha, delta);
            let g = curvature_coefficient(&s).unwrap();
            let d2 = second_difference(&ShareDensity::new(s).unwrap(), 1e-4);
            if g.abs() < 1e-6 {
                continue;
            }
            assert_eq!(g > 0.0, d2 > 0.0, "alpha={alpha} delta={delta} g={g} d2={d2}");
        }
    }
}

#[test]
fn curvature_examples() {
    let g = |a, d| curvature_coefficient(&spec(EnsembleKind::ExponentialTempered, a, d)).unwrap();
    let g1 = g(1.0, 1e-10);
    assert!(g1 < 0.0 && g1 > -1e-3, "{g1}");
    assert!(g(2.0, 0.1) < 0.0);
    assert!(g(0.5, 0.05) > 0.0);
}

#[test]
fn exponential_threshold_solves_curvature_equation() {
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9, 0.999] {
        let dc = critical_delta_exponential(alpha).unwrap();
        let g = curvature_coefficient(&spec(EnsembleKind::ExponentialTempered, alpha, dc)).unwrap();
        assert!(g.abs() < 1e-9, "alpha={alpha} residual={g}");
    }
    let dc = critical_delta_exponential(0.5).unwrap();
    assert!((dc - 0.12).abs() < 0.01, "{dc}");
    assert!(critical_delta_exponential(0.999).unwrap() < 1e-2);
}

#[test]
fn exponential_threshold_flips_centre_curvature() {
    for alpha in [0.3, 0.5] {
        let dc = critical_delta_exponential(alpha).unwrap();
        let d2 = |d: f64| {
            second_difference(
                &ShareDensity::new(spec(EnsembleKind::ExponentialTempered, alpha, d)).unwrap(),
                1e-3,
            )
        };
        assert!(d2(dc * 0.99) > 0.0, "alpha={alpha}");
        assert!(d2(dc * 1.01) < 0.0, "alpha={alpha}");
    }
}

#[test]
fn bounded_thresholds_half_alpha() {
    let t = critical_delta_bounded(0.5).unwrap();
    let exact_c = 1.0 / (17.0 + 12.0 * 2f64.sqrt());
    let s3 = 3f64.sqrt();
    let exact_cc = (259.0 + 144.0 * s3 - 12.0 * (897.0 + 518.0 * s3).sqrt()) / 11.0;
    let (dc, dcc) = (t.delta_c.unwrap(), t.delta_cc.unwrap());
    assert!((dc - exact_c).abs() < 1e-6, "{dc} vs {exact_c}");
    assert!((dcc - exact_cc).abs() < 1e-8, "{dcc} vs {exact_cc}");

    let ex = find_extrema(&spec(EnsembleKind::Bounded, 0.5, dcc), DEFAULT_RESOLUTION).unwrap();
    let maxima: Vec<f64> = ex.iter().filter(|e| e.kind.is_maximum()).map(|e| e.value).collect();
    assert_eq!(maxima.len(), 3);
    for m in &maxima {
        assert!((m - maxima[1]).abs() < 1e-6 * maxima[1], "{maxima:?}");
    }
}

#[test]
fn bounded_thresholds_are_ordered() {
    for alpha in [0.2, 0.4, 0.6, 0.8] {
        let t = critical_delta_bounded(alpha).unwrap();
        let (dc, dcc) = (t.delta_c.unwrap(), t.delta_cc.unwrap());
        assert!(dcc < dc, "alpha={alpha}: {dcc} !< {dc}");
        let class = |d| classify(&spec(EnsembleKind::Bounded, alpha, d)).unwrap().modal_class;
        assert_eq!(class(dc * 1.01), ModalClass::Unimodal, "alpha={alpha}");
        assert_eq!(class((dc * dcc).sqrt()), ModalClass::WCenterDominant, "alpha={alpha}");
        assert_eq!(class(dcc * 0.99), ModalClass::WEdgeDominant, "alpha={alpha}");
    }
}

#[test]
fn classification_boundary_matches_equation() {
    let by_eq = critical_delta_exponential(0.5).unwrap();
    let by_class = critical_delta_exponential_by_classification(0.5).unwrap();
    assert!((by_eq - by_class).abs() < 1e-6, "{by_eq} vs {by_class}");
}
