//! Extrema of `P(omega)`, modal classification, and the critical cutoff
//! ratios at which the shape changes.
//!
//! `P` is symmetric, so extrema are searched on the left half of the support
//! and mirrored. The centre `omega = 1/2` is classified separately: the
//! bounded kind has a cusp there, the exponential kind is smooth.

use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::share_distribution::ShareDensity;
use crate::special_functions::roots::{bisect_predicate, minimize_golden};
use crate::special_functions::{bessel_k_ratio, find_root, BracketSolverSpec};

/// Default number of scan points on the half support.
pub const DEFAULT_RESOLUTION: usize = 4096;
/// Smallest accepted scan resolution.
pub const MIN_RESOLUTION: usize = 64;
const MAX_RESOLUTION: usize = 1 << 18;

/// Relative step of the central-difference derivative.
const DERIVATIVE_STEP: f64 = 1e-7;
/// Step of the centred second difference used to classify a smooth centre.
const CENTRE_STEP: f64 = 1e-3;
/// One-sided difference quotients above this (relative) size mark a cusp.
const CUSP_THRESHOLD: f64 = 1e-6;
/// Spread over the central 80% of the support below which a shallow
/// multi-modal profile is labelled near-uniform.
const NEAR_UNIFORM_SPREAD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
    /// Continuous maximum with one-sided derivatives of opposite sign.
    Cusp,
}

impl ExtremumKind {
    pub fn is_maximum(self) -> bool {
        matches!(self, ExtremumKind::Maximum | ExtremumKind::Cusp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub location: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModalClass {
    /// A single maximum at `omega = 1/2`.
    Unimodal,
    /// Three maxima; the central one is the highest.
    WCenterDominant,
    /// Three maxima; the two off-centre maxima exceed `P(1/2)`.
    WEdgeDominant,
    /// Two maxima with a minimum at `omega = 1/2`.
    MShaped,
    /// Multi-modal but flat to within 1% over the central 80% of the support.
    NearUniform,
}

impl ModalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ModalClass::Unimodal => "Unimodal",
            ModalClass::WCenterDominant => "WCenterDominant",
            ModalClass::WEdgeDominant => "WEdgeDominant",
            ModalClass::MShaped => "MShaped",
            ModalClass::NearUniform => "NearUniform",
        }
    }
}

impl std::fmt::Display for ModalClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalProfile {
    pub extrema: Vec<Extremum>,
    pub modal_class: ModalClass,
}

impl ModalProfile {
    pub fn maxima(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| e.kind.is_maximum())
    }

    pub fn minima(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| !e.kind.is_maximum())
    }

    /// Exactly one maximum (at the centre) and nothing else, regardless of the
    /// class label.
    pub fn has_single_peak(&self) -> bool {
        self.extrema.len() == 1 && self.extrema[0].kind.is_maximum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalThresholds {
    pub alpha: f64,
    pub kind: EnsembleKind,
    pub delta_c: Option<f64>,
    pub delta_cc: Option<f64>,
}

/// Scan state for one density.
struct HalfScan<'a> {
    density: &'a ShareDensity,
    /// Left end of the scanned half-interval.
    lo: f64,
    /// Support width, the reference scale for steps.
    width: f64,
}

impl<'a> HalfScan<'a> {
    fn new(density: &'a ShareDensity) -> Self {
        let (a, b) = density.support();
        let lo = match density.kind() {
            EnsembleKind::Bounded => a,
            // P is below e^-200 for omega < delta * 1e-4
            EnsembleKind::ExponentialTempered => (density.delta() * 1e-4).min(1e-3),
        };
        HalfScan {
            density,
            lo,
            width: b - a,
        }
    }

    fn p(&self, w: f64) -> f64 {
        self.density.pdf(w)
    }

    /// Union of a geometric grid hugging the left edge and a uniform grid,
    /// ending exactly at 1/2.
    fn grid(&self, resolution: usize) -> Vec<f64> {
        let half = 0.5 - self.lo;
        let n_geo = resolution / 2;
        let n_uni = resolution - n_geo;
        let min_offset = half * 1e-4 * self.density.delta().min(1.0);
        let ratio = (half / min_offset).ln();
        let mut pts: Vec<f64> = (0..n_geo)
            .map(|k| self.lo + min_offset * (ratio * k as f64 / (n_geo - 1) as f64).exp())
            .chain((1..=n_uni).map(|k| self.lo + half * k as f64 / n_uni as f64))
            .filter(|&w| w > self.lo && w < 0.5)
            .collect();
        pts.push(0.5);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 4.0 * f64::EPSILON * b.abs());
        pts
    }

    fn step(&self, w: f64) -> f64 {
        let mut scale = self.width.min(0.5);
        if self.density.kind() == EnsembleKind::Bounded {
            scale = scale.min(w - self.lo).min(0.5 - w);
        }
        DERIVATIVE_STEP * scale.max(f64::MIN_POSITIVE)
    }

    fn derivative(&self, w: f64) -> f64 {
        let h = self.step(w);
        (self.p(w + h) - self.p(w - h)) / (2.0 * h)
    }

    /// Noise floor of `derivative` at `w`.
    fn derivative_noise(&self, w: f64) -> f64 {
        1e3 * f64::EPSILON * self.p(w).abs() / self.step(w)
    }

    /// Root of the derivative in `[a, b]`, falling back to golden-section on
    /// `P` when the derivative does not change sign across the bracket.
    fn refine(&self, a: f64, b: f64, kind: ExtremumKind) -> f64 {
        let da = self.derivative(a);
        let db = self.derivative(b);
        let expected = if kind.is_maximum() {
            da > 0.0 && db < 0.0
        } else {
            da < 0.0 && db > 0.0
        };
        if expected {
            let spec = BracketSolverSpec::new(a, b)
                .with_tol(4.0 * f64::EPSILON * b)
                .with_max_iterations(200);
            if let Ok(root) = find_root(|w| self.derivative(w), &spec) {
                return root;
            }
        }
        let sign = if kind.is_maximum() { -1.0 } else { 1.0 };
        minimize_golden(|w| sign * self.p(w), a, b, 1e-12 * b).0
    }

    fn extremum(&self, location: f64, kind: ExtremumKind) -> Extremum {
        Extremum {
            location,
            value: self.p(location),
            kind,
        }
    }

    /// Extrema strictly inside `(lo, 1/2)`, sorted by location.
    fn half_extrema(&self, resolution: usize) -> Result<Vec<Extremum>> {
        let grid = self.grid(resolution);
        let values: Vec<f64> = grid.iter().map(|&w| self.p(w)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntegrand { x: grid[i] });
        }

        // signs of the first differences, zero where lost in rounding
        let signs: Vec<i8> = values
            .windows(2)
            .map(|v| {
                let d = v[1] - v[0];
                let noise = 64.0 * f64::EPSILON * v[0].abs().max(v[1].abs());
                if d.abs() <= noise {
                    0
                } else if d > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();

        let mut found = Vec::new();
        let mut last: Option<(usize, i8)> = None;
        let mut last_bracket_end: Option<usize> = None;
        for (i, &s) in signs.iter().enumerate() {
            if s == 0 {
                continue;
            }
            if let Some((j, prev)) = last {
                if prev != s {
                    if last_bracket_end.is_some_and(|end| end > j) {
                        return Err(Error::ResolutionTooCoarse { resolution });
                    }
                    let kind = if prev > 0 {
                        ExtremumKind::Maximum
                    } else {
                        ExtremumKind::Minimum
                    };
                    let at = self.refine(grid[j], grid[i + 1], kind);
                    found.push(self.extremum(at, kind));
                    last_bracket_end = Some(i + 1);
                }
            }
            last = Some((i, s));
        }

        found.extend(self.hidden_pairs(&grid, &values, &signs));
        found.sort_by(|a, b| a.location.total_cmp(&b.location));
        Ok(found)
    }

    /// A maximum and minimum closer together than the grid spacing leave
    /// no sign change in the differences, only a dip in the slope. Each
    /// well-resolved local minimum of |slope| inside a monotone run is
    /// refined; a derivative of the wrong sign there reveals the pair.
    fn hidden_pairs(&self, grid: &[f64], values: &[f64], signs: &[i8]) -> Vec<Extremum> {
        let slope = |i: usize| (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
        let resolved = |i: usize| {
            let noise = 64.0 * f64::EPSILON * values[i].abs().max(values[i + 1].abs());
            (values[i + 1] - values[i]).abs() > 1e3 * noise
        };
        let mut out = Vec::new();
        for i in 1..signs.len().saturating_sub(1) {
            let s = signs[i];
            if s == 0 || signs[i - 1] != s || signs[i + 1] != s {
                continue;
            }
            if !(resolved(i - 1) && resolved(i) && resolved(i + 1)) {
                continue;
            }
            let (a, m, b) = (slope(i - 1).abs(), slope(i).abs(), slope(i + 1).abs());
            if !(m < a && m < b) {
                continue;
            }
            let lo = grid[i - 1];
            let hi = grid[(i + 2).min(grid.len() - 1)];
            let sign = f64::from(s);
            let (w_min, d_min) = minimize_golden(|w| sign * self.derivative(w), lo, hi, 1e-12 * hi);
            if d_min < -self.derivative_noise(w_min) {
                let (first, second) = if s > 0 {
                    (ExtremumKind::Maximum, ExtremumKind::Minimum)
                } else {
                    (ExtremumKind::Minimum, ExtremumKind::Maximum)
                };
                out.push(self.extremum(self.refine(lo, w_min, first), first));
                out.push(self.extremum(self.refine(w_min, hi, second), second));
            }
        }
        out
    }

    /// Kind of the centre point, or `None` if it is not an extremum.
    fn centre(&self) -> ExtremumKind {
        let c = 0.5;
        let pc = self.p(c);
        if self.density.kind() == EnsembleKind::Bounded {
            let h = DERIVATIVE_STEP * self.width;
            let left = (pc - self.p(c - h)) / h;
            let right = (self.p(c + h) - pc) / h;
            let thr = CUSP_THRESHOLD * pc / self.width;
            if left > thr && right < -thr {
                return ExtremumKind::Cusp;
            }
        }
        let h = CENTRE_STEP * self.width;
        let second = (-self.p(c + 2.0 * h) + 16.0 * self.p(c + h) - 30.0 * pc + 16.0 * self.p(c - h)
            - self.p(c - 2.0 * h))
            / (12.0 * h * h);
        if second > 0.0 {
            ExtremumKind::Minimum
        } else {
            ExtremumKind::Maximum
        }
    }
}

/// Locate all extrema of `P` for `spec` by scanning `resolution` points on
/// the left half of the support, refining, and mirroring.
pub fn find_extrema(spec: &EnsembleSpec, resolution: usize) -> Result<Vec<Extremum>> {
    let density = ShareDensity::new(*spec)?;
    find_extrema_of(&density, resolution)
}

pub fn find_extrema_of(density: &ShareDensity, resolution: usize) -> Result<Vec<Extremum>> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidSpec {
            what: "scan resolution",
            reason: format!("need at least {MIN_RESOLUTION} points, got {resolution}"),
        });
    }
    let scan = HalfScan::new(density);
    let mut half = scan.half_extrema(resolution)?;
    let centre_kind = scan.centre();

    // The extrema next to the centre must alternate with it. A mismatch means
    // an extremum sits between the last grid point and 1/2.
    let last_is_max = half.last().map(|e| e.kind.is_maximum());
    let hidden = match (centre_kind.is_maximum(), last_is_max) {
        (false, None) | (false, Some(false)) => Some(ExtremumKind::Maximum),
        (true, Some(true)) => Some(ExtremumKind::Minimum),
        _ => None,
    };
    if let Some(kind) = hidden {
        let from = half
            .last()
            .map_or(scan.lo, |e| e.location)
            .max(0.5 - 4.0 / resolution as f64 * 0.5);
        let sign = if kind.is_maximum() { -1.0 } else { 1.0 };
        let to = 0.5 - 1e-9;
        if from < to {
            let (at, _) = minimize_golden(|w| sign * scan.p(w), from, to, 1e-13);
            half.push(scan.extremum(at, kind));
        }
    }

    let mut all = half.clone();
    all.push(scan.extremum(0.5, centre_kind));
    all.extend(half.iter().rev().map(|e| scan.extremum(1.0 - e.location, e.kind)));
    Ok(all)
}

fn spread_over_centre(density: &ShareDensity) -> f64 {
    let (a, b) = density.support();
    let (lo, hi) = (a + 0.1 * (b - a), b - 0.1 * (b - a));
    let samples: Vec<f64> = (0..=100)
        .map(|k| density.pdf(lo + (hi - lo) * k as f64 / 100.0))
        .collect();
    let max = samples.iter().cloned().fold(f64::MIN, f64::max);
    let min = samples.iter().cloned().fold(f64::MAX, f64::min);
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    (max - min) / mean
}

/// Assign the modal class for a set of extrema.
pub fn label(density: &ShareDensity, extrema: &[Extremum]) -> Result<ModalClass> {
    let maxima: Vec<&Extremum> = extrema.iter().filter(|e| e.kind.is_maximum()).collect();
    let minima = extrema.len() - maxima.len();
    let centre = extrema
        .iter()
        .find(|e| e.location == 0.5)
        .ok_or(Error::UnrecognizedShape {
            maxima: maxima.len(),
            minima,
        })?;

    let class = match (maxima.len(), minima, centre.kind.is_maximum()) {
        (1, 0, true) => return Ok(ModalClass::Unimodal),
        (3, 2, true) => {
            let edge = maxima
                .iter()
                .filter(|e| e.location != 0.5)
                .map(|e| e.value)
                .fold(f64::MIN, f64::max);
            if edge > centre.value {
                ModalClass::WEdgeDominant
            } else {
                ModalClass::WCenterDominant
            }
        }
        (2, 1, false) => ModalClass::MShaped,
        (maxima, minima, _) => return Err(Error::UnrecognizedShape { maxima, minima }),
    };
    if spread_over_centre(density) < NEAR_UNIFORM_SPREAD {
        Ok(ModalClass::NearUniform)
    } else {
        Ok(class)
    }
}

/// Extrema at the smallest resolution (from [`DEFAULT_RESOLUTION`] upward,
/// doubling) whose extremum count agrees with the next doubling.
fn stable_extrema(density: &ShareDensity) -> Result<Vec<Extremum>> {
    let mut resolution = DEFAULT_RESOLUTION;
    let mut previous: Option<Vec<Extremum>> = None;
    while resolution <= MAX_RESOLUTION {
        match find_extrema_of(density, resolution) {
            Ok(current) => {
                if let Some(prev) = &previous {
                    if prev.len() == current.len() {
                        return Ok(current);
                    }
                }
                previous = Some(current);
            }
            Err(Error::ResolutionTooCoarse { .. }) => previous = None,
            Err(e) => return Err(e),
        }
        resolution *= 2;
    }
    previous.ok_or(Error::ResolutionTooCoarse {
        resolution: MAX_RESOLUTION,
    })
}

pub fn classify_density(density: &ShareDensity) -> Result<ModalProfile> {
    let extrema = stable_extrema(density)?;
    let modal_class = label(density, &extrema)?;
    Ok(ModalProfile { extrema, modal_class })
}

pub fn classify(spec: &EnsembleSpec) -> Result<ModalProfile> {
    classify_density(&ShareDensity::new(*spec)?)
}

/// Sign-relevant quadratic coefficient of the exponential `P` about 1/2:
/// `1 - alpha - 2 sqrt(delta) K_{2a-1}(4 sqrt(delta)) / K_{2a}(4 sqrt(delta))`.
/// Positive means a minimum at the centre. The magnitude carries an omitted
/// positive prefactor and is not meaningful on its own.
pub fn curvature_coefficient(spec: &EnsembleSpec) -> Result<f64> {
    spec.validate()?;
    if spec.kind != EnsembleKind::ExponentialTempered {
        return Err(Error::WrongKind {
            expected: "exponential",
        });
    }
    curvature(spec.alpha, spec.delta())
}

fn curvature(alpha: f64, delta: f64) -> Result<f64> {
    let s = delta.sqrt();
    Ok(1.0 - alpha - 2.0 * s * bessel_k_ratio(2.0 * alpha - 1.0, 2.0 * alpha, 4.0 * s)?)
}

fn check_sub_unit_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
            reason: "a shape transition exists only for 0 < alpha < 1",
        })
    }
}

const LN_DELTA_MIN_EXPONENTIAL: f64 = -27.631_021_115_928_547; // ln 1e-12
const LN_DELTA_MAX: f64 = -0.010_050_335_853_501_44; // ln 0.99

/// `delta_c` for the exponential kind: the root in `ln delta` of
/// `1 - alpha = 2 sqrt(delta) K_{2a-1}(4 sqrt(delta)) / K_{2a}(4 sqrt(delta))`.
pub fn critical_delta_exponential(alpha: f64) -> Result<f64> {
    check_sub_unit_alpha(alpha)?;
    let spec = BracketSolverSpec::new(LN_DELTA_MIN_EXPONENTIAL, LN_DELTA_MAX).with_tol(1e-12);
    let root = find_root(|ln_d| curvature(alpha, ln_d.exp()).unwrap_or(f64::NAN), &spec).map_err(|e| match e {
        Error::NoSignChange { .. } => Error::NoTransition(format!(
            "curvature equation has no root for alpha = {alpha} in [1e-12, 0.99]"
        )),
        other => other,
    })?;
    Ok(root.exp())
}

/// Exponential `delta_c` located independently of the Bessel equation, by
/// bisecting on whether [`classify`] reports a single peak.
pub fn critical_delta_exponential_by_classification(alpha: f64) -> Result<f64> {
    check_sub_unit_alpha(alpha)?;
    single_peak_boundary(EnsembleKind::ExponentialTempered, alpha, LN_DELTA_MIN_EXPONENTIAL, 1e-9)
}

fn single_peak_boundary(kind: EnsembleKind, alpha: f64, ln_lo: f64, tol: f64) -> Result<f64> {
    let single_peak = |ln_d: f64| {
        EnsembleSpec::from_delta(kind, alpha, ln_d.exp())
            .and_then(|s| classify(&s))
            .map(|p| p.has_single_peak())
            .unwrap_or(false)
    };
    let spec = BracketSolverSpec::new(ln_lo, LN_DELTA_MAX).with_tol(tol);
    bisect_predicate(single_peak, &spec)
        .map(f64::exp)
        .map_err(|_| Error::NoTransition(format!("single-peak boundary not bracketed for alpha = {alpha}")))
}

const LN_DELTA_MIN_BOUNDED: f64 = -460.517_018_598_809_1; // ln 1e-200

/// Off-centre extrema on the left half of the support.
fn off_centre(density: &ShareDensity) -> Result<Vec<Extremum>> {
    let all = find_extrema_of(density, DEFAULT_RESOLUTION)?;
    Ok(all.into_iter().filter(|e| e.location < 0.5).collect())
}

fn bounded_density(alpha: f64, ln_delta: f64) -> Result<ShareDensity> {
    ShareDensity::new(EnsembleSpec::from_delta(EnsembleKind::Bounded, alpha, ln_delta.exp())?)
}

/// `(P(omega_max) - P(1/2)) / P(1/2)` for the bounded kind; `-1` when there is
/// no off-centre maximum.
fn edge_excess(alpha: f64, ln_delta: f64) -> Result<f64> {
    let density = bounded_density(alpha, ln_delta)?;
    let centre = density.pdf(0.5);
    let edge = off_centre(&density)?
        .iter()
        .filter(|e| e.kind.is_maximum())
        .map(|e| e.value)
        .fold(f64::NAN, f64::max);
    Ok(if edge.is_nan() { -1.0 } else { (edge - centre) / centre })
}

/// Bounded-kind thresholds: `delta_c`, where off-centre extrema appear, and
/// `delta_cc`, where the off-centre maxima overtake `P(1/2)`.
pub fn critical_delta_bounded(alpha: f64) -> Result<CriticalThresholds> {
    check_sub_unit_alpha(alpha)?;
    let has_extrema = |ln_d: f64| {
        bounded_density(alpha, ln_d)
            .and_then(|d| off_centre(&d))
            .map(|v| !v.is_empty())
            .unwrap_or(false)
    };
    let spec = BracketSolverSpec::new(LN_DELTA_MIN_BOUNDED, LN_DELTA_MAX).with_tol(1e-10);
    let ln_c = bisect_predicate(has_extrema, &spec).map_err(|_| {
        Error::NoTransition(format!(
            "no off-centre extrema for alpha = {alpha} down to delta = 1e-200"
        ))
    })?;
    let delta_c = ln_c.exp();

    // walk down from delta_c until the edge maxima dominate
    let ln_hi = ln_c - 1e-6;
    let mut ln_lo = ln_hi;
    let mut found = false;
    while ln_lo > LN_DELTA_MIN_BOUNDED {
        ln_lo -= std::f64::consts::LN_2;
        if edge_excess(alpha, ln_lo)? > 0.0 {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::NoTransition(format!(
            "edge maxima never dominate for alpha = {alpha}"
        )));
    }
    let spec = BracketSolverSpec::new(ln_lo, ln_hi).with_tol(1e-10);
    let ln_cc = find_root(|ln_d| edge_excess(alpha, ln_d).unwrap_or(f64::NAN), &spec)?;
    Ok(CriticalThresholds {
        alpha,
        kind: EnsembleKind::Bounded,
        delta_c: Some(delta_c),
        delta_cc: Some(ln_cc.exp()),
    })
}

/// Thresholds for either kind; both absent for `alpha >= 1`.
pub fn critical_thresholds(kind: EnsembleKind, alpha: f64) -> Result<CriticalThresholds> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            reason: "alpha must be positive",
        });
    }
    if alpha >= 1.0 {
        return Ok(CriticalThresholds {
            alpha,
            kind,
            delta_c: None,
            delta_cc: None,
        });
    }
    match kind {
        EnsembleKind::Bounded => critical_delta_bounded(alpha),
        EnsembleKind::ExponentialTempered => Ok(CriticalThresholds {
            alpha,
            kind,
            delta_c: Some(critical_delta_exponential(alpha)?),
            delta_cc: None,
        }),
    }
}
