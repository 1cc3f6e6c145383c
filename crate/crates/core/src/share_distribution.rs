//! The share density `P(omega)` for `omega = x1 / (x1 + x2)`.
//!
//! Two evaluators are provided and act as mutual oracles: the closed forms
//! (power law with edge term for the bounded kind, a single `K_{2 alpha}` for
//! the exponential kind) and direct quadrature of
//! `P(omega) = (1 - omega)^-2 ∫ x Psi(omega x / (1 - omega)) Psi(x) dx`.

use std::io::Write;

use crate::ensembles::{Ensemble, EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, provenance_line};
use crate::special_functions::{bessel_k_scaled, integrate, QuadratureSpec};

/// `m = min(1/omega, 1/(1-omega))`, `M = max(1/omega, 1/(1-omega))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxPair {
    pub m: f64,
    pub big_m: f64,
}

impl MinMaxPair {
    pub fn new(omega: f64) -> Self {
        let a = 1.0 / omega;
        let b = 1.0 / (1.0 - omega);
        MinMaxPair {
            m: a.min(b),
            big_m: a.max(b),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ClosedForm {
    /// `alpha / (2 (1 - delta^alpha)^2)`
    Bounded { ln_prefactor: f64 },
    /// `-ln 2 - 2 ln K_alpha(2 sqrt(delta))`
    Exponential { ln_prefactor: f64 },
}

/// `P(omega)` for one ensemble, with its support and cached constants.
#[derive(Debug, Clone, Copy)]
pub struct ShareDensity {
    ensemble: Ensemble,
    support: (f64, f64),
    alpha: f64,
    ln_delta: f64,
    form: ClosedForm,
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "omega",
            value: omega,
            reason: "the share lies in (0, 1)",
        })
    }
}

impl ShareDensity {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        let ensemble = Ensemble::new(spec)?;
        let alpha = spec.alpha;
        let delta = spec.delta();
        let ln_delta = delta.ln();
        let (support, form) = match spec.kind {
            EnsembleKind::Bounded => {
                let omega_c = delta / (1.0 + delta);
                let one_minus = -(alpha * ln_delta).exp_m1();
                let ln_prefactor = (0.5 * alpha).ln() - 2.0 * one_minus.ln();
                ((omega_c, 1.0 - omega_c), ClosedForm::Bounded { ln_prefactor })
            }
            EnsembleKind::ExponentialTempered => {
                let z = 2.0 * delta.sqrt();
                let ln_k = bessel_k_scaled(alpha, z)?.ln() - z;
                let ln_prefactor = -std::f64::consts::LN_2 - 2.0 * ln_k;
                ((0.0, 1.0), ClosedForm::Exponential { ln_prefactor })
            }
        };
        Ok(ShareDensity {
            ensemble,
            support,
            alpha,
            ln_delta,
            form,
        })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        self.ensemble.spec()
    }

    pub fn kind(&self) -> EnsembleKind {
        self.spec().kind
    }

    pub fn delta(&self) -> f64 {
        self.ln_delta.exp()
    }

    /// Closed support `[omega_c, 1 - omega_c]` (bounded) or `[0, 1]`.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Closed-form `P(omega)`; zero outside `(0, 1)` and outside the support.
    /// Returns NaN only if the Bessel quadrature fails.
    pub fn pdf(&self, omega: f64) -> f64 {
        if !(omega > 0.0 && omega < 1.0) {
            return 0.0;
        }
        // evaluate on the left half so that P(omega) = P(1 - omega)
        let pair = MinMaxPair::new(omega.min(1.0 - omega));
        let ln_u = -pair.big_m.ln();
        let ln_v = -pair.m.ln();
        let alpha = self.alpha;
        match self.form {
            ClosedForm::Bounded { ln_prefactor } => {
                // pref u^{-1-a} v^{-1-a} (u^{2a} - delta^{2a} v^{2a})
                //   = pref u^{a-1} v^{-1-a} (1 - (delta v / u)^{2a})
                let ln_edge = self.ln_delta + ln_v - ln_u;
                if ln_edge >= 0.0 {
                    return 0.0;
                }
                let edge = -(2.0 * alpha * ln_edge).exp_m1();
                (ln_prefactor + (alpha - 1.0) * ln_u - (1.0 + alpha) * ln_v).exp() * edge
            }
            ClosedForm::Exponential { ln_prefactor } => {
                let ln_uv = ln_u + ln_v;
                let z = 2.0 * (0.5 * (self.ln_delta - ln_uv)).exp();
                match bessel_k_scaled(2.0 * alpha, z) {
                    Ok(k) => (ln_prefactor + k.ln() - z - ln_uv).exp(),
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// Closed-form `P(omega)` with a domain check.
    pub fn value(&self, omega: f64) -> Result<f64> {
        check_omega(omega)?;
        let v = self.pdf(omega);
        if v.is_nan() {
            return Err(Error::QuadratureNonConvergence {
                estimate: f64::NAN,
                error: f64::NAN,
                subdivisions: 0,
            });
        }
        Ok(v)
    }

    /// `P(omega)` by direct quadrature over the parental densities.
    pub fn value_by_integral(&self, omega: f64, quad: &QuadratureSpec) -> Result<f64> {
        check_omega(omega)?;
        let spec = *self.spec();
        let r = omega / (1.0 - omega);
        let scale = (1.0 - omega).powi(-2);
        let e = &self.ensemble;
        let (l, h) = (spec.lower_cutoff, spec.upper_cutoff);
        match spec.kind {
            EnsembleKind::Bounded => {
                // overlap of x in [L, H] and r x in [L, H]
                let lo = l.max(l / r);
                let hi = h.min(h / r);
                if lo >= hi {
                    return Ok(0.0);
                }
                let v = integrate(|x| x * e.pdf(r * x) * e.pdf(x), lo, hi, quad)?;
                Ok(scale * v)
            }
            EnsembleKind::ExponentialTempered => {
                // both factors are below e^-1000 outside [L/1000, 1000 H]
                let pad = 1000f64.ln();
                let lo = (l.ln() - pad).max((l / r).ln() - pad);
                let hi = (h.ln() + pad).min((h / r).ln() + pad);
                let v = integrate(
                    |t: f64| {
                        let x = t.exp();
                        x * x * e.pdf(r * x) * e.pdf(x)
                    },
                    lo,
                    hi,
                    quad,
                )?;
                Ok(scale * v)
            }
        }
    }

    /// Integration breakpoints: support ends and the centre.
    fn pieces(&self) -> [(f64, f64); 2] {
        let (a, b) = self.support;
        [(a, 0.5), (0.5, b)]
    }

    /// `∫ omega^k P(omega) d omega` over the support.
    pub fn raw_moment(&self, k: i32, quad: &QuadratureSpec) -> Result<f64> {
        let mut total = 0.0;
        for (a, b) in self.pieces() {
            total += integrate(|w| w.powi(k) * self.pdf(w), a, b, quad)?;
        }
        Ok(total)
    }

    pub fn normalization(&self) -> Result<f64> {
        self.raw_moment(0, &MOMENT_QUADRATURE)
    }

    /// `<omega>`; equals 1/2 for every ensemble.
    pub fn mean(&self) -> Result<f64> {
        self.raw_moment(1, &MOMENT_QUADRATURE)
    }

    /// Uniform grid of `grid_points` over the support with closed-form values.
    /// Bounded grids include the support edges; exponential grids are interior.
    pub fn tabulate(&self, grid_points: usize) -> Result<Vec<(f64, f64)>> {
        let omegas = self.tabulation_grid(grid_points)?;
        Ok(omegas.into_iter().map(|w| (w, self.pdf(w))).collect())
    }

    /// The abscissae used by [`ShareDensity::tabulate`], mirrored exactly
    /// around 1/2.
    pub fn tabulation_grid(&self, grid_points: usize) -> Result<Vec<f64>> {
        if grid_points < 2 {
            return Err(Error::InvalidSpec {
                what: "tabulation grid",
                reason: format!("need at least 2 points, got {grid_points}"),
            });
        }
        let n = grid_points;
        let left = |i: usize| -> f64 {
            match self.kind() {
                EnsembleKind::Bounded => {
                    let (a, b) = self.support;
                    if 2 * i + 1 == n {
                        0.5
                    } else {
                        a + (b - a) * i as f64 / (n - 1) as f64
                    }
                }
                EnsembleKind::ExponentialTempered => (i + 1) as f64 / (n + 1) as f64,
            }
        };
        Ok((0..n)
            .map(|i| if 2 * i < n { left(i) } else { 1.0 - left(n - 1 - i) })
            .collect())
    }
}

/// Quadrature used for normalization and moments of `P`.
pub const MOMENT_QUADRATURE: QuadratureSpec = QuadratureSpec {
    abs_tol: 1e-300,
    rel_tol: 1e-12,
    max_subdivisions: 4000,
};

/// Default quadrature for the integral evaluator.
pub const ORACLE_QUADRATURE: QuadratureSpec = QuadratureSpec {
    abs_tol: 1e-300,
    rel_tol: 1e-12,
    max_subdivisions: 2000,
};

pub fn share_density_closed(spec: &EnsembleSpec, omega: f64) -> Result<f64> {
    ShareDensity::new(*spec)?.value(omega)
}

pub fn share_density_integral(spec: &EnsembleSpec, omega: f64, quad: &QuadratureSpec) -> Result<f64> {
    ShareDensity::new(*spec)?.value_by_integral(omega, quad)
}

pub fn share_mean(density: &ShareDensity) -> Result<f64> {
    density.mean()
}

pub fn tabulate(density: &ShareDensity, grid_points: usize) -> Result<Vec<(f64, f64)>> {
    density.tabulate(grid_points)
}

/// Write a tabulation as CSV: comment lines, then `omega,p_omega` and,
/// when given, a third `p_omega_oracle` column.
pub fn write_tabulation_csv<W: Write>(
    mut out: W,
    density: &ShareDensity,
    rows: &[(f64, f64)],
    oracle: Option<&[f64]>,
) -> std::io::Result<()> {
    let spec = density.spec();
    writeln!(
        out,
        "# kind={} alpha={} delta={} grid={}",
        spec.kind,
        spec.alpha,
        spec.delta(),
        rows.len()
    )?;
    writeln!(out, "{}", provenance_line())?;
    match oracle {
        None => {
            writeln!(out, "omega,p_omega")?;
            for &(w, p) in rows {
                writeln!(out, "{},{}", fmt_f64(w), fmt_f64(p))?;
            }
        }
        Some(extra) => {
            writeln!(out, "omega,p_omega,p_omega_oracle")?;
            for (&(w, p), &q) in rows.iter().zip(extra) {
                writeln!(out, "{},{},{}", fmt_f64(w), fmt_f64(p), fmt_f64(q))?;
            }
        }
    }
    Ok(())
}
