//! Bracketing root finder and a golden-section minimizer.

use crate::error::{Error, Result};

/// Bracket and stopping rule for [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketSolverSpec {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl BracketSolverSpec {
    pub const DEFAULT_TOL: f64 = 1e-12;
    pub const DEFAULT_MAX_ITERATIONS: usize = 400;

    pub fn new(lo: f64, hi: f64) -> Self {
        BracketSolverSpec {
            lo,
            hi,
            tol: Self::DEFAULT_TOL,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidSpec {
                what: "bracket",
                reason: format!("endpoints must be finite and ordered, got [{}, {}]", self.lo, self.hi),
            });
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidSpec {
                what: "bracket",
                reason: format!("tolerance must be positive, got {}", self.tol),
            });
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidSpec {
                what: "bracket",
                reason: "max iterations must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Bisection on `[spec.lo, spec.hi]`. Stops once the bracket is narrower than
/// `2 * spec.tol` and returns its midpoint.
pub fn find_root<F>(f: F, spec: &BracketSolverSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let (mut lo, mut hi) = (spec.lo, spec.hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;

    for _ in 0..spec.max_iterations {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * spec.tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= 2.0 * spec.tol {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::MaxIterations {
        iterations: spec.max_iterations,
        lo,
        hi,
    })
}

/// Bisection on a boolean predicate that is `true` at `lo` and `false` at
/// `hi` (or vice versa). Returns the midpoint of the final transition bracket.
pub fn bisect_predicate<P>(predicate: P, spec: &BracketSolverSpec) -> Result<f64>
where
    P: Fn(f64) -> bool,
{
    spec.validate()?;
    let (mut lo, mut hi) = (spec.lo, spec.hi);
    let at_lo = predicate(lo);
    if at_lo == predicate(hi) {
        return Err(Error::NoSignChange {
            lo,
            hi,
            f_lo: if at_lo { 1.0 } else { -1.0 },
            f_hi: if at_lo { 1.0 } else { -1.0 },
        });
    }
    for _ in 0..spec.max_iterations {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * spec.tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if predicate(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::MaxIterations {
        iterations: spec.max_iterations,
        lo,
        hi,
    })
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(x_min, f(x_min))`.
pub fn minimize_golden<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
