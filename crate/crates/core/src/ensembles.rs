//! Parental tempered Pareto laws: the bounded law with hard cutoffs `[L, H]`
//! and the exponentially tempered law `x^-(1+alpha) exp(-L/x - x/H)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::special_functions::{bessel_k_ratio, bessel_k_scaled, GaussLegendre};

/// Name of the generator behind every sampling routine.
pub const RNG_ALGORITHM: &str = "ChaCha20";

/// Number of cells in the exponential kind's tabulated CDF.
pub const CDF_TABLE_CELLS: usize = 4096;

/// The exponential kind's sampling grid spans `[L / 100, 100 H]`.
pub const CDF_TABLE_SPAN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Bounded,
    #[serde(rename = "exponential")]
    ExponentialTempered,
}

impl EnsembleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::Bounded => "bounded",
            EnsembleKind::ExponentialTempered => "exponential",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded" => Ok(EnsembleKind::Bounded),
            "exp" | "exponential" => Ok(EnsembleKind::ExponentialTempered),
            other => Err(Error::InvalidSpec {
                what: "ensemble kind",
                reason: format!("expected `bounded` or `exp`, got `{other}`"),
            }),
        }
    }
}

/// A tempered Pareto law. Construct through [`EnsembleSpec::new`] so that
/// `alpha > 0` and `0 < L < H` hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub alpha: f64,
    pub lower_cutoff: f64,
    pub upper_cutoff: f64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, alpha: f64, lower_cutoff: f64, upper_cutoff: f64) -> Result<Self> {
        let spec = EnsembleSpec {
            kind,
            alpha,
            lower_cutoff,
            upper_cutoff,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `L = delta`, `H = 1`. The share distribution depends on the cutoffs only
    /// through their ratio.
    pub fn from_delta(kind: EnsembleKind, alpha: f64, delta: f64) -> Result<Self> {
        EnsembleSpec::new(kind, alpha, delta, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidSpec {
                what: "ensemble",
                reason: format!("alpha must be positive and finite, got {}", self.alpha),
            });
        }
        let (l, h) = (self.lower_cutoff, self.upper_cutoff);
        if !(l > 0.0 && h.is_finite() && l < h) {
            return Err(Error::InvalidSpec {
                what: "ensemble",
                reason: format!("cutoffs must satisfy 0 < L < H, got L = {l}, H = {h}"),
            });
        }
        Ok(())
    }

    /// `delta = L / H`, in `(0, 1)`.
    pub fn delta(&self) -> f64 {
        self.lower_cutoff / self.upper_cutoff
    }
}

/// A validated ensemble with its normalization constant cached.
#[derive(Debug, Clone, Copy)]
pub struct Ensemble {
    spec: EnsembleSpec,
    ln_norm: f64,
}

impl Ensemble {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        let (alpha, l, h) = (spec.alpha, spec.lower_cutoff, spec.upper_cutoff);
        let delta = spec.delta();
        let ln_norm = match spec.kind {
            // alpha L^alpha / (1 - delta^alpha)
            EnsembleKind::Bounded => alpha.ln() + alpha * l.ln() - (-(alpha * delta.ln()).exp_m1()).ln(),
            // (LH)^{alpha/2} / (2 K_alpha(2 sqrt(delta)))
            EnsembleKind::ExponentialTempered => {
                let z = 2.0 * delta.sqrt();
                0.5 * alpha * (l * h).ln() - std::f64::consts::LN_2 - (bessel_k_scaled(alpha, z)?.ln() - z)
            }
        };
        Ok(Ensemble { spec, ln_norm })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    /// Density `Psi(x)` without argument checks; zero for `x <= 0`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 {
            return 0.0;
        }
        let EnsembleSpec {
            kind,
            alpha,
            lower_cutoff: l,
            upper_cutoff: h,
        } = self.spec;
        match kind {
            EnsembleKind::Bounded => {
                if x < l || x > h {
                    0.0
                } else {
                    (self.ln_norm - (1.0 + alpha) * x.ln()).exp()
                }
            }
            EnsembleKind::ExponentialTempered => (self.ln_norm - (1.0 + alpha) * x.ln() - l / x - x / h).exp(),
        }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x <= 0.0 {
            return Err(Error::Domain {
                what: "x",
                value: x,
                reason: "the density is defined for x > 0",
            });
        }
        Ok(self.pdf(x))
    }

    /// `<x^n>`. Exact in both kinds; the exponential form is
    /// `(LH)^{n/2} K_{n-alpha}(2 sqrt(delta)) / K_alpha(2 sqrt(delta))`.
    pub fn moment(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        let EnsembleSpec {
            kind,
            alpha,
            lower_cutoff: l,
            upper_cutoff: h,
        } = self.spec;
        let nf = f64::from(n);
        match kind {
            EnsembleKind::Bounded => {
                // C (H^s - L^s) / s with s = n - alpha, written as
                // C L^s expm1(s ln(H/L)) / s; the s -> 0 limit is C ln(H/L).
                let s = nf - alpha;
                let ln_ratio = (h / l).ln();
                let norm = self.ln_norm.exp();
                if s == 0.0 {
                    Ok(norm * ln_ratio)
                } else {
                    Ok(norm * l.powf(s) * (s * ln_ratio).exp_m1() / s)
                }
            }
            EnsembleKind::ExponentialTempered => {
                let z = 2.0 * self.spec.delta().sqrt();
                Ok((l * h).powf(0.5 * nf) * bessel_k_ratio(nf - alpha, alpha, z)?)
            }
        }
    }

    /// Range of `ln x` holding all but a negligible fraction of the mass.
    pub fn log_support(&self) -> (f64, f64) {
        let (l, h) = (self.spec.lower_cutoff, self.spec.upper_cutoff);
        match self.spec.kind {
            EnsembleKind::Bounded => (l.ln(), h.ln()),
            EnsembleKind::ExponentialTempered => ((l / CDF_TABLE_SPAN).ln(), (h * CDF_TABLE_SPAN).ln()),
        }
    }

    /// Build the sampler for this ensemble. For the exponential kind this
    /// tabulates the CDF once; reuse the sampler across batches.
    pub fn sampler(&self) -> Sampler {
        match self.spec.kind {
            EnsembleKind::Bounded => {
                let alpha = self.spec.alpha;
                let lo = self.spec.lower_cutoff.powf(-alpha);
                let hi = self.spec.upper_cutoff.powf(-alpha);
                Sampler::Bounded {
                    lo_pow: lo,
                    span: lo - hi,
                    inv_alpha: 1.0 / alpha,
                    range: (self.spec.lower_cutoff, self.spec.upper_cutoff),
                }
            }
            EnsembleKind::ExponentialTempered => Sampler::Tabulated(TabulatedCdf::build(self)),
        }
    }
}

pub fn density(spec: &EnsembleSpec, x: f64) -> Result<f64> {
    Ensemble::new(*spec)?.density(x)
}

pub fn moment(spec: &EnsembleSpec, n: u32) -> Result<f64> {
    Ensemble::new(*spec)?.moment(n)
}

/// CDF of the exponential kind tabulated on a logarithmic grid, inverted by
/// piecewise-linear interpolation of `ln x` against the cumulative mass.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    ln_x: Vec<f64>,
    cdf: Vec<f64>,
    /// Mass captured by the grid before normalization.
    raw_total: f64,
}

impl TabulatedCdf {
    pub fn build(ensemble: &Ensemble) -> Self {
        let (u_lo, u_hi) = ensemble.log_support();
        let step = (u_hi - u_lo) / CDF_TABLE_CELLS as f64;
        let rule = GaussLegendre::sixteen();
        let ln_x: Vec<f64> = (0..=CDF_TABLE_CELLS)
            .map(|i| {
                if i == CDF_TABLE_CELLS {
                    u_hi
                } else {
                    u_lo + step * i as f64
                }
            })
            .collect();
        let mut cdf = Vec::with_capacity(ln_x.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in ln_x.windows(2) {
            acc += rule.integrate(|u| ensemble.pdf(u.exp()) * u.exp(), w[0], w[1]);
            cdf.push(acc);
        }
        let raw_total = acc;
        for c in &mut cdf {
            *c /= raw_total;
        }
        TabulatedCdf { ln_x, cdf, raw_total }
    }

    pub fn raw_total(&self) -> f64 {
        self.raw_total
    }

    pub fn nodes(&self) -> usize {
        self.ln_x.len()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 {
            return 0.0;
        }
        let u = x.ln();
        let i = self.ln_x.partition_point(|&v| v <= u);
        if i == 0 {
            return 0.0;
        }
        if i == self.ln_x.len() {
            return 1.0;
        }
        let t = (u - self.ln_x[i - 1]) / (self.ln_x[i] - self.ln_x[i - 1]);
        self.cdf[i - 1] + t * (self.cdf[i] - self.cdf[i - 1])
    }

    /// Inverse CDF for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < p).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 {
            ((p - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        (self.ln_x[i - 1] + t * (self.ln_x[i] - self.ln_x[i - 1])).exp()
    }
}

/// Draws from one ensemble, given a uniform variate in `(0, 1)`.
#[derive(Debug, Clone)]
pub enum Sampler {
    /// Exact inverse CDF `x = [L^-a - u (L^-a - H^-a)]^{-1/a}`.
    Bounded {
        lo_pow: f64,
        span: f64,
        inv_alpha: f64,
        range: (f64, f64),
    },
    Tabulated(TabulatedCdf),
}

impl Sampler {
    pub fn transform(&self, u: f64) -> f64 {
        match self {
            Sampler::Bounded {
                lo_pow,
                span,
                inv_alpha,
                range,
            } => (lo_pow - u * span).powf(-inv_alpha).clamp(range.0, range.1),
            Sampler::Tabulated(table) => table.quantile(u),
        }
    }

    /// `n` draws from stream `stream` of the generator seeded with `seed`.
    pub fn draw(&self, n: usize, seed: u64, stream: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, stream);
        (0..n).map(|_| self.transform(rng.sample::<f64, _>(Open01))).collect()
    }
}

/// Independent generator for `(seed, stream)`; distinct streams never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A batch of parental draws together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub ensemble: EnsembleSpec,
}

impl SampleBatch {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let s = &self.ensemble;
        writeln!(
            out,
            "# ensemble={} alpha={} L={} H={} seed={}",
            s.kind, s.alpha, s.lower_cutoff, s.upper_cutoff, self.seed
        )?;
        for &v in &self.values {
            writeln!(out, "{}", fmt_f64(v))?;
        }
        Ok(())
    }
}

/// `n` independent draws from the ensemble; deterministic in `(spec, n, seed)`.
pub fn sample(spec: &EnsembleSpec, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidSpec {
            what: "sample size",
            reason: "n must be at least 1".into(),
        });
    }
    let sampler = Ensemble::new(*spec)?.sampler();
    Ok(SampleBatch {
        values: sampler.draw(n, seed, 0),
        seed,
        ensemble: *spec,
    })
}
