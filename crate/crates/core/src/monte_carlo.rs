//! Empirical check of `P(omega)`: sample pairs, histogram the shares, and
//! measure L1 and Kolmogorov-Smirnov distances to the analytic law.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{Ensemble, EnsembleKind, EnsembleSpec, RNG_ALGORITHM};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::share_distribution::ShareDensity;
use crate::special_functions::GaussLegendre;

/// Smallest sample size accepted by [`compare`].
pub const MIN_COMPARE_SAMPLES: usize = 10_000;
/// Smallest bin count accepted by [`compare`].
pub const MIN_COMPARE_BINS: usize = 10;
/// Asymptotic two-sided KS critical value at the 5% level, times `sqrt(n)`.
pub const KS_CRITICAL_5PCT: f64 = 1.358;
/// Nodes of the cached analytic CDF.
pub const CDF_NODES: usize = 4096;

/// `n` shares `x1 / (x1 + x2)` with `x1`, `x2` drawn from streams 1 and 2
/// of `seed`.
pub fn sample_share(spec: &EnsembleSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidSpec {
            what: "sample size",
            reason: "n must be at least 1".into(),
        });
    }
    let sampler = Ensemble::new(*spec)?.sampler();
    let (x1, x2) = rayon::join(|| sampler.draw(n, seed, 1), || sampler.draw(n, seed, 2));
    Ok(x1.iter().zip(&x2).map(|(a, b)| a / (a + b)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Empty histogram with `bins` equal bins on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || lo >= hi || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidSpec {
                what: "histogram",
                reason: format!("need bins >= 1 and lo < hi, got {bins} bins on [{lo}, {hi}]"),
            });
        }
        let mut bin_edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        bin_edges[bins] = hi;
        Ok(Histogram {
            bin_edges,
            counts: vec![0; bins],
            total: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Add a value; values outside the range land in the end bins.
    pub fn push(&mut self, x: f64) {
        let lo = self.bin_edges[0];
        let hi = self.bin_edges[self.bins()];
        let bins = self.bins();
        let i = ((x - lo) / (hi - lo) * bins as f64).floor();
        let i = if i.is_nan() {
            0
        } else {
            (i.max(0.0) as usize).min(bins - 1)
        };
        self.counts[i] += 1;
        self.total += 1;
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, xs: I) {
        xs.into_iter().for_each(|x| self.push(x));
    }

    /// Add the counts of a histogram with identical edges.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.bin_edges != other.bin_edges {
            return Err(Error::InvalidSpec {
                what: "histogram merge",
                reason: "bin edges differ".into(),
            });
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.total += other.total;
        Ok(())
    }

    /// `count / (total * width)` per bin.
    pub fn densities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(&c, e)| c as f64 / (self.total as f64 * (e[1] - e[0])))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,count")?;
        for (e, c) in self.bin_edges.windows(2).zip(&self.counts) {
            writeln!(out, "{},{},{}", fmt_f64(e[0]), fmt_f64(e[1]), c)?;
        }
        Ok(())
    }
}

/// Analytic CDF of `omega`, integrated cell by cell with 16-point
/// Gauss-Legendre on a grid refined towards the support edges.
#[derive(Debug, Clone)]
pub struct ShareCdf {
    density: ShareDensity,
    nodes: Vec<f64>,
    cdf: Vec<f64>,
    scale: f64,
}

impl ShareCdf {
    pub fn new(density: ShareDensity) -> Self {
        let nodes = cdf_nodes(&density, CDF_NODES);
        let gl = GaussLegendre::sixteen();
        let cells: Vec<f64> = nodes
            .par_windows(2)
            .map(|w| gl.integrate(|x| density.pdf(x), w[0], w[1]))
            .collect();
        let mut cdf = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for c in cells {
            acc += c;
            cdf.push(acc);
        }
        let scale = 1.0 / acc;
        cdf.iter_mut().for_each(|c| *c *= scale);
        ShareCdf {
            density,
            nodes,
            cdf,
            scale,
        }
    }

    pub fn density(&self) -> &ShareDensity {
        &self.density
    }

    fn cell(&self, x: f64) -> Option<usize> {
        if x <= self.nodes[0] || x >= self.nodes[self.nodes.len() - 1] {
            return None;
        }
        Some(self.nodes.partition_point(|&n| n <= x) - 1)
    }

    fn clamp_end(&self, x: f64) -> f64 {
        if x <= self.nodes[0] {
            0.0
        } else {
            1.0
        }
    }

    /// Linear interpolation between nodes.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => self.clamp_end(x),
            Some(i) => {
                let (a, b) = (self.nodes[i], self.nodes[i + 1]);
                let t = (x - a) / (b - a);
                self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
            }
        }
    }

    /// CDF with the partial cell integrated by quadrature.
    pub fn cdf_exact(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => self.clamp_end(x),
            Some(i) => {
                let part = GaussLegendre::sixteen().integrate(|y| self.density.pdf(y), self.nodes[i], x);
                (self.cdf[i] + part * self.scale).min(1.0)
            }
        }
    }

    /// Analytic probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cdf_exact(b) - self.cdf_exact(a)
    }
}

/// Half-grid on `[lo, 1/2]` that is uniform plus geometric towards `lo`,
/// mirrored onto `[1/2, 1 - lo]`.
fn cdf_nodes(density: &ShareDensity, nodes: usize) -> Vec<f64> {
    let lo = match density.kind() {
        EnsembleKind::Bounded => density.support().0,
        EnsembleKind::ExponentialTempered => (density.delta() * 1e-4).min(1e-3),
    };
    let half = 0.5 - lo;
    let per_half = nodes / 2;
    let n_geo = per_half / 4;
    let n_uni = per_half - n_geo;
    let min_offset = half * 1e-6 * density.delta().min(1.0);
    let ratio = (0.5 * half / n_uni as f64 / min_offset).ln();
    let mut left: Vec<f64> = (0..n_geo)
        .map(|k| lo + min_offset * (ratio * k as f64 / n_geo as f64).exp())
        .chain((1..n_uni).map(|k| lo + half * k as f64 / n_uni as f64))
        .collect();
    left.push(lo);
    left.sort_by(f64::total_cmp);
    left.dedup();
    let mut all = left.clone();
    all.push(0.5);
    all.extend(left.iter().rev().map(|&x| 1.0 - x));
    all
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub l1_distance: f64,
    pub ks_statistic: f64,
    /// `KS_CRITICAL_5PCT / sqrt(n)`.
    pub ks_threshold: f64,
    pub ks_pass: bool,
    pub sample_mean: f64,
    /// Standard error of `sample_mean`.
    pub mean_std_error: f64,
    pub n_samples: usize,
    pub bins: usize,
    pub seed: u64,
    pub rng: String,
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`. Sorts in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Sum over bins of `|empirical mass - analytic mass|`.
pub fn l1_distance(hist: &Histogram, cdf: &ShareCdf) -> f64 {
    let total = hist.total as f64;
    hist.bin_edges
        .windows(2)
        .zip(&hist.counts)
        .map(|(e, &c)| (c as f64 / total - cdf.mass(e[0], e[1])).abs())
        .sum()
}

/// Sample, histogram, and compare against the analytic density.
pub fn compare(spec: &EnsembleSpec, n: usize, bins: usize, seed: u64) -> Result<FitReport> {
    if n < MIN_COMPARE_SAMPLES {
        return Err(Error::InvalidSpec {
            what: "sample size",
            reason: format!("compare needs n >= {MIN_COMPARE_SAMPLES}, got {n}"),
        });
    }
    if bins < MIN_COMPARE_BINS {
        return Err(Error::InvalidSpec {
            what: "bins",
            reason: format!("compare needs at least {MIN_COMPARE_BINS} bins, got {bins}"),
        });
    }
    let density = ShareDensity::new(*spec)?;
    let (lo, hi) = density.support();
    let (samples, cdf) = rayon::join(|| sample_share(spec, n, seed), || ShareCdf::new(density));
    let mut samples = samples?;

    let mut hist = Histogram::uniform(lo, hi, bins)?;
    hist.extend(samples.iter().copied());

    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let l1 = l1_distance(&hist, &cdf);
    let ks = ks_statistic(&mut samples, |x| cdf.cdf(x));
    let ks_threshold = KS_CRITICAL_5PCT / nf.sqrt();
    Ok(FitReport {
        l1_distance: l1,
        ks_statistic: ks,
        ks_threshold,
        ks_pass: ks < ks_threshold,
        sample_mean: mean,
        mean_std_error: (var / nf).sqrt(),
        n_samples: n,
        bins,
        seed,
        rng: RNG_ALGORITHM.to_string(),
    })
}
