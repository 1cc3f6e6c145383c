//! Modal phase diagram over the `(alpha, ln delta)` plane.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, provenance_line};
use crate::modality::{classify, critical_delta_bounded, critical_delta_exponential_by_classification, ModalClass};

pub const DEFAULT_ALPHA_RANGE: (f64, f64) = (0.05, 2.5);
pub const DEFAULT_LN_DELTA_RANGE: (f64, f64) = (-10.0, -0.05);
/// Grid values of alpha this close to 1 are the `alpha = 1` line, which
/// carries no boundary.
const UNIT_ALPHA_TOLERANCE: f64 = 1e-9;

fn has_boundary(alpha: f64) -> bool {
    alpha < 1.0 - UNIT_ALPHA_TOLERANCE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: EnsembleKind,
    pub alpha_range: (f64, f64),
    pub ln_delta_range: (f64, f64),
    pub alpha_steps: usize,
    pub delta_steps: usize,
}

impl SweepSpec {
    pub fn new(
        kind: EnsembleKind,
        alpha_range: (f64, f64),
        ln_delta_range: (f64, f64),
        alpha_steps: usize,
        delta_steps: usize,
    ) -> Result<Self> {
        let s = SweepSpec {
            kind,
            alpha_range,
            ln_delta_range,
            alpha_steps,
            delta_steps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_defaults(kind: EnsembleKind, alpha_steps: usize, delta_steps: usize) -> Result<Self> {
        Self::new(
            kind,
            DEFAULT_ALPHA_RANGE,
            DEFAULT_LN_DELTA_RANGE,
            alpha_steps,
            delta_steps,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |what, reason: &str| {
            Err(Error::InvalidSpec {
                what,
                reason: reason.to_string(),
            })
        };
        let (a0, a1) = self.alpha_range;
        let (d0, d1) = self.ln_delta_range;
        if !(a0 > 0.0 && a1.is_finite() && a0 < a1) {
            return invalid("alpha range", "need 0 < alpha_min < alpha_max");
        }
        if !(d0.is_finite() && d0 < d1 && d1 < 0.0) {
            return invalid("ln delta range", "need ln_delta_min < ln_delta_max < 0");
        }
        if self.alpha_steps < 2 || self.delta_steps < 2 {
            return invalid("steps", "need at least 2 steps along each axis");
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        linspace(self.alpha_range, self.alpha_steps)
    }

    pub fn ln_deltas(&self) -> Vec<f64> {
        linspace(self.ln_delta_range, self.delta_steps)
    }
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub alpha: f64,
    pub ln_delta: f64,
    /// Classification, or the error message if it failed.
    pub class: std::result::Result<ModalClass, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub alpha: f64,
    pub ln_delta_c: Option<f64>,
    pub ln_delta_cc: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramGrid {
    pub spec: SweepSpec,
    /// Row-major: `cells[i * delta_steps + j]` is `(alphas[i], ln_deltas[j])`.
    pub cells: Vec<Cell>,
    /// One entry per column with `alpha < 1`, excluding the `alpha = 1` line.
    pub boundaries: Vec<Boundary>,
}

impl PhaseDiagramGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.spec.delta_steps + j]
    }
}

fn classify_cell(kind: EnsembleKind, alpha: f64, ln_delta: f64) -> Cell {
    let class = EnsembleSpec::from_delta(kind, alpha, ln_delta.exp())
        .and_then(|s| classify(&s))
        .map(|p| p.modal_class)
        .map_err(|e| e.to_string());
    Cell { alpha, ln_delta, class }
}

/// Critical boundaries for one `alpha < 1` column.
pub fn column_boundary(kind: EnsembleKind, alpha: f64) -> Boundary {
    let result = match kind {
        EnsembleKind::ExponentialTempered => {
            critical_delta_exponential_by_classification(alpha).map(|d| (Some(d), None))
        }
        EnsembleKind::Bounded => critical_delta_bounded(alpha).map(|t| (t.delta_c, t.delta_cc)),
    };
    match result {
        Ok((c, cc)) => Boundary {
            alpha,
            ln_delta_c: c.map(f64::ln),
            ln_delta_cc: cc.map(f64::ln),
            error: None,
        },
        Err(e) => Boundary {
            alpha,
            ln_delta_c: None,
            ln_delta_cc: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<PhaseDiagramGrid> {
    spec.validate()?;
    let alphas = spec.alphas();
    let ln_deltas = spec.ln_deltas();
    let cells = alphas
        .iter()
        .flat_map(|&a| ln_deltas.iter().map(move |&d| (a, d)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(a, d)| classify_cell(spec.kind, a, d))
        .collect();
    let boundaries = alphas
        .into_par_iter()
        .filter(|&a| has_boundary(a))
        .map(|a| column_boundary(spec.kind, a))
        .collect();
    Ok(PhaseDiagramGrid {
        spec: *spec,
        cells,
        boundaries,
    })
}

fn header<W: Write>(out: &mut W, spec: &SweepSpec) -> std::io::Result<()> {
    writeln!(
        out,
        "# kind={} alpha_range=[{},{}] ln_delta_range=[{},{}] alpha_steps={} delta_steps={}",
        spec.kind,
        fmt_f64(spec.alpha_range.0),
        fmt_f64(spec.alpha_range.1),
        fmt_f64(spec.ln_delta_range.0),
        fmt_f64(spec.ln_delta_range.1),
        spec.alpha_steps,
        spec.delta_steps
    )?;
    writeln!(out, "{}", provenance_line())
}

pub fn write_cells_csv<W: Write>(grid: &PhaseDiagramGrid, mut out: W) -> std::io::Result<()> {
    header(&mut out, &grid.spec)?;
    writeln!(out, "alpha,ln_delta,class")?;
    for c in &grid.cells {
        let class = match &c.class {
            Ok(class) => class.as_str().to_string(),
            Err(e) => format!("Error({})", e.replace([',', '\n'], ";")),
        };
        writeln!(out, "{},{},{}", fmt_f64(c.alpha), fmt_f64(c.ln_delta), class)?;
    }
    Ok(())
}

pub fn write_boundaries_csv<W: Write>(grid: &PhaseDiagramGrid, mut out: W) -> std::io::Result<()> {
    header(&mut out, &grid.spec)?;
    let bounded = grid.spec.kind == EnsembleKind::Bounded;
    writeln!(
        out,
        "{}",
        if bounded {
            "alpha,ln_delta_c,ln_delta_cc"
        } else {
            "alpha,ln_delta_c"
        }
    )?;
    let field = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for b in &grid.boundaries {
        write!(out, "{},{}", fmt_f64(b.alpha), field(b.ln_delta_c))?;
        if bounded {
            write!(out, ",{}", field(b.ln_delta_cc))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Paths written by [`export`] for a given prefix.
pub fn export_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with("_cells.csv"), with("_boundaries.csv"))
}

/// Write `<prefix>_cells.csv` and `<prefix>_boundaries.csv`.
pub fn export(grid: &PhaseDiagramGrid, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    let (cells, boundaries) = export_paths(prefix);
    let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        f(&mut w).and_then(|_| w.flush()).map_err(io)
    };
    write(&cells, &|w| write_cells_csv(grid, w))?;
    write(&boundaries, &|w| write_boundaries_csv(grid, w))?;
    Ok((cells, boundaries))
}
