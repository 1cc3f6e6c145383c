//! `tshare`: command-line front end for the tempered-share library.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tempered_share::ensembles::{self, RNG_ALGORITHM};
use tempered_share::format::{fmt_f64, provenance_line, VERSION};
use tempered_share::modality::{self, MIN_RESOLUTION};
use tempered_share::monte_carlo;
use tempered_share::phase_diagram::{self, SweepSpec, DEFAULT_ALPHA_RANGE, DEFAULT_LN_DELTA_RANGE};
use tempered_share::share_distribution::{self, ORACLE_QUADRATURE};
use tempered_share::{EnsembleKind, EnsembleSpec, Error, ShareDensity};

#[derive(Parser)]
#[command(name = "tshare", about = "Wealth-share distribution for tempered Pareto ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate P(omega) on a grid.
    #[command(allow_negative_numbers = true)]
    Pdf {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Number of grid points.
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Add a column computed by direct integration.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw shares omega = x1 / (x1 + x2).
    #[command(allow_negative_numbers = true)]
    Sample {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit single draws from the ensemble instead of shares.
        #[arg(long)]
        parental: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Locate the extrema of P(omega) and name its shape.
    #[command(allow_negative_numbers = true)]
    Classify {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Fixed scan resolution; by default it is increased until stable.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical cutoff ratios delta_c and delta_cc.
    #[command(allow_negative_numbers = true)]
    Critical {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a Monte Carlo histogram against P(omega).
    #[command(allow_negative_numbers = true)]
    Validate {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a grid over (alpha, delta) and write the phase diagram.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = DEFAULT_ALPHA_RANGE.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = DEFAULT_ALPHA_RANGE.1)]
        alpha_max: f64,
        /// Smallest delta (not its logarithm).
        #[arg(long, default_value_t = DEFAULT_LN_DELTA_RANGE.0.exp())]
        delta_min: f64,
        /// Largest delta (not its logarithm).
        #[arg(long, default_value_t = DEFAULT_LN_DELTA_RANGE.1.exp())]
        delta_max: f64,
        #[arg(long, default_value_t = 20)]
        alpha_steps: usize,
        #[arg(long, default_value_t = 20)]
        delta_steps: usize,
        /// Output prefix; writes PREFIX_cells.csv and PREFIX_boundaries.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Bounded,
    #[value(alias = "exponential")]
    Exp,
}

impl From<KindArg> for EnsembleKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Bounded => EnsembleKind::Bounded,
            KindArg::Exp => EnsembleKind::ExponentialTempered,
        }
    }
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    alpha: f64,
    /// Cutoff ratio L/H; same as --L delta --H 1.
    #[arg(long, conflicts_with_all = ["lower", "upper"], required_unless_present_all = ["lower", "upper"])]
    delta: Option<f64>,
    /// Lower cutoff.
    #[arg(long = "L", id = "lower", requires = "upper")]
    lower: Option<f64>,
    /// Upper cutoff.
    #[arg(long = "H", id = "upper", requires = "lower")]
    upper: Option<f64>,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Library(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn check_alpha(alpha: f64) -> CliResult {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        usage(format!("--alpha must be positive and finite, got {alpha}"))
    }
}

impl EnsembleArgs {
    fn spec(&self) -> CliResult<EnsembleSpec> {
        check_alpha(self.alpha)?;
        let kind = self.kind.into();
        let built = match (self.delta, self.lower, self.upper) {
            (Some(d), _, _) => {
                if !(d > 0.0 && d < 1.0) {
                    return usage(format!("--delta must lie in (0, 1), got {d}"));
                }
                EnsembleSpec::from_delta(kind, self.alpha, d)
            }
            (None, Some(l), Some(h)) => {
                if !(l > 0.0 && l.is_finite()) {
                    return usage(format!("--L must be positive and finite, got {l}"));
                }
                if !(h > l && h.is_finite()) {
                    return usage(format!("--H must be finite and greater than --L, got {h}"));
                }
                EnsembleSpec::new(kind, self.alpha, l, h)
            }
            _ => return usage("give either --delta or both --L and --H"),
        };
        built.or_else(|e| usage(e.to_string()))
    }
}

/// Buffered writer to `path`, or standard output.
fn open_output(path: Option<&PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(path: Option<&PathBuf>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult {
    let mut out = open_output(path)?;
    let io_err = |source| Error::Io {
        path: path.cloned().unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    };
    f(&mut out).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&PathBuf>, value: &T) -> CliResult {
    write_all(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::from)?;
        writeln!(out)
    })
}

#[derive(Serialize)]
struct PdfRow {
    omega: f64,
    p_omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_omega_oracle: Option<f64>,
}

#[derive(Serialize)]
struct PdfTable<'a> {
    kind: EnsembleKind,
    alpha: f64,
    delta: f64,
    generator: String,
    rows: &'a [PdfRow],
}

#[derive(Serialize)]
struct SampleOutput<'a> {
    kind: EnsembleKind,
    alpha: f64,
    lower_cutoff: f64,
    upper_cutoff: f64,
    seed: u64,
    parental: bool,
    generator: String,
    values: &'a [f64],
}

fn generator() -> String {
    format!("tempered-share {VERSION} rng={RNG_ALGORITHM}")
}

fn pdf(ensemble: &EnsembleArgs, grid: usize, oracle: bool, output: &OutputArgs) -> CliResult {
    let spec = ensemble.spec()?;
    if grid < 2 {
        return usage(format!("--grid must be at least 2, got {grid}"));
    }
    let density = ShareDensity::new(spec)?;
    let rows = density.tabulate(grid)?;
    let oracle_values = if oracle {
        Some(
            rows.iter()
                .map(|&(w, _)| density.value_by_integral(w, &ORACLE_QUADRATURE))
                .collect::<Result<Vec<f64>, Error>>()?,
        )
    } else {
        None
    };
    match output.format {
        Format::Csv => write_all(output.out.as_ref(), |out| {
            share_distribution::write_tabulation_csv(out, &density, &rows, oracle_values.as_deref())
        }),
        Format::Json => {
            let table: Vec<PdfRow> = rows
                .iter()
                .enumerate()
                .map(|(i, &(omega, p_omega))| PdfRow {
                    omega,
                    p_omega,
                    p_omega_oracle: oracle_values.as_ref().map(|v| v[i]),
                })
                .collect();
            write_json(
                output.out.as_ref(),
                &PdfTable {
                    kind: spec.kind,
                    alpha: spec.alpha,
                    delta: spec.delta(),
                    generator: generator(),
                    rows: &table,
                },
            )
        }
    }
}

fn sample(ensemble: &EnsembleArgs, n: usize, seed: u64, parental: bool, output: &OutputArgs) -> CliResult {
    let spec = ensemble.spec()?;
    if n == 0 {
        return usage("--n must be at least 1");
    }
    let values = if parental {
        ensembles::sample(&spec, n, seed)?.values
    } else {
        monte_carlo::sample_share(&spec, n, seed)?
    };
    match output.format {
        Format::Csv => write_all(output.out.as_ref(), |out| {
            if parental {
                let batch = ensembles::SampleBatch {
                    values,
                    seed,
                    ensemble: spec,
                };
                writeln!(out, "{}", provenance_line())?;
                return batch.write_csv(out);
            }
            writeln!(
                out,
                "# kind={} alpha={} L={} H={} n={} seed={}",
                spec.kind, spec.alpha, spec.lower_cutoff, spec.upper_cutoff, n, seed
            )?;
            writeln!(out, "{}", provenance_line())?;
            writeln!(out, "omega")?;
            for v in &values {
                writeln!(out, "{}", fmt_f64(*v))?;
            }
            Ok(())
        }),
        Format::Json => write_json(
            output.out.as_ref(),
            &SampleOutput {
                kind: spec.kind,
                alpha: spec.alpha,
                lower_cutoff: spec.lower_cutoff,
                upper_cutoff: spec.upper_cutoff,
                seed,
                parental,
                generator: generator(),
                values: &values,
            },
        ),
    }
}

fn classify(ensemble: &EnsembleArgs, resolution: Option<usize>, out: Option<&PathBuf>) -> CliResult {
    let spec = ensemble.spec()?;
    let profile = match resolution {
        None => modality::classify(&spec)?,
        Some(r) if r < MIN_RESOLUTION => {
            return usage(format!("--resolution must be at least {MIN_RESOLUTION}, got {r}"));
        }
        Some(r) => {
            let density = ShareDensity::new(spec)?;
            let extrema = modality::find_extrema_of(&density, r)?;
            let modal_class = modality::label(&density, &extrema)?;
            modality::ModalProfile { extrema, modal_class }
        }
    };
    write_json(out, &profile)
}

fn critical(kind: KindArg, alpha: f64, out: Option<&PathBuf>) -> CliResult {
    check_alpha(alpha)?;
    let thresholds = modality::critical_thresholds(kind.into(), alpha)?;
    write_json(out, &thresholds)
}

fn validate(ensemble: &EnsembleArgs, n: usize, bins: usize, seed: u64, out: Option<&PathBuf>) -> CliResult {
    let spec = ensemble.spec()?;
    if n < monte_carlo::MIN_COMPARE_SAMPLES {
        return usage(format!(
            "--n must be at least {}, got {n}",
            monte_carlo::MIN_COMPARE_SAMPLES
        ));
    }
    if bins < monte_carlo::MIN_COMPARE_BINS {
        return usage(format!(
            "--bins must be at least {}, got {bins}",
            monte_carlo::MIN_COMPARE_BINS
        ));
    }
    let report = monte_carlo::compare(&spec, n, bins, seed)?;
    write_json(out, &report)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    kind: KindArg,
    alpha: (f64, f64),
    delta: (f64, f64),
    alpha_steps: usize,
    delta_steps: usize,
    out: &Path,
) -> CliResult {
    for (flag, d) in [("--delta-min", delta.0), ("--delta-max", delta.1)] {
        if !(d > 0.0 && d < 1.0) {
            return usage(format!("{flag} must lie in (0, 1), got {d}"));
        }
    }
    let spec = SweepSpec::new(
        kind.into(),
        alpha,
        (delta.0.ln(), delta.1.ln()),
        alpha_steps,
        delta_steps,
    )
    .or_else(|e| usage(e.to_string()))?;
    let grid = phase_diagram::sweep(&spec)?;
    let (cells, boundaries) = phase_diagram::export(&grid, out)?;
    println!("{}", cells.display());
    println!("{}", boundaries.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match &cli.command {
        Command::Pdf {
            ensemble,
            grid,
            oracle,
            output,
        } => pdf(ensemble, *grid, *oracle, output),
        Command::Sample {
            ensemble,
            n,
            seed,
            parental,
            output,
        } => sample(ensemble, *n, *seed, *parental, output),
        Command::Classify {
            ensemble,
            resolution,
            out,
        } => classify(ensemble, *resolution, out.as_ref()),
        Command::Critical { kind, alpha, out } => critical(*kind, *alpha, out.as_ref()),
        Command::Validate {
            ensemble,
            n,
            bins,
            seed,
            out,
        } => validate(ensemble, *n, *bins, *seed, out.as_ref()),
        Command::Sweep {
            kind,
            alpha_min,
            alpha_max,
            delta_min,
            delta_max,
            alpha_steps,
            delta_steps,
            out,
        } => sweep(
            *kind,
            (*alpha_min, *alpha_max),
            (*delta_min, *delta_max),
            *alpha_steps,
            *delta_steps,
            out,
        ),
    }
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(format!("{VERSION} (rng {RNG_ALGORITHM})").into_boxed_str());
    let matches = match Cli::command().version(version).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
