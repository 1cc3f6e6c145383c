//! Output formatting shared by the CSV and JSON writers.

/// Tool version recorded in every file header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Second header line carried by every file the crate writes.
pub fn provenance_line() -> String {
    format!(
        "# generator=tempered-share {VERSION} rng={}",
        crate::ensembles::RNG_ALGORITHM
    )
}
