//! CSV tables and gnuplot scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use evobarrier_core::fit::LineFit;

use crate::error::{CliError, Result};

/// Float with 17 significant digits; infinities as `inf` / `-inf`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Compact human-readable float for the text report.
pub fn short(v: f64) -> String {
    if v != 0.0 && v.is_finite() && !(1e-4..1e6).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// In-memory CSV table with a header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

/// Output directory; created on demand.
#[derive(Debug, Clone)]
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

/// One curve of a log-log figure: a column of a CSV file.
#[derive(Debug, Clone)]
pub struct Curve<'a> {
    pub csv: &'a str,
    pub x_column: usize,
    pub y_column: usize,
    pub title: &'a str,
}

/// Gnuplot script drawing `curves` on log-log axes into `png`, with an
/// optional fitted line `exp(intercept) x^slope`.
pub fn loglog_script(png: &str, xlabel: &str, ylabel: &str, curves: &[Curve<'_>], fit: Option<&LineFit>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 800,600");
    let _ = writeln!(s, "set output \"{png}\"");
    let _ = writeln!(s, "set datafile separator \",\"");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set format y \"%.0e\"");
    let _ = writeln!(s, "set xlabel \"{xlabel}\"");
    let _ = writeln!(s, "set ylabel \"{ylabel}\"");
    let _ = writeln!(s, "set key top right");
    let mut parts: Vec<String> = curves
        .iter()
        .map(|c| {
            format!("\"{}\" using {}:{} skip 1 with linespoints title \"{}\"", c.csv, c.x_column, c.y_column, c.title)
        })
        .collect();
    if let Some(f) = fit {
        let _ = writeln!(s, "fit_line(x) = exp({}) * x**({})", num(f.intercept), num(f.slope));
        parts.push(format!("fit_line(x) with lines dashtype 2 title \"slope {:.4}\"", f.slope));
    }
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}
