//! Run artifacts: CSV tables and JSON reports.
//!
//! CSV numbers carry 10 significant digits; JSON numbers use the shortest
//! representation that round-trips. Files already present are only replaced
//! when the directory was opened with `overwrite`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::bounds::BoundRow;
use crate::model::DensityField;
use crate::solver::SimulationTrace;
use crate::spectral::BoundCurves;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0} already exists (pass --overwrite to replace it)")]
    Exists(PathBuf),
}

/// `x` with 10 significant digits.
pub fn csv_number(x: f64) -> String {
    format!("{x:.9e}")
}

fn csv_row(out: &mut String, first: impl std::fmt::Display, values: impl IntoIterator<Item = f64>) {
    write!(out, "{first}").unwrap();
    for v in values {
        write!(out, ",{}", csv_number(v)).unwrap();
    }
    out.push('\n');
}

/// `time,total,band_0,...` with one row per stored step.
pub fn totals_csv(trace: &SimulationTrace) -> String {
    let mut out = String::from("time,total");
    for b in 0..trace.bands.len() {
        write!(out, ",band_{b}").unwrap();
    }
    out.push('\n');
    for (n, &t) in trace.times.iter().enumerate() {
        csv_row(
            &mut out,
            csv_number(t),
            std::iter::once(trace.totals[n]).chain(trace.class_totals.iter().map(|c| c[n])),
        );
    }
    out
}

/// Density grid: a header row of lengths, then one row per age node
/// starting with the age.
pub fn density_csv(density: &DensityField) -> String {
    let grid = density.grid();
    let mut out = String::new();
    csv_row(&mut out, "age\\length", grid.lengths());
    for (k, row) in density.values().rows().into_iter().enumerate() {
        csv_row(&mut out, csv_number(grid.age(k)), row.iter().copied());
    }
    out
}

pub fn snapshot_name(time: f64) -> String {
    format!("snapshot_{time:.3}.csv")
}

/// `l,mother,daughter`.
pub fn bound_curves_csv(curves: &BoundCurves) -> String {
    let mut out = String::from("l,mother,daughter\n");
    for (i, &l) in curves.lengths.iter().enumerate() {
        csv_row(&mut out, csv_number(l), [curves.mother[i], curves.daughter[i]]);
    }
    out
}

/// `time,band,simulated,bound,ratio`.
pub fn bound_check_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("time,band,simulated,bound,ratio\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            csv_number(r.time),
            r.band,
            csv_number(r.simulated),
            csv_number(r.bound),
            csv_number(r.ratio)
        )
        .unwrap();
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// An output directory that refuses to clobber files unless told to.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    overwrite: bool,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path, overwrite: bool) -> Result<Self, OutputError> {
        fs::create_dir_all(root).map_err(|source| OutputError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            overwrite,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Fails before anything is written if one of `names` exists.
    pub fn reserve<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Result<(), OutputError> {
        if self.overwrite {
            return Ok(());
        }
        for name in names {
            let path = self.root.join(name);
            if path.exists() {
                return Err(OutputError::Exists(path));
            }
        }
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, OutputError> {
        let path = self.root.join(name);
        if !self.overwrite && path.exists() {
            return Err(OutputError::Exists(path));
        }
        fs::write(&path, contents).map_err(|source| OutputError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(name.to_string());
        Ok(path)
    }

    /// Names written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(csv_number(1.0), "1.000000000e0");
        assert_eq!(csv_number(1234.56789012345), "1.234567890e3");
        assert_eq!(csv_number(-2.5e-7), "-2.500000000e-7");
    }

    #[test]
    fn density_layout() {
        let g = Grid::new(3, 4, 1.0, 1.5).unwrap();
        let d = DensityField::from_fn(g, |a, l| a + l).unwrap();
        let text = density_csv(&d);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("age\\length,0.000000000e0,5.000000000e-1"));
        assert_eq!(lines[2].split(',').count(), 5);
        assert!(lines[2].starts_with("5.000000000e-1,5.000000000e-1,1.000000000e0"));
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), false).unwrap();
        out.write("a.txt", "1").unwrap();
        assert!(matches!(out.write("a.txt", "2"), Err(OutputError::Exists(_))));
        assert!(out.reserve(["b.txt", "a.txt"]).is_err());
        let mut again = OutputDir::create(dir.path(), true).unwrap();
        again.write("a.txt", "2").unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("a.txt")).unwrap(), "2");
    }
}
