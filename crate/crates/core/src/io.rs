//! Plain-text output formats: CSV for paths, rough paths, grid functions
//! and study tables, and a key=value manifest for run metadata. Floats go
//! through the shortest round-trip formatting, so rereading a file yields
//! the exact bits that were written and identical runs produce identical
//! bytes.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lift::RoughPath;
use crate::path::SampledPath;
use crate::study::StudyReport;
use std::io::Write;

pub fn write_path_csv(path: &SampledPath, w: &mut impl Write) -> Result<()> {
    write!(w, "t")?;
    for c in 1..=path.dim() {
        write!(w, ",x{c}")?;
    }
    writeln!(w)?;
    for i in 0..path.len() {
        write!(w, "{}", path.times()[i])?;
        for v in path.sample(i) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_rough_csv(z: &RoughPath, w: &mut impl Write) -> Result<()> {
    let d = z.dim();
    write!(w, "t0,t1")?;
    for c in 1..=d {
        write!(w, ",inc_{c}")?;
    }
    for a in 1..=d {
        for b in 1..=d {
            write!(w, ",lvl2_{a}{b}")?;
        }
    }
    writeln!(w)?;
    for (i, cell) in z.cells().iter().enumerate() {
        write!(w, "{},{}", z.times()[i], z.times()[i + 1])?;
        for v in &cell.inc {
            write!(w, ",{v}")?;
        }
        for v in &cell.second {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_grid_csv(grid: &Grid, values: &[f64], w: &mut impl Write) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    writeln!(w, "x,u")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{},{v}", grid.point(i))?;
    }
    Ok(())
}

pub fn write_study_csv(report: &StudyReport, w: &mut impl Write) -> Result<()> {
    writeln!(w, "n,err_T,err_sup,seconds")?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.n, row.err_terminal, row.err_sup, row.seconds
        )?;
    }
    Ok(())
}

/// key=value lines in the given order; values are written verbatim.
pub fn write_manifest(entries: &[(&str, String)], w: &mut impl Write) -> Result<()> {
    for (k, v) in entries {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

/// Parses key=value configuration text: one pair per line, '#' starts a
/// comment, blank lines are skipped, keys must be nonempty and unique.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::ConfigParse {
                line: idx + 1,
                reason: "expected key=value".into(),
            });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::ConfigParse {
                line: idx + 1,
                reason: "empty key".into(),
            });
        }
        if out.iter().any(|(existing, _)| *existing == key) {
            return Err(Error::ConfigParse {
                line: idx + 1,
                reason: format!("duplicate key '{key}'"),
            });
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}
