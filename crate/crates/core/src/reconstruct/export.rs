//! CSV writers. Floats use the shortest representation that parses back to
//! the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use super::ftle::FtleField;
use super::metrics::ErrorReport;
use crate::error::ReconstructError;
use crate::geometry::Vec3;
use crate::io_util::atomic_write;

fn write(path: &Path, text: String) -> Result<(), ReconstructError> {
    atomic_write(path, text.as_bytes()).map_err(|source| ReconstructError::Io { path: path.to_path_buf(), source })
}

/// `x,y,error`, one row per seed.
pub fn error_map_csv(seeds: &[Vec3], errors: &[f64]) -> Result<String, ReconstructError> {
    if seeds.len() != errors.len() {
        return Err(ReconstructError::LengthMismatch(seeds.len(), errors.len()));
    }
    let mut out = String::from("x,y,error\n");
    for (s, e) in seeds.iter().zip(errors) {
        let _ = writeln!(out, "{},{},{}", s.x, s.y, e);
    }
    Ok(out)
}

pub fn write_error_map(path: impl AsRef<Path>, seeds: &[Vec3], errors: &[f64]) -> Result<(), ReconstructError> {
    write(path.as_ref(), error_map_csv(seeds, errors)?)
}

/// `file_cycle,mean_error`, one row per file cycle.
pub fn per_cycle_csv(per_cycle: &[(u32, f64)]) -> String {
    let mut out = String::from("file_cycle,mean_error\n");
    for (c, e) in per_cycle {
        let _ = writeln!(out, "{c},{e}");
    }
    out
}

pub fn write_per_cycle(path: impl AsRef<Path>, per_cycle: &[(u32, f64)]) -> Result<(), ReconstructError> {
    write(path.as_ref(), per_cycle_csv(per_cycle))
}

/// The trimmed errors, one per row, for distribution plots.
pub fn violin_csv(report: &ErrorReport) -> String {
    let mut out = String::from("error\n");
    for e in &report.trimmed {
        let _ = writeln!(out, "{e}");
    }
    out
}

pub fn write_violin(path: impl AsRef<Path>, report: &ErrorReport) -> Result<(), ReconstructError> {
    write(path.as_ref(), violin_csv(report))
}

/// First line `gx,gy,|T|`, then `gy` rows of `gx` values, `y` ascending.
pub fn ftle_csv(field: &FtleField) -> String {
    let mut out = format!("{},{},{}\n", field.gx, field.gy, field.duration);
    for row in field.values.chunks(field.gx) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_ftle(path: impl AsRef<Path>, field: &FtleField) -> Result<(), ReconstructError> {
    write(path.as_ref(), ftle_csv(field))
}

/// Parses [`ftle_csv`] output back into `(gx, gy, |T|, values)`.
pub fn parse_ftle_csv(text: &str) -> Result<(usize, usize, f64, Vec<f64>), ReconstructError> {
    let bad = |msg: &str| ReconstructError::InvalidGrid(msg.to_string());
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty FTLE file"))?.split(',').collect();
    if header.len() != 3 {
        return Err(bad("FTLE header must be gx,gy,|T|"));
    }
    let gx: usize = header[0].trim().parse().map_err(|_| bad("bad gx"))?;
    let gy: usize = header[1].trim().parse().map_err(|_| bad("bad gy"))?;
    let duration: f64 = header[2].trim().parse().map_err(|_| bad("bad duration"))?;
    let mut values = Vec::with_capacity(gx * gy);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let row = line.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad("bad value"))?;
        if row.len() != gx {
            return Err(bad("row length differs from gx"));
        }
        values.extend(row);
    }
    if values.len() != gx * gy {
        return Err(ReconstructError::LengthMismatch(values.len(), gx * gy));
    }
    Ok((gx, gy, duration, values))
}
