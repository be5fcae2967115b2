//! Output staging and file formats. Every command writes through
//! [`Staging`]: content lands in `<name>.part` files and is renamed into
//! place only by `commit`, so a failing run leaves no partial artifacts.
//!
//! All floats are written with `{}` Display, which is the shortest decimal
//! that parses back to the identical bits, so file round trips are exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use magopt::sweep::{MapKind, MapValues, SpectrumMap, SweepAxis};

use crate::error::{CliError, Result};

pub const MAP_SCHEMA_VERSION: u32 = 1;

pub struct Staging {
    dir: PathBuf,
    parts: Vec<(PathBuf, PathBuf)>,
    tombstones: Vec<PathBuf>,
    committed: bool,
}

impl Staging {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            parts: Vec::new(),
            tombstones: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let final_path = self.dir.join(name);
        let part_path = self.dir.join(format!("{name}.part"));
        fs::write(&part_path, content).map_err(|e| CliError::io(&part_path, e))?;
        self.parts.push((final_path, part_path));
        Ok(())
    }

    /// Remove `name` from the output directory on commit. Used for stale
    /// sidecars (a rerun without poisoned cells must not leave last run's
    /// mask behind).
    pub fn tombstone(&mut self, name: &str) {
        self.tombstones.push(self.dir.join(name));
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (final_path, part_path) in std::mem::take(&mut self.parts) {
            fs::rename(&part_path, &final_path)
                .map_err(|e| CliError::io(&final_path, e))?;
            done.push(final_path);
        }
        for stale in std::mem::take(&mut self.tombstones) {
            if stale.exists() {
                fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?;
            }
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            for (_, part_path) in &self.parts {
                let _ = fs::remove_file(part_path);
            }
        }
    }
}

fn axis_header(axis: &SweepAxis) -> String {
    format!(
        "{},{},{},{}",
        axis.name,
        axis.start,
        axis.stop,
        axis.points
    )
}

fn parse_axis_header(line: &str) -> Option<SweepAxis> {
    let mut it = line.splitn(4, ',');
    let name = it.next()?;
    let start: f64 = it.next()?.parse().ok()?;
    let stop: f64 = it.next()?.parse().ok()?;
    let points: usize = it.next()?.parse().ok()?;
    SweepAxis::new(name, start, stop, points).ok()
}

/// Header block, then one row per cell in row-major order (the x index
/// varies fastest). Complex values are two columns `re,im`; invalid cells
/// carry the `NA` sentinel.
pub fn serialize_map(map: &SpectrumMap) -> String {
    let nx = map.x_axis.points;
    let ny = map.y_axis.points;
    let poisoned = map.valid.iter().filter(|v| !**v).count();
    let mut out = String::new();
    out.push_str("# magopt-map\n");
    let _ = writeln!(out, "# schema_version = {MAP_SCHEMA_VERSION}");
    let _ = writeln!(out, "# kind = {}", map.kind.label());
    let _ = writeln!(out, "# x_axis = {}", axis_header(&map.x_axis));
    let _ = writeln!(out, "# y_axis = {}", axis_header(&map.y_axis));
    let values_word = match &map.values {
        MapValues::Complex(_) => "complex",
        MapValues::Real(_) => "real",
    };
    let _ = writeln!(out, "# values = {values_word}");
    let _ = writeln!(out, "# poisoned = {poisoned} of {}", nx * ny);
    match &map.values {
        MapValues::Complex(_) => out.push_str("x_index,y_index,re,im\n"),
        MapValues::Real(_) => out.push_str("x_index,y_index,value\n"),
    }
    for iy in 0..ny {
        for ix in 0..nx {
            let idx = map.index(ix, iy);
            let _ = write!(out, "{ix},{iy},");
            if !map.valid[idx] {
                match &map.values {
                    MapValues::Complex(_) => out.push_str("NA,NA\n"),
                    MapValues::Real(_) => out.push_str("NA\n"),
                }
                continue;
            }
            match &map.values {
                MapValues::Complex(v) => {
                    let _ = writeln!(out, "{},{}", v[idx].re, v[idx].im);
                }
                MapValues::Real(v) => {
                    let _ = writeln!(out, "{}", v[idx]);
                }
            }
        }
    }
    out
}

/// Sidecar listing the poisoned cells; written only when there are any.
pub fn serialize_mask(map: &SpectrumMap) -> Option<String> {
    if map.valid.iter().all(|v| *v) {
        return None;
    }
    let mut out = String::from("x_index,y_index\n");
    for iy in 0..map.y_axis.points {
        for ix in 0..map.x_axis.points {
            if !map.valid[map.index(ix, iy)] {
                let _ = writeln!(out, "{ix},{iy}");
            }
        }
    }
    Some(out)
}

fn map_err(msg: impl Into<String>) -> CliError {
    CliError::Config(format!("map file: {}", msg.into()))
}

pub fn parse_map(text: &str) -> Result<SpectrumMap> {
    let mut kind: Option<MapKind> = None;
    let mut x_axis: Option<SweepAxis> = None;
    let mut y_axis: Option<SweepAxis> = None;
    let mut complex_values: Option<bool> = None;
    let mut saw_magic = false;
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if rest == "magopt-map" {
                saw_magic = true;
            } else if let Some(v) = rest.strip_prefix("schema_version = ") {
                let v: u32 = v
                    .trim()
                    .parse()
                    .map_err(|_| map_err("bad schema_version"))?;
                if v != MAP_SCHEMA_VERSION {
                    return Err(map_err(format!(
                        "unsupported schema_version {v}, expected {MAP_SCHEMA_VERSION}"
                    )));
                }
            } else if let Some(v) = rest.strip_prefix("kind = ") {
                kind = Some(match v.trim() {
                    "reflection" => MapKind::Reflection,
                    "conversion_anti_stokes" => MapKind::ConversionAntiStokes,
                    "conversion_stokes" => MapKind::ConversionStokes,
                    other => return Err(map_err(format!("unknown kind {other:?}"))),
                });
            } else if let Some(v) = rest.strip_prefix("x_axis = ") {
                x_axis = Some(parse_axis_header(v).ok_or_else(|| map_err("bad x_axis"))?);
            } else if let Some(v) = rest.strip_prefix("y_axis = ") {
                y_axis = Some(parse_axis_header(v).ok_or_else(|| map_err("bad y_axis"))?);
            } else if let Some(v) = rest.strip_prefix("values = ") {
                complex_values = Some(match v.trim() {
                    "complex" => true,
                    "real" => false,
                    other => return Err(map_err(format!("unknown values type {other:?}"))),
                });
            }
            // the poisoned summary is informational; the NA cells are
            // authoritative
            continue;
        }
        if line.starts_with("x_index") || line.trim().is_empty() {
            continue;
        }
        rows.push(line);
    }
    if !saw_magic {
        return Err(map_err("missing `# magopt-map` magic line"));
    }
    let kind = kind.ok_or_else(|| map_err("missing kind header"))?;
    let x_axis = x_axis.ok_or_else(|| map_err("missing x_axis header"))?;
    let y_axis = y_axis.ok_or_else(|| map_err("missing y_axis header"))?;
    let complex_values = complex_values.ok_or_else(|| map_err("missing values header"))?;
    let n = x_axis.points * y_axis.points;
    if rows.len() != n {
        return Err(map_err(format!(
            "expected {n} data rows, found {}",
            rows.len()
        )));
    }
    let mut map = SpectrumMap::zeros(x_axis, y_axis, kind);
    for line in rows {
        let cols: Vec<&str> = line.split(',').collect();
        let want = if complex_values { 4 } else { 3 };
        if cols.len() != want {
            return Err(map_err(format!("bad row {line:?}")));
        }
        let ix: usize = cols[0].parse().map_err(|_| map_err("bad x_index"))?;
        let iy: usize = cols[1].parse().map_err(|_| map_err("bad y_index"))?;
        if ix >= map.x_axis.points || iy >= map.y_axis.points {
            return Err(map_err(format!("cell ({ix}, {iy}) out of range")));
        }
        let idx = map.index(ix, iy);
        if cols[2] == "NA" {
            map.valid[idx] = false;
            match &mut map.values {
                MapValues::Complex(v) => v[idx] = Complex64::new(f64::NAN, f64::NAN),
                MapValues::Real(v) => v[idx] = f64::NAN,
            }
            continue;
        }
        match &mut map.values {
            MapValues::Complex(v) => {
                let re: f64 = cols[2].parse().map_err(|_| map_err("bad re value"))?;
                let im: f64 = cols[3].parse().map_err(|_| map_err("bad im value"))?;
                v[idx] = Complex64::new(re, im);
            }
            MapValues::Real(v) => {
                v[idx] = cols[2].parse().map_err(|_| map_err("bad value"))?;
            }
        }
    }
    Ok(map)
}

/// Two-column trace input for the fit commands: `freq_hz,value` rows,
/// `#` comments and a single header line allowed.
pub fn parse_trace(text: &str, path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut freq = Vec::new();
    let mut value = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 {
            return Err(CliError::Config(format!(
                "{}: expected two comma-separated columns, got {line:?}",
                path.display()
            )));
        }
        match (cols[0].trim().parse::<f64>(), cols[1].trim().parse::<f64>()) {
            (Ok(f), Ok(v)) => {
                freq.push(f);
                value.push(v);
            }
            _ if freq.is_empty() => continue, // header line
            _ => {
                return Err(CliError::Config(format!(
                    "{}: non-numeric row {line:?}",
                    path.display()
                )));
            }
        }
    }
    if freq.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok((freq, value))
}

/// NA-aware float cell.
pub fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "NA".to_string()
    }
}
