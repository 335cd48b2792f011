//! Snapshot, time-series and manifest writers.
//!
//! Field CSV: `ny` lines of `nx` values, bottom row first. Field PGM: binary
//! 16-bit grayscale, top row of the image is the top of the domain. Numbers
//! are written in the shortest form that parses back to the same `f64`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{EventLog, TimeSeriesRow};
use crate::grid::{Field2D, Grid};
use crate::model::SimState;
use crate::scenario::{RenderSpec, Scenario};
use crate::stepper::{Observer, ObserverError, RunReport, Termination};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Shortest round-trip decimal. Plain notation for ordinary magnitudes,
/// exponent notation for very small or very large ones.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_field_csv(f: &Field2D, path: &Path) -> Result<(), OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let g = f.grid();
    let mut line = String::new();
    for j in 0..g.ny() {
        line.clear();
        for i in 0..g.nx() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_f64(f.get(i, j)));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads a field written by [`write_field_csv`] back onto `grid`.
pub fn read_field_csv(grid: &Grid, path: &Path) -> Result<Field2D, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |message: String| OutputError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut values = Vec::with_capacity(grid.len());
    for (j, line) in text.lines().enumerate() {
        let before = values.len();
        for cell in line.split(',') {
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|e| bad(format!("line {}: {e}", j + 1)))?;
            values.push(x);
        }
        if values.len() - before != grid.nx() {
            return Err(bad(format!("line {} has {} values", j + 1, values.len() - before)));
        }
    }
    Field2D::from_values(grid, values).map_err(|e| bad(e.to_string()))
}

/// Grayscale level of `x` within `[lo, hi]`, rounding halves up.
#[inline]
pub fn quantize(x: f64, lo: f64, hi: f64) -> u16 {
    let s = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    (65535.0 * s + 0.5).floor() as u16
}

pub fn write_field_pgm(f: &Field2D, path: &Path, lo: f64, hi: f64) -> Result<(), OutputError> {
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(OutputError::Format {
            path: path.to_path_buf(),
            message: format!("empty grayscale range [{lo}, {hi}]"),
        });
    }
    let g = f.grid();
    let mut bytes = format!("P5\n{} {}\n65535\n", g.nx(), g.ny()).into_bytes();
    bytes.reserve(2 * g.len());
    for j in (0..g.ny()).rev() {
        for i in 0..g.nx() {
            bytes.extend_from_slice(&quantize(f.get(i, j), lo, hi).to_be_bytes());
        }
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn write_timeseries_csv(rows: &[TimeSeriesRow], sources: usize, path: &Path) -> Result<(), OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", TimeSeriesRow::csv_header(sources)).map_err(io_err(path))?;
    for row in rows {
        writeln!(out, "{}", row.csv_line()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotFile {
    pub field: &'static str,
    pub csv: String,
    pub pgm: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotEntry {
    pub step: u64,
    pub t: f64,
    pub files: Vec<SnapshotFile>,
}

pub const SNAPSHOT_FIELDS: [&str; 4] = ["u", "w", "v", "c"];

/// Observer writing CSV and PGM snapshots of every evolving field into
/// `<out_dir>/snapshots`.
///
/// Grayscale ranges are fixed for the whole run: taken from the scenario
/// when given, otherwise from the field's min/max in the first snapshot
/// (widened to `[lo, lo + 1]` when that range is empty).
pub struct SnapshotWriter {
    out_dir: PathBuf,
    every: u64,
    render: RenderSpec,
    ranges: Option<[[f64; 2]; 4]>,
    pub entries: Vec<SnapshotEntry>,
}

impl SnapshotWriter {
    pub fn new(out_dir: &Path, every: u64, render: RenderSpec) -> Result<Self, OutputError> {
        let dir = out_dir.join("snapshots");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(SnapshotWriter {
            out_dir: out_dir.to_path_buf(),
            every,
            render,
            ranges: None,
            entries: Vec::new(),
        })
    }

    fn write(&mut self, step: u64, state: &SimState) -> Result<(), OutputError> {
        let fields = [&state.u, &state.w, &state.v, &state.c];
        let render = self.render;
        let ranges = *self.ranges.get_or_insert_with(|| {
            let mut r = [[0.0; 2]; 4];
            for (k, name) in SNAPSHOT_FIELDS.iter().enumerate() {
                r[k] = render.range(name).unwrap_or_else(|| {
                    let (lo, hi) = (fields[k].min(), fields[k].max());
                    if hi > lo {
                        [lo, hi]
                    } else {
                        [lo, lo + 1.0]
                    }
                });
            }
            r
        });
        let mut files = Vec::with_capacity(4);
        for (k, name) in SNAPSHOT_FIELDS.iter().enumerate() {
            let csv = format!("snapshots/{name}_{step:09}.csv");
            let pgm = format!("snapshots/{name}_{step:09}.pgm");
            let [lo, hi] = ranges[k];
            write_field_csv(fields[k], &self.out_dir.join(&csv))?;
            write_field_pgm(fields[k], &self.out_dir.join(&pgm), lo, hi)?;
            files.push(SnapshotFile {
                field: name,
                csv,
                pgm,
                lo,
                hi,
            });
        }
        self.entries.push(SnapshotEntry {
            step,
            t: state.t,
            files,
        });
        Ok(())
    }
}

impl Observer for SnapshotWriter {
    fn every(&self) -> u64 {
        self.every
    }

    fn observe(&mut self, step: u64, state: &SimState) -> Result<(), ObserverError> {
        self.write(step, state).map_err(Into::into)
    }
}

#[derive(Debug, Serialize)]
struct FinalSummary<'a> {
    step: u64,
    t: f64,
    mass_u: f64,
    mass_w: f64,
    mass_v: f64,
    mass_c: f64,
    food: &'a [f64],
    trail: &'a [f64],
    inflow: f64,
    unloaded: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a Scenario,
    timeseries: &'static str,
    snapshots: &'a [SnapshotEntry],
    events: &'a EventLog,
    termination: &'a Termination,
    steps_taken: u64,
    final_state: FinalSummary<'a>,
    wall_time_seconds: f64,
}

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn write_manifest(
    report: &RunReport,
    scenario: &Scenario,
    snapshots: &[SnapshotEntry],
    path: &Path,
) -> Result<(), OutputError> {
    let r = &report.final_row;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario,
        timeseries: TIMESERIES_FILE,
        snapshots,
        events: &report.events,
        termination: &report.termination,
        steps_taken: report.steps_taken,
        final_state: FinalSummary {
            step: r.step,
            t: r.t,
            mass_u: r.mass_u,
            mass_w: r.mass_w,
            mass_v: r.mass_v,
            mass_c: r.mass_c,
            food: &r.food,
            trail: &r.trail,
            inflow: r.inflow,
            unloaded: r.unloaded,
        },
        wall_time_seconds: report.wall_time.as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| OutputError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_two_by_two() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(3, 3, 1.0).unwrap();
        let mut f = Field2D::zeros(&g);
        f.set(0, 0, 1.0);
        f.set(1, 0, 2.0);
        f.set(0, 1, 3.0);
        f.set(1, 1, 4.0);
        let path = dir.path().join("f.csv");
        write_field_csv(&f, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "1,2,0\n3,4,0\n0,0,0\n");
    }

    #[test]
    fn csv_zero_field() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(3, 4, 1.0).unwrap();
        let path = dir.path().join("z.csv");
        write_field_csv(&Field2D::zeros(&g), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "0,0,0\n".repeat(4));
    }

    #[test]
    fn fmt_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5e-7, 123456.789, 5e-324, f64::MAX] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(1e-40), "1e-40");
    }

    #[test]
    fn quantizer() {
        assert_eq!(quantize(0.0, 0.0, 1.0), 0);
        assert_eq!(quantize(1.0, 0.0, 1.0), 65535);
        assert_eq!(quantize(0.5, 0.0, 1.0), 32768);
        assert_eq!(quantize(-3.0, 0.0, 1.0), 0);
        assert_eq!(quantize(7.0, 0.0, 1.0), 65535);
    }

    #[test]
    fn pgm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(3, 3, 1.0).unwrap();
        let f = Field2D::from_fn(&g, |p| if p.y > 2.0 { 2.0 } else { 1.0 });
        let path = dir.path().join("f.pgm");
        write_field_pgm(&f, &path, 1.0, 2.0).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header = b"P5\n3 3\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px: Vec<u16> = bytes[header.len()..]
            .chunks(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect();
        // top image row is the top of the domain
        assert_eq!(px, vec![65535, 65535, 65535, 0, 0, 0, 0, 0, 0]);
        assert!(write_field_pgm(&f, &path, 1.0, 1.0).is_err());
    }

    #[test]
    fn pgm_constant_at_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(4, 3, 1.0).unwrap();
        let path = dir.path().join("c.pgm");
        write_field_pgm(&Field2D::constant(&g, -1.0), &path, -1.0, 3.0).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes[bytes.len() - 24..].iter().all(|&b| b == 0));
        write_field_pgm(&Field2D::constant(&g, 3.0), &path, -1.0, 3.0).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes[bytes.len() - 24..].iter().all(|&b| b == 0xff));
    }

    #[test]
    fn io_errors_carry_path() {
        let g = Grid::new(3, 3, 1.0).unwrap();
        let path = Path::new("/nonexistent-dir/for/sure/f.csv");
        let err = write_field_csv(&Field2D::zeros(&g), path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/for/sure/f.csv"));
    }
}
