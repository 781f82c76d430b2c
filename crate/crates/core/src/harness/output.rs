//! Diagnostics CSV, raw field dumps and the run summary.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::coupler::Termination;

/// Columns of `diagnostics.csv`, one row per time level starting at step 0.
///
/// - `mass`: `int J int M f dq dx` on the current geometry.
/// - `min_f`, `max_f`: nodal extrema of the distribution.
/// - `max_principle`: `max_x ||f(x, .)||_{L^2_M}`.
/// - `solute_energy`: `(1/2) int J ||f||^2_{L^2_M}`.
/// - `kinetic_fluid`, `kinetic_shell`, `bending`: solvent-structure energy terms.
/// - `divergence_residual`, `trace_residual`: constraint residuals of the step.
/// - `eta_min`, `eta_max`: nodal extrema of the displacement.
/// - `inner_iterations`, `outer_iterations`: iterations of the window holding the step.
/// - `contraction_rho`: last successive-distance ratio of that window.
///
/// Columns that do not apply to a scenario or to step 0 are left empty. Floats use
/// the shortest representation that reads back to the same value.
pub const CSV_HEADER: &str = "step,time,mass,min_f,max_f,max_principle,solute_energy,kinetic_fluid,kinetic_shell,\
bending,divergence_residual,trace_residual,eta_min,eta_max,inner_iterations,outer_iterations,contraction_rho";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub max_principle: f64,
    pub solute_energy: f64,
    pub kinetic_fluid: Option<f64>,
    pub kinetic_shell: Option<f64>,
    pub bending: Option<f64>,
    pub divergence_residual: Option<f64>,
    pub trace_residual: Option<f64>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub inner_iterations: Option<usize>,
    pub outer_iterations: Option<usize>,
    pub contraction_rho: Option<f64>,
}

fn opt<T: std::fmt::LowerExp>(v: Option<T>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn opt_int(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{},{},{},{:e},{:e},{},{},{}",
            self.step,
            self.time,
            self.mass,
            self.min_f,
            self.max_f,
            self.max_principle,
            self.solute_energy,
            opt(self.kinetic_fluid),
            opt(self.kinetic_shell),
            opt(self.bending),
            opt(self.divergence_residual),
            opt(self.trace_residual),
            self.eta_min,
            self.eta_max,
            opt_int(self.inner_iterations),
            opt_int(self.outer_iterations),
            opt(self.contraction_rho),
        )
        .unwrap();
        s
    }

    pub fn from_csv(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 17 {
            return None;
        }
        let num = |i: usize| f[i].parse::<f64>().ok();
        let o = |i: usize| if f[i].is_empty() { Some(None) } else { num(i).map(Some) };
        let oi = |i: usize| if f[i].is_empty() { Some(None) } else { f[i].parse::<usize>().ok().map(Some) };
        Some(Self {
            step: f[0].parse().ok()?,
            time: num(1)?,
            mass: num(2)?,
            min_f: num(3)?,
            max_f: num(4)?,
            max_principle: num(5)?,
            solute_energy: num(6)?,
            kinetic_fluid: o(7)?,
            kinetic_shell: o(8)?,
            bending: o(9)?,
            divergence_residual: o(10)?,
            trace_residual: o(11)?,
            eta_min: num(12)?,
            eta_max: num(13)?,
            inner_iterations: oi(14)?,
            outer_iterations: oi(15)?,
            contraction_rho: o(16)?,
        })
    }
}

/// Reads the rows of a diagnostics file written by [`CsvWriter`].
pub fn read_csv(path: &Path) -> io::Result<Vec<Row>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "unexpected diagnostics header"));
    }
    lines
        .map(|l| Row::from_csv(l).ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, format!("bad row `{l}`"))))
        .collect()
}

pub struct CsvWriter {
    file: io::BufWriter<fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut file = io::BufWriter::new(fs::File::create(path)?);
        writeln!(file, "{CSV_HEADER}")?;
        Ok(Self { file })
    }

    /// Continues `path` after `step`: rows past it are dropped, so a resumed run
    /// rewrites them. A missing file starts with the header only.
    pub fn resume(path: &Path, step: usize) -> io::Result<Self> {
        let kept = match read_csv(path) {
            Ok(rows) => rows.into_iter().filter(|r| r.step <= step).collect(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e),
        };
        let mut w = Self::create(path)?;
        for r in &kept {
            w.write(r)?;
        }
        Ok(w)
    }

    pub fn write(&mut self, row: &Row) -> io::Result<()> {
        writeln!(self.file, "{}", row.to_csv())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.file.flush()
    }
}

/// Sidecar of one raw field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub field: String,
    pub step: usize,
    pub time: f64,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub file: String,
}

/// Writes `data` as little-endian f64 to `{field}_{step}.bin` with a JSON sidecar.
pub fn write_dump(dir: &Path, field: &str, step: usize, time: f64, shape: &[usize], data: &[f64]) -> io::Result<PathBuf> {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    fs::create_dir_all(dir)?;
    let stem = format!("{field}_{step:08}");
    let bin = dir.join(format!("{stem}.bin"));
    let mut bytes = Vec::with_capacity(8 * data.len());
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let meta = DumpMeta {
        field: field.into(),
        step,
        time,
        shape: shape.to_vec(),
        dtype: "f64-le".into(),
        file: format!("{stem}.bin"),
    };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta).unwrap())?;
    Ok(bin)
}

pub fn read_dump(bin: &Path) -> io::Result<(DumpMeta, Vec<f64>)> {
    let meta: DumpMeta = serde_json::from_str(&fs::read_to_string(bin.with_extension("json"))?)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let bytes = fs::read(bin)?;
    if bytes.len() != 8 * meta.shape.iter().product::<usize>() {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "dump length does not match its shape"));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((meta, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub stage: String,
    pub step: usize,
    pub message: String,
}

/// Running extrema of the per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub initial_mass: f64,
    /// `max |m(t) - m(0)| / m(0)`, or the absolute drift when `m(0) = 0`.
    pub max_mass_drift: f64,
    pub min_f: f64,
    pub initial_max_principle: f64,
    pub max_max_principle: f64,
    pub max_divergence_residual: f64,
    pub max_trace_residual: f64,
    /// Largest magnitude of any stored field value over the run.
    pub max_abs_field: f64,
}

impl RunStats {
    pub fn new(first: &Row, max_abs_field: f64) -> Self {
        Self {
            initial_mass: first.mass,
            max_mass_drift: 0.0,
            min_f: first.min_f,
            initial_max_principle: first.max_principle,
            max_max_principle: first.max_principle,
            max_divergence_residual: 0.0,
            max_trace_residual: 0.0,
            max_abs_field,
        }
    }

    pub fn record(&mut self, row: &Row, max_abs_field: f64) {
        let scale = if self.initial_mass != 0.0 { self.initial_mass.abs() } else { 1.0 };
        self.max_mass_drift = self.max_mass_drift.max((row.mass - self.initial_mass).abs() / scale);
        self.min_f = self.min_f.min(row.min_f);
        self.max_max_principle = self.max_max_principle.max(row.max_principle);
        self.max_divergence_residual = self.max_divergence_residual.max(row.divergence_residual.unwrap_or(0.0));
        self.max_trace_residual = self.max_trace_residual.max(row.trace_residual.unwrap_or(0.0));
        self.max_abs_field = self.max_abs_field.max(max_abs_field);
    }
}

/// One accepted window of the iteration ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub start_step: usize,
    pub steps: usize,
    pub restarts: usize,
    pub inner_iterations: Vec<usize>,
    pub outer_distances: Vec<f64>,
    pub outer_factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub config_hash: String,
    pub status: Status,
    pub exit_code: i32,
    pub steps: usize,
    pub final_time: f64,
    pub termination: Option<Termination>,
    pub errors: Vec<ErrorEntry>,
    pub stats: Option<RunStats>,
    /// Every stored field stayed exactly zero.
    pub all_zero: bool,
    pub resumed_from: Option<usize>,
    pub windows: Vec<WindowEntry>,
}

impl Summary {
    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, serde_json::to_string_pretty(self).unwrap() + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
