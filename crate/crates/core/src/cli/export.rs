//! Result files: CSV tables with 17 significant digits and a JSON summary.
//!
//! Every file is rendered in memory first and then written through a
//! temporary file and an atomic rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde_json::json;

use crate::engine::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::{beampattern, correlate, to_db, IslrReport};
use crate::model::{AngleScenario, WaveformSet};

pub const WAVEFORM_FILE: &str = "waveform.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const BEAMPATTERN_FILE: &str = "beampattern.csv";
pub const CORRELATION_FILE: &str = "correlation.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const PARETO_FILE: &str = "pareto.csv";

/// Beampattern export spacing in degrees.
pub const BEAMPATTERN_STEP_DEG: f64 = 0.5;

/// Full-precision decimal: 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

struct Table {
    text: String,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

/// Rendered contents of one run's output files.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportBundle {
    pub waveform: String,
    pub convergence: String,
    pub beampattern: String,
    pub correlation: String,
    pub metrics: serde_json::Value,
}

pub fn waveform_table(s: &WaveformSet) -> String {
    let mut t = Table::new(&["m", "n", "re", "im"]);
    for m in 0..s.mt() {
        for (n, z) in s.row(m).iter().enumerate() {
            t.row(&[m.to_string(), n.to_string(), num(z.re), num(z.im)]);
        }
    }
    t.text
}

fn convergence_table(record: &RunRecord) -> String {
    let mut t = Table::new(&["sweep", "f_o", "spatial_islr_db", "range_islr_db"]);
    let init = &record.initial;
    t.row(&["0".into(), num(init.objective), num(init.spatial_islr_db), num(init.range_islr_db)]);
    for h in &record.history {
        t.row(&[h.sweep.to_string(), num(h.f_o), num(h.spatial_islr_db), num(h.range_islr_db)]);
    }
    t.text
}

fn beampattern_table(s: &WaveformSet, scenario: &AngleScenario) -> String {
    let mut t = Table::new(&["theta_deg", "P_linear", "P_db"]);
    let count = (180.0 / BEAMPATTERN_STEP_DEG).round() as usize;
    for i in 0..=count {
        let deg = -90.0 + i as f64 * BEAMPATTERN_STEP_DEG;
        let p = beampattern(s, deg.to_radians(), scenario.dt_over_lambda());
        t.row(&[num(deg), num(p), num(to_db(p))]);
    }
    t.text
}

fn correlation_table(s: &WaveformSet) -> String {
    let mut t = Table::new(&["m", "l", "k", "abs_r"]);
    let n = s.n() as i64;
    for m in 0..s.mt() {
        for l in 0..s.mt() {
            for (i, r) in correlate(s.row(m), s.row(l)).iter().enumerate() {
                t.row(&[m.to_string(), l.to_string(), (i as i64 - (n - 1)).to_string(), num(r.norm())]);
            }
        }
    }
    t.text
}

/// JSON summary for a final report, with optional run details.
pub fn metrics_json(
    report: &IslrReport,
    eta: f64,
    record: Option<&RunRecord>,
    echo: &serde_json::Value,
) -> serde_json::Value {
    json!({
        "spatial_islr": report.spatial_islr,
        "range_islr": report.range_islr,
        "spatial_islr_db": report.spatial_islr_db,
        "range_islr_db": report.range_islr_db,
        "objective": report.objective,
        "eta": eta,
        "stop_reason": record.map(|r| r.stop_reason.as_str()),
        "sweeps": record.map(|r| r.sweeps_used),
        "fallbacks": record.map(|r| r.diagnostics.fallbacks),
        "wall_time_s": record.map(|r| r.diagnostics.wall_time_s),
        "config": echo,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

impl ExportBundle {
    pub fn from_run(record: &RunRecord, scenario: &AngleScenario, eta: f64, echo: &serde_json::Value) -> Self {
        let s = &record.final_waveform;
        Self {
            waveform: waveform_table(s),
            convergence: convergence_table(record),
            beampattern: beampattern_table(s, scenario),
            correlation: correlation_table(s),
            metrics: metrics_json(&record.final_report, eta, Some(record), echo),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let metrics = serde_json::to_string_pretty(&self.metrics).map_err(|e| Error::Config(e.to_string()))?;
        write_files(
            dir,
            &[
                (WAVEFORM_FILE, &self.waveform),
                (CONVERGENCE_FILE, &self.convergence),
                (BEAMPATTERN_FILE, &self.beampattern),
                (CORRELATION_FILE, &self.correlation),
                (METRICS_FILE, &metrics),
            ],
        )
    }
}

pub fn pareto_table(rows: &[(f64, f64, f64)]) -> String {
    let mut t = Table::new(&["eta", "spatial_islr_db", "range_islr_db"]);
    for &(eta, sp, rg) in rows {
        t.row(&[num(eta), num(sp), num(rg)]);
    }
    t.text
}

/// Writes each file to a temporary sibling and renames it into place.
pub fn write_files(dir: &Path, files: &[(&str, &str)]) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for (name, contents) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    }
    Ok(())
}

/// Reads a `m,n,re,im` table into an `mt x n` matrix; every entry must appear once.
pub fn read_waveform(path: &Path, mt: usize, n: usize) -> Result<WaveformSet> {
    let bad = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["m", "n", "re", "im"] {
        return Err(bad(format!("expected header m,n,re,im, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut data = vec![None; mt * n];
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let index = |k: usize| field(k).parse::<usize>().map_err(|e| bad(format!("line {line}: {e}")));
        let value = |k: usize| field(k).parse::<f64>().map_err(|e| bad(format!("line {line}: {e}")));
        let (m, k) = (index(0)?, index(1)?);
        if m >= mt || k >= n {
            return Err(bad(format!("line {line}: entry ({m}, {k}) outside {mt}x{n}")));
        }
        if data[m * n + k].replace(Complex64::new(value(2)?, value(3)?)).is_some() {
            return Err(bad(format!("line {line}: duplicate entry ({m}, {k})")));
        }
    }
    let data: Option<Vec<Complex64>> = data.into_iter().collect();
    let data = data.ok_or_else(|| bad(format!("missing entries for a {mt}x{n} waveform")))?;
    WaveformSet::new(mt, n, data)
}
