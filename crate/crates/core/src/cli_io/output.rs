//! Time-series rows, snapshots and JSON artifacts.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evolution::FieldState;
use crate::grid::RadialGrid;

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Column names, in order. `step` is written as an integer, everything else
/// as `{:.16e}`. Centred quantities (`lambda_ddot`, `key1_residual`,
/// `dissipation_*`, `e_delta_level`) are `NaN` on rows without a following
/// time level.
pub const COLUMNS: [&str; 35] = [
    "t",
    "step",
    "lambda",
    "lambda_dot",
    "lambda_ddot",
    "gamma",
    "focus_monitor",
    "alpha_coeff",
    "lambda_rootfind",
    "lambda_ode",
    "divergence_metric",
    "orthogonality",
    "key1_residual",
    "riccati_residual",
    "energy",
    "energy_excess",
    "bogomolnyi_norm",
    "bogomolnyi_defect",
    "e0",
    "weighted",
    "exterior",
    "weighted_e0",
    "h_energy",
    "h_dissipation",
    "h_tr_weighted",
    "h_tr_weighted_integral",
    "e_delta_level",
    "e_delta_flux_integral",
    "dissipation_lhs",
    "dissipation_rhs",
    "dissipation_rhs_exact",
    "dissipation_residual",
    "dissipation_residual_exact",
    "max_abs_phi_t",
    "max_abs_v",
];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Row {
    pub t: f64,
    pub step: u64,
    pub lambda: f64,
    pub lambda_dot: f64,
    pub lambda_ddot: f64,
    pub gamma: f64,
    pub focus_monitor: f64,
    pub alpha_coeff: f64,
    pub lambda_rootfind: f64,
    pub lambda_ode: f64,
    pub divergence_metric: f64,
    pub orthogonality: f64,
    pub key1_residual: f64,
    pub riccati_residual: f64,
    pub energy: f64,
    pub energy_excess: f64,
    pub bogomolnyi_norm: f64,
    pub bogomolnyi_defect: f64,
    pub e0: f64,
    pub weighted: f64,
    pub exterior: f64,
    pub weighted_e0: f64,
    pub h_energy: f64,
    pub h_dissipation: f64,
    pub h_tr_weighted: f64,
    pub h_tr_weighted_integral: f64,
    pub e_delta_level: f64,
    pub e_delta_flux_integral: f64,
    pub dissipation_lhs: f64,
    pub dissipation_rhs: f64,
    pub dissipation_rhs_exact: f64,
    pub dissipation_residual: f64,
    pub dissipation_residual_exact: f64,
    pub max_abs_phi_t: f64,
    pub max_abs_v: f64,
}

impl Row {
    fn values(&self) -> [f64; 34] {
        [
            self.t,
            self.lambda,
            self.lambda_dot,
            self.lambda_ddot,
            self.gamma,
            self.focus_monitor,
            self.alpha_coeff,
            self.lambda_rootfind,
            self.lambda_ode,
            self.divergence_metric,
            self.orthogonality,
            self.key1_residual,
            self.riccati_residual,
            self.energy,
            self.energy_excess,
            self.bogomolnyi_norm,
            self.bogomolnyi_defect,
            self.e0,
            self.weighted,
            self.exterior,
            self.weighted_e0,
            self.h_energy,
            self.h_dissipation,
            self.h_tr_weighted,
            self.h_tr_weighted_integral,
            self.e_delta_level,
            self.e_delta_flux_integral,
            self.dissipation_lhs,
            self.dissipation_rhs,
            self.dissipation_rhs_exact,
            self.dissipation_residual,
            self.dissipation_residual_exact,
            self.max_abs_phi_t,
            self.max_abs_v,
        ]
    }

    pub fn to_csv_line(&self) -> String {
        let v = self.values();
        let mut s = format!("{:.16e},{}", v[0], self.step);
        for x in &v[1..] {
            s.push(',');
            s.push_str(&format!("{x:.16e}"));
        }
        s.push('\n');
        s
    }
}

pub fn csv_header() -> String {
    let mut s = COLUMNS.join(",");
    s.push('\n');
    s
}

/// Appending CSV writer that tracks its byte length for checkpoints.
pub struct CsvSink {
    file: BufWriter<File>,
    len: u64,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        let mut s = Self {
            file: BufWriter::new(file),
            len: 0,
        };
        s.write_raw(&csv_header())?;
        Ok(s)
    }

    /// Reopens an existing file cut back to `len` bytes.
    pub fn reopen_truncated(path: &Path, len: u64) -> Result<Self> {
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(len)?;
        let mut file = BufWriter::new(file);
        use std::io::Seek;
        file.seek(std::io::SeekFrom::Start(len))?;
        Ok(Self { file, len })
    }

    fn write_raw(&mut self, s: &str) -> Result<()> {
        self.file.write_all(s.as_bytes())?;
        self.len += s.len() as u64;
        Ok(())
    }

    pub fn write_row(&mut self, row: &Row) -> Result<()> {
        self.write_raw(&row.to_csv_line())
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn flush(&mut self) -> Result<()> {
        self.file.flush()?;
        Ok(())
    }
}

/// Writes via a temporary file and rename, so a crash never leaves a
/// half-written artifact behind.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub config_hash: String,
    pub t: f64,
    pub step: u64,
    pub k: u32,
    pub n: usize,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
}

impl Snapshot {
    pub fn new(state: &FieldState, grid: &RadialGrid, config_hash: &str) -> Self {
        Self {
            version: SNAPSHOT_VERSION,
            config_hash: config_hash.to_string(),
            t: state.t,
            step: state.step,
            k: state.k,
            n: state.len(),
            r: grid.nodes().to_vec(),
            phi: state.phi.clone(),
            phi_t: state.phi_t.clone(),
            v: state.v.clone(),
            h: state.h.clone(),
        }
    }
}

pub fn snapshot_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(SNAPSHOT_DIR).join(format!("snap_{step:09}.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(x: f64) -> Row {
        Row {
            t: x,
            step: 3,
            lambda: x,
            lambda_dot: x,
            lambda_ddot: f64::NAN,
            gamma: x,
            focus_monitor: x,
            alpha_coeff: x,
            lambda_rootfind: x,
            lambda_ode: x,
            divergence_metric: x,
            orthogonality: x,
            key1_residual: x,
            riccati_residual: x,
            energy: x,
            energy_excess: x,
            bogomolnyi_norm: x,
            bogomolnyi_defect: x,
            e0: x,
            weighted: x,
            exterior: x,
            weighted_e0: x,
            h_energy: x,
            h_dissipation: x,
            h_tr_weighted: x,
            h_tr_weighted_integral: x,
            e_delta_level: x,
            e_delta_flux_integral: x,
            dissipation_lhs: x,
            dissipation_rhs: x,
            dissipation_rhs_exact: x,
            dissipation_residual: x,
            dissipation_residual_exact: x,
            max_abs_phi_t: x,
            max_abs_v: x,
        }
    }

    #[test]
    fn line_matches_header_and_round_trips() {
        let x = 0.1 + 0.2;
        let line = row(x).to_csv_line();
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        assert_eq!(fields.len(), COLUMNS.len());
        assert_eq!(fields[1], "3");
        assert_eq!(fields[0].parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(fields[4], "NaN");
    }

    #[test]
    fn truncated_reopen_continues_at_length() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let mut s = CsvSink::create(&p).unwrap();
        s.write_row(&row(1.0)).unwrap();
        let cut = s.len();
        s.write_row(&row(2.0)).unwrap();
        s.flush().unwrap();
        drop(s);
        let mut s = CsvSink::reopen_truncated(&p, cut).unwrap();
        s.write_row(&row(3.0)).unwrap();
        s.flush().unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().last().unwrap().starts_with("3.0"));
        assert_eq!(text.len() as u64, s.len());
    }
}
