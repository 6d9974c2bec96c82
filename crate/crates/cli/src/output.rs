//! Artifacts and atomic writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use eitmem::SampledWaveform;

use crate::error::{CliError, Result};

/// Column headers of the waveform CSV files.
pub const WAVEFORM_HEADER: [&str; 4] = ["t_over_Gamma_inv", "re_amp", "im_amp", "intensity"];

/// One output file, held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: Vec<u8>,
}

/// Column-oriented table rendered as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_value(v))).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn artifact(&self, file_name: impl Into<String>) -> Artifact {
        Artifact {
            file_name: file_name.into(),
            contents: self.to_csv(),
        }
    }
}

/// Shortest round-trip text; exponent form outside [1e-4, 1e15).
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn waveform_table(w: &SampledWaveform) -> Table {
    let mut t = Table::new(&WAVEFORM_HEADER);
    for (k, a) in w.amplitude.iter().enumerate() {
        t.push(vec![w.time(k), a.re, a.im, a.norm_sqr()]);
    }
    t
}

/// Write via a temporary file in the same directory and rename into place.
pub fn write_atomic(dir: &Path, artifact: &Artifact) -> Result<PathBuf> {
    let path = dir.join(&artifact.file_name);
    let wrap = |source| CliError::Write {
        path: path.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(wrap)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(&artifact.contents).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(&path).map_err(|e| wrap(e.error))?;
    Ok(path)
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    artifacts.iter().map(|a| write_atomic(dir, a)).collect()
}
