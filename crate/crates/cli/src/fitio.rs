//! CSV input for the `fit` subcommand.
//!
//! Spectrum files have columns `delta_p_over_Gamma,transmission` and an
//! optional `sigma`. Trace files have `t_over_Gamma_inv,input_intensity,
//! output_intensity` on a uniform time axis.

use std::collections::HashMap;
use std::path::Path;

use eitmem::estimation::{IntensityTrace, SlowLightData, SpectrumData};

use crate::error::{CliError, Result};

fn read_columns(path: &Path, required: &[&str], optional: &[&str]) -> Result<HashMap<String, Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::input(format!("{shown}: {e}")))?
        .clone();
    let index = |name: &str| header.iter().position(|h| h == name);
    let mut wanted = Vec::new();
    for name in required {
        let k = index(name).ok_or_else(|| CliError::input(format!("{shown}: missing column `{name}`")))?;
        wanted.push((name.to_string(), k));
    }
    for name in optional {
        if let Some(k) = index(name) {
            wanted.push((name.to_string(), k));
        }
    }
    let mut cols: HashMap<String, Vec<f64>> = wanted.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("{shown}: {e}")))?;
        for (name, k) in &wanted {
            let cell = record.get(*k).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                CliError::input(format!("{shown}: row {}: `{cell}` in `{name}` is not a number", line + 2))
            })?;
            cols.get_mut(name).expect("column registered").push(v);
        }
    }
    Ok(cols)
}

/// Spectrum with per-point σ from the file or `default_sigma`.
pub fn read_spectrum(path: &Path, default_sigma: f64) -> Result<SpectrumData> {
    let mut cols = read_columns(path, &["delta_p_over_Gamma", "transmission"], &["sigma"])?;
    let delta_p = cols.remove("delta_p_over_Gamma").unwrap_or_default();
    let transmission = cols.remove("transmission").unwrap_or_default();
    Ok(match cols.remove("sigma") {
        Some(sigma) => SpectrumData {
            delta_p,
            transmission,
            sigma,
        },
        None => SpectrumData::uniform(delta_p, transmission, default_sigma),
    })
}

/// Input and output traces. Without `sigma` the output noise is taken as 1%
/// of its peak.
pub fn read_trace(path: &Path, sigma: Option<f64>) -> Result<SlowLightData> {
    let cols = read_columns(path, &["t_over_Gamma_inv", "input_intensity", "output_intensity"], &[])?;
    let t = &cols["t_over_Gamma_inv"];
    if t.len() < 8 {
        return Err(CliError::input(format!("{}: needs at least 8 samples", path.display())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let uniform = dt > 0.0
        && t.windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt.abs());
    if !uniform {
        return Err(CliError::input(format!("{}: time axis must be uniform and increasing", path.display())));
    }
    let output = cols["output_intensity"].clone();
    let peak = output.iter().copied().fold(0.0, f64::max);
    Ok(SlowLightData {
        input: IntensityTrace {
            start: t[0],
            dt,
            intensity: cols["input_intensity"].clone(),
        },
        output: IntensityTrace {
            start: t[0],
            dt,
            intensity: output,
        },
        sigma: sigma.unwrap_or(0.01 * peak),
        transit_delay: 0.0,
    })
}
