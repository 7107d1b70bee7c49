//! Waveform files: CSV with a commented grid header, lossless for f64
//! (17 significant digits), so written files read back bit-exactly.

use std::path::Path;

use num_complex::Complex64;

use mtb_core::{SampledSignal, TimeGrid};

use crate::error::CliError;

/// Writes `t_seconds,real,imag` rows preceded by `# dt_seconds` and
/// `# n_samples` comment lines carrying the grid.
pub fn write_waveform(path: &Path, signal: &SampledSignal) -> Result<(), CliError> {
    let grid = signal.grid();
    let mut text = String::with_capacity(80 * grid.n_samples());
    text.push_str(&format!("# dt_seconds = {:.17e}\n", grid.dt()));
    text.push_str(&format!("# n_samples = {}\n", grid.n_samples()));
    text.push_str("t_seconds,real,imag\n");
    for (k, c) in signal.samples().iter().enumerate() {
        text.push_str(&format!(
            "{:.17e},{:.17e},{:.17e}\n",
            grid.time(k),
            c.re,
            c.im
        ));
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn parse_header_line(line: Option<&str>, key: &str, path: &Path) -> Result<f64, CliError> {
    let line = line.ok_or_else(|| {
        CliError::Config(format!("{}: missing `# {key} = ...` header", path.display()))
    })?;
    let rest = line.strip_prefix("# ").and_then(|l| {
        l.split_once(" = ")
            .filter(|(k, _)| *k == key)
            .map(|(_, v)| v)
    });
    let value = rest.ok_or_else(|| {
        CliError::Config(format!(
            "{}: expected `# {key} = ...`, found {line:?}",
            path.display()
        ))
    })?;
    value.trim().parse::<f64>().map_err(|e| {
        CliError::Config(format!("{}: bad {key} value {value:?}: {e}", path.display()))
    })
}

/// Reads a waveform written by [`write_waveform`]. The grid comes from the
/// commented header; the time column is redundant and ignored.
pub fn read_waveform(path: &Path) -> Result<SampledSignal, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let dt = parse_header_line(lines.next(), "dt_seconds", path)?;
    let n = parse_header_line(lines.next(), "n_samples", path)? as usize;
    match lines.next() {
        Some("t_seconds,real,imag") => {}
        other => {
            return Err(CliError::Config(format!(
                "{}: expected the `t_seconds,real,imag` column header, found {other:?}",
                path.display()
            )));
        }
    }
    let mut samples = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (_t, re, im) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(re), Some(im), None) => (t, re, im),
            _ => {
                return Err(CliError::Config(format!(
                    "{}: row {} needs exactly three comma-separated fields",
                    path.display(),
                    idx + 1
                )));
            }
        };
        let parse = |v: &str| {
            v.parse::<f64>().map_err(|e| {
                CliError::Config(format!(
                    "{}: row {}: bad number {v:?}: {e}",
                    path.display(),
                    idx + 1
                ))
            })
        };
        samples.push(Complex64::new(parse(re)?, parse(im)?));
    }
    if samples.len() != n {
        return Err(CliError::Config(format!(
            "{}: header says {} samples, file has {}",
            path.display(),
            n,
            samples.len()
        )));
    }
    let grid = TimeGrid::new(n, dt)?;
    Ok(SampledSignal::new(grid, samples)?)
}
