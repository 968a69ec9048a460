use std::path::Path;

use super::{mode_name, Row};
use crate::error::{Error, Result};
use crate::precoding::PrecoderMode;

pub const CSV_HEADER: [&str; 12] = [
    "experiment",
    "seed",
    "mode",
    "M",
    "K",
    "snr_db",
    "x_name",
    "x_value",
    "analytic_nats",
    "mc_mean_nats",
    "mc_ci95",
    "solver_t_star",
];

/// Shortest exact-width form used in CSV files: 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_csv(rows: &[Row], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.seed.to_string(),
            mode_name(r.mode).to_string(),
            r.m.to_string(),
            r.k.to_string(),
            format_number(r.snr_db),
            r.x_name.clone(),
            format_number(r.x_value),
            optional(r.analytic_nats),
            optional(r.mc_mean_nats),
            optional(r.mc_ci95),
            optional(r.solver_t_star),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

fn parse_mode(s: &str) -> Result<PrecoderMode> {
    [
        PrecoderMode::Full,
        PrecoderMode::Partial,
        PrecoderMode::None,
        PrecoderMode::Optimal,
    ]
    .into_iter()
    .find(|m| mode_name(*m) == s)
    .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("bad `{}` field in {rec:?}", CSV_HEADER[i])))
}

fn optional_field(rec: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    match rec.get(i) {
        Some("") => Ok(None),
        _ => field(rec, i).map(Some),
    }
}

/// Reads a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        rows.push(Row {
            experiment: field(&rec, 0)?,
            seed: field(&rec, 1)?,
            mode: parse_mode(&rec[2])?,
            m: field(&rec, 3)?,
            k: field(&rec, 4)?,
            snr_db: field(&rec, 5)?,
            x_name: field(&rec, 6)?,
            x_value: field(&rec, 7)?,
            analytic_nats: optional_field(&rec, 8)?,
            mc_mean_nats: optional_field(&rec, 9)?,
            mc_ci95: optional_field(&rec, 10)?,
            solver_t_star: optional_field(&rec, 11)?,
        });
    }
    Ok(rows)
}
