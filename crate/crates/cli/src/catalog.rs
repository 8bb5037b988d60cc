//! Debris catalog files.
//!
//! A catalog is comma-separated text with one `# epoch: <label>` comment line
//! and the header `id,a_km,e,i_deg,raan_deg`. Angles are in degrees and the
//! semi-major axis in km; conversion to SI happens here and nowhere else.

use std::fmt::Write as _;
use std::path::Path;

use adr_core::orbital::units::{DEG, KM};
use adr_core::orbital::{Constants, OrbitalElements};
use adr_core::planner::Debris;

use crate::error::CliError;

pub const HEADER: [&str; 5] = ["id", "a_km", "e", "i_deg", "raan_deg"];

/// One catalog row as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogRow {
    /// Line number in the source file (1-based).
    pub line: u64,
    pub id: usize,
    pub a_km: f64,
    pub e: f64,
    pub i_deg: f64,
    pub raan_deg: f64,
}

impl CatalogRow {
    /// Orbital elements at the catalog epoch, or the reason the row is invalid.
    pub fn elements(&self, consts: &Constants) -> Result<OrbitalElements, String> {
        OrbitalElements::new(self.a_km * KM, self.e, self.i_deg * DEG, self.raan_deg * DEG, 0.0, consts)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogFile {
    /// Opaque epoch label; every RAAN is given at the mission start.
    pub epoch: String,
    pub rows: Vec<CatalogRow>,
}

impl CatalogFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    /// Parses catalog text. Only syntax is checked here; see [`Self::debris`]
    /// for the orbital validation.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let parse_err = |line: u64, field: &str, message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            field: field.to_string(),
            message,
        };
        let mut epoch = None;
        for (k, line) in text.lines().enumerate() {
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                if let Some(label) = rest.trim_start().strip_prefix("epoch:") {
                    if epoch.is_some() {
                        return Err(parse_err(k as u64 + 1, "epoch", "epoch declared twice".into()));
                    }
                    epoch = Some(label.trim().to_string());
                }
            }
        }
        let epoch = epoch.ok_or_else(|| parse_err(1, "epoch", "missing `# epoch:` line".into()))?;

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| parse_err(line_of(&e), "header", e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != HEADER {
            let line = headers.position().map_or(1, |p| p.line());
            return Err(parse_err(line, "header", format!("expected `{}`, found `{}`", HEADER.join(","), headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| parse_err(line_of(&e), "row", e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |k: usize| record.get(k).unwrap_or("");
            let id: usize = field(0)
                .parse()
                .ok()
                .filter(|&id| id > 0)
                .ok_or_else(|| parse_err(line, "id", format!("`{}` is not a positive integer", field(0))))?;
            let number = |k: usize| -> Result<f64, CliError> {
                let raw = field(k);
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, HEADER[k], format!("`{raw}` is not a finite number")))
            };
            let (a_km, e, i_deg, raan_deg) = (number(1)?, number(2)?, number(3)?, number(4)?);
            if let Some(first) = rows.iter().find(|r: &&CatalogRow| r.id == id) {
                return Err(parse_err(line, "id", format!("duplicate id {id}, first used on line {}", first.line)));
            }
            rows.push(CatalogRow { line, id, a_km, e, i_deg, raan_deg });
        }
        if rows.is_empty() {
            return Err(parse_err(1, "row", "catalog has no debris".into()));
        }
        Ok(Self { epoch, rows })
    }

    /// Validated debris, failing on the first invalid row.
    pub fn debris(&self, path: &Path, consts: &Constants) -> Result<Vec<Debris>, CliError> {
        self.rows
            .iter()
            .map(|row| {
                row.elements(consts).map(|elements| Debris { id: row.id, elements }).map_err(|message| CliError::InvalidRow {
                    path: path.to_path_buf(),
                    line: row.line,
                    id: row.id,
                    message,
                })
            })
            .collect()
    }

    /// Catalog text that parses back to the same values.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# epoch: {}\n{}\n", self.epoch, HEADER.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.id, r.a_km, r.e, r.i_deg, r.raan_deg);
        }
        out
    }
}

fn line_of(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}
