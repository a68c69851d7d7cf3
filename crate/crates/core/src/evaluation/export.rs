//! Tab-separated embedding tables for external plotting.
//!
//! After a `#` header line, each row holds a tag (label or generation), the
//! four genes and the vector components. Floats use the shortest decimal
//! form that parses back to the same value.

use std::fmt::Write as _;
use std::path::Path;

use crate::behavior::BehaviorVector;
use crate::discovery::NoveltyArchive;
use crate::sim::ControllerGenome;

use super::EvalError;

pub const EXPORT_HEADER: &str = "# swarmdisc embeddings v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ExportRow {
    pub tag: String,
    pub genome: ControllerGenome,
    pub values: Vec<f64>,
}

impl ExportRow {
    pub fn new(tag: impl Into<String>, genome: ControllerGenome, vector: &BehaviorVector) -> Self {
        Self {
            tag: tag.into(),
            genome,
            values: vector.values.clone(),
        }
    }
}

pub fn archive_rows(archive: &NoveltyArchive) -> Vec<ExportRow> {
    archive
        .entries()
        .iter()
        .map(|e| ExportRow::new(e.generation.to_string(), e.genome, &e.vector))
        .collect()
}

pub fn render_rows(rows: &[ExportRow]) -> String {
    let mut out = String::new();
    out.push_str(EXPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.tag);
        for g in r.genome.to_array() {
            let _ = write!(out, "\t{g}");
        }
        for v in &r.values {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

pub fn export_embeddings(rows: &[ExportRow], path: &Path) -> Result<(), EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyExport);
    }
    std::fs::write(path, render_rows(rows)).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_rows(text: &str) -> Result<Vec<ExportRow>, EvalError> {
    let bad = |line: usize, msg: &str| EvalError::Parse(format!("line {line}: {msg}"));
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let tag = fields.next().ok_or_else(|| bad(i + 1, "empty row"))?.to_string();
        let numbers = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad(i + 1, &format!("bad number '{f}'"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if numbers.len() < 4 {
            return Err(bad(i + 1, "fewer than four genes"));
        }
        rows.push(ExportRow {
            tag,
            genome: ControllerGenome::new(numbers[0], numbers[1], numbers[2], numbers[3]),
            values: numbers[4..].to_vec(),
        });
    }
    Ok(rows)
}
