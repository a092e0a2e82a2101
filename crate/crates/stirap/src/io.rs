//! Tabular and structured-text output.
//!
//! Every table starts with a comment line naming the producing build and the
//! artifact schema (`# stirap <version> | <artifact> v<n>`), followed by a
//! comma-separated header whose entries carry their units in brackets.
//! Reports (bounds, run summaries, verification) are TOML documents with the
//! same leading comment line.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{GaussianPacket, GroundState};
use crate::wavepacket::PacketTrajectory;

/// Version of the producing build.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema version of every table and report written by this module.
pub const SCHEMA_VERSION: u32 = 1;

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Leading comment line of an artifact.
pub fn artifact_header(artifact: &str) -> String {
    format!("# stirap {ARTIFACT_VERSION} | {artifact} v{SCHEMA_VERSION}")
}

// ============================================================================
// Tables
// ============================================================================

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Real number, written in shortest round-trip form.
    Num(f64),
    /// Integer.
    Int(i64),
    /// Text.
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Delimited table with unit-annotated columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Artifact name written in the leading comment.
    pub artifact: String,
    /// `(name, unit)` of every column.
    pub columns: Vec<(String, String)>,
    /// Rows, each as long as `columns`.
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Empty table.
    pub fn new(artifact: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            artifact: artifact.to_string(),
            columns: columns.iter().map(|(n, u)| (n.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row.
    ///
    /// # Panics
    /// If the row length differs from the column count.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row length must match the column count");
        self.rows.push(row);
    }

    /// Writes the table.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", artifact_header(&self.artifact)).map_err(io_err)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|(n, u)| format!("{n} [{u}]"))).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// The table as text.
    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("tables are UTF-8")
    }

    /// Writes the table to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| io_err(format!("{}: {e}", path.display())))
    }
}

/// Column set of packet trajectories.
pub const TRAJECTORY_COLUMNS: [(&str, &str); 6] = [
    ("t", "time"),
    ("z", "length"),
    ("p", "momentum"),
    ("epsilon", "length"),
    ("phase", "rad"),
    ("state", "-"),
];

/// Appends one packet snapshot to a trajectory table.
pub fn push_packet_row(table: &mut Table, t: f64, packet: &GaussianPacket, state: GroundState, mass: f64) {
    table.push(vec![
        t.into(),
        packet.center.into(),
        packet.momentum.into(),
        packet.spreading(mass).into(),
        packet.phase.into(),
        state.label().into(),
    ]);
}

/// Trajectory table of a closed-form packet run.
pub fn trajectory_table(artifact: &str, trajectory: &PacketTrajectory, mass: f64) -> Table {
    let mut table = Table::new(artifact, &TRAJECTORY_COLUMNS);
    for e in &trajectory.entries {
        push_packet_row(&mut table, e.t, &e.packet, e.state, mass);
    }
    table
}

// ============================================================================
// Structured text
// ============================================================================

/// Serializes a report as TOML under the artifact comment line.
pub fn structured_text<T: Serialize>(artifact: &str, value: &T) -> Result<String> {
    let body = toml::to_string(value).map_err(io_err)?;
    Ok(format!("{}\n{body}", artifact_header(artifact)))
}

/// Writes [`structured_text`] to `path`.
pub fn save_structured<T: Serialize>(path: &Path, artifact: &str, value: &T) -> Result<()> {
    let text = structured_text(artifact, value)?;
    std::fs::write(path, text).map_err(|e| io_err(format!("{}: {e}", path.display())))
}
