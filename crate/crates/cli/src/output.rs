//! CSV tables and the run manifest.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// One CSV file held in memory until the run finishes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Csv(e.into_error().into()))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    timestamp: String,
    command: Vec<String>,
    config: &'a ExperimentConfig,
    run_seeds: Vec<u64>,
    notes: &'a [String],
    outputs: Vec<String>,
}

/// Writes every table, plus `manifest.json` when an output directory is set.
/// Without a directory the tables go to stdout, separated by blank lines.
pub fn emit(cfg: &ExperimentConfig, tables: &[Table], notes: &[String]) -> Result<(), CliError> {
    let Some(dir) = &cfg.out else {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        for (i, table) in tables.iter().enumerate() {
            if i > 0 {
                writeln!(lock).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            }
            lock.write_all(&table.to_csv()?)
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
        return Ok(());
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for table in tables {
        let path = dir.join(table.file_name());
        std::fs::write(&path, table.to_csv()?).map_err(|e| CliError::io(&path, e))?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        command: std::env::args().collect(),
        config: cfg,
        run_seeds: crate::commands::run_seeds(cfg),
        notes,
        outputs: tables.iter().map(Table::file_name).collect(),
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}
