use std::io::Write;

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

const CONFIG_PREFIX: &str = "# config: ";

/// Reads a config JSON, a CSV report (first line `# config: ...`) or a JSON report (`"config"` key).
pub fn load_config(path: &str) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let json = match text.lines().next() {
        Some(first) if first.starts_with(CONFIG_PREFIX) => first[CONFIG_PREFIX.len()..].to_string(),
        _ => text,
    };
    let mut value: serde_json::Value =
        serde_json::from_str(&json).map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("config {path}: {e}")))
}

/// CSV table with the run config as its first line.
pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { comments: vec![], header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.comments.push(text.into());
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        writeln!(out, "{CONFIG_PREFIX}{}", cfg.to_line()).expect("write to memory");
        for c in &self.comments {
            writeln!(out, "# {c}").expect("write to memory");
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| CliError::Numeric(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Numeric(format!("csv: {e}"))
}

/// Pretty JSON with sorted keys and the run config under `"config"`.
pub fn json<T: Serialize>(cfg: &RunConfig, body: &T) -> Result<Vec<u8>, CliError> {
    let mut value = serde_json::to_value(body).map_err(|e| CliError::Numeric(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Numeric("report is not a JSON object".into()))?;
    obj.insert("config".into(), serde_json::to_value(cfg).map_err(|e| CliError::Numeric(e.to_string()))?);
    let mut out = serde_json::to_vec_pretty(&value).map_err(|e| CliError::Numeric(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_file(path: &str, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Usage(format!("cannot write {path}: {e}")))
}

/// To `paths.output` if set, else stdout.
pub fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &cfg.paths.output {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}"))),
    }
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}
