use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// One oracle run as recorded in a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRecord {
    pub name: String,
    pub parameters: String,
    pub resolution: String,
    pub result: String,
    pub convergence: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl OracleRecord {
    pub fn new(name: &str, parameters: &str, resolution: &str, result: &str, convergence: &str) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            name: name.into(),
            parameters: parameters.into(),
            resolution: resolution.into(),
            result: result.into(),
            convergence: convergence.into(),
            timestamp,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[{}]", self.name);
        let _ = writeln!(s, "parameters = {}", self.parameters);
        let _ = writeln!(s, "resolution = {}", self.resolution);
        let _ = writeln!(s, "result = {}", self.result);
        let _ = writeln!(s, "convergence = {}", self.convergence);
        let _ = writeln!(s, "timestamp = {}", self.timestamp);
        s
    }
}

pub fn write_manifest(path: &Path, records: &[OracleRecord]) -> io::Result<()> {
    let body: Vec<String> = records.iter().map(OracleRecord::render).collect();
    std::fs::write(path, body.join("\n"))
}
