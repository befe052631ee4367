//! CSV and manifest writers. Floats are written with 17 significant digits so
//! that identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Short, filename-safe rendering of a time such as `6.005`.
pub fn time_tag(t: f64) -> String {
    format!("{t}").replace('-', "m")
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let io_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        w.write_record(header).map_err(io_err)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row).map_err(io_err)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}
