//! Run directory writer.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One directory per run. Files are written with stable key order so that
/// identical runs produce identical bytes.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn subdir(&self, name: &str) -> CliResult<PathBuf> {
        let p = self.dir.join(name);
        std::fs::create_dir_all(&p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
        Ok(p)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))? + "\n";
        std::fs::write(self.path(name), text).map_err(|e| CliError::Output(format!("{name}: {e}")))
    }

    pub fn csv<I>(&self, name: &str, header: &[String], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let fail = |e: csv::Error| CliError::Output(format!("{name}: {e}"));
        let mut w = csv::Writer::from_path(self.path(name)).map_err(fail)?;
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(&r).map_err(fail)?;
        }
        w.flush().map_err(|e| CliError::Output(format!("{name}: {e}")))
    }
}

/// Header cells from string literals.
pub fn header(cells: &[&str]) -> Vec<String> {
    cells.iter().map(|s| s.to_string()).collect()
}

/// Shortest round-trip text of a float; empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// Resolved config as written to `config.resolved.json`.
#[derive(Serialize)]
pub struct Resolved<'a, T: Serialize> {
    pub command: &'static str,
    pub config: &'a T,
}
