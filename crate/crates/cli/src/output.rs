//! CSV emission and the per-run manifest.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;

use crate::config::Globals;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(globals: &Globals) -> anyhow::Result<Self> {
        fs::create_dir_all(&globals.out).with_context(|| format!("creating {}", globals.out.display()))?;
        Ok(Self {
            dir: globals.out.clone(),
            files: Vec::new(),
        })
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `<command>_manifest.json` listing every file of this run.
    pub fn finish<C: Serialize>(
        self,
        command: &str,
        globals: &Globals,
        config: &C,
        checks: serde_json::Value,
    ) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            globals,
            config,
            outputs: &self.files,
            checks,
        };
        let path = self.dir.join(format!("{command}_manifest.json"));
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct RunManifest<'a, C> {
    command: &'a str,
    version: &'static str,
    timestamp: String,
    globals: &'a Globals,
    config: &'a C,
    outputs: &'a [String],
    checks: serde_json::Value,
}

/// Label used in file and column names, e.g. `0.5`.
pub fn label(v: f64) -> String {
    format!("{v}")
}
