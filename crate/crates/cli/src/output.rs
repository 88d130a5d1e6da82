//! CSV emission: UTF-8, `#`-prefixed header lines (run metadata and
//! timestamps live here), one column row, then data rows with floats at 17
//! significant digits. Bodies are byte-identical across reruns of the same
//! config and seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

pub fn config_hash(canonical: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    let out = h.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvFile {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
    /// Pre-rendered column row + body (used when a library type renders its
    /// own CSV); mutually exclusive with `columns`/`rows`.
    pub raw_body: Option<String>,
}

impl CsvFile {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            raw_body: None,
        }
    }

    pub fn raw(name: &str, body: String) -> Self {
        Self {
            name: name.to_string(),
            columns: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
            raw_body: Some(body),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn render(&self, experiment: &str, hash: &str, seed: u64) -> String {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!("# spectra-forge experiment={experiment}\n"));
        out.push_str(&format!("# config-sha256={hash} seed={seed}\n"));
        out.push_str(&format!("# generated-unix={stamp}\n"));
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        if let Some(body) = &self.raw_body {
            out.push_str(body);
            if !body.ends_with('\n') {
                out.push('\n');
            }
            return out;
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, dir: &Path, experiment: &str, hash: &str, seed: u64) -> std::io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(&self.name);
        let mut f = fs::File::create(&path)?;
        f.write_all(self.render(experiment, hash, seed).as_bytes())?;
        Ok(path)
    }
}

/// One pass/fail check row shared by the check-style experiments.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Relative comparison against a nonzero reference.
    pub fn relative(name: &str, value: f64, reference: f64, tol: f64) -> Self {
        let pass = (value - reference).abs() <= tol * reference.abs();
        Self { name: name.into(), value, reference, tolerance: tol, pass }
    }

    /// Absolute bound |value| ≤ tol.
    pub fn bound(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, reference: 0.0, tolerance: tol, pass: value.abs() <= tol }
    }

    pub fn to_row(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            fmt(self.value),
            fmt(self.reference),
            fmt(self.tolerance),
            if self.pass { "pass".into() } else { "FAIL".into() },
        ]
    }
}

pub fn checks_to_csv(name: &str, checks: &[CheckRow]) -> CsvFile {
    let mut csv = CsvFile::new(name, &["check", "value", "reference", "tolerance", "status"]);
    for c in checks {
        csv.push(c.to_row());
    }
    csv
}
