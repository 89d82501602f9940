//! Report files: CSV with a comment preamble, pretty JSON, and the worker pool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

pub const THREADS_ENV: &str = "STOKES_SPECTRA_THREADS";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Rows are written in the order given; callers sort first.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    /// Header and rows only, LF terminated.
    pub fn body(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?)
    }
}

/// `#` lines carry the run time and the resolved config; the body after them
/// is deterministic.
pub fn write_csv(path: &Path, command: &str, config: &RunConfig, table: &Table) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "# stokes-spectra {command} generated_unix={}", unix_seconds())?;
    writeln!(buf, "# config {}", serde_json::to_string(config)?)?;
    buf.extend(table.body()?);
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    generated_unix: u64,
    config: &'a RunConfig,
    results: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, command: &str, config: &RunConfig, results: &T) -> anyhow::Result<()> {
    let env = Envelope { command, generated_unix: unix_seconds(), config, results };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn out_dir(config: &RunConfig) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
    Ok(config.out.clone())
}

/// Pool bounded by `STOKES_SPECTRA_THREADS` when it holds a positive integer.
pub fn pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    Ok(b.build()?)
}
