//! CSV/JSON writers and the memory guard.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use starkmbl::correlation::{CorrelationSeries, SpectrumSeries};

/// Writes a header row and formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Columns `t,re,im` plus `stderr` when the series carries one.
pub fn write_series(path: &Path, s: &CorrelationSeries) -> Result<()> {
    let rows = s.times.iter().zip(&s.values).enumerate().map(|(k, (t, v))| {
        let mut r = vec![num(*t), num(v.re), num(v.im)];
        if let Some(se) = &s.std_error {
            r.push(num(se[k]));
        }
        r
    });
    if s.std_error.is_some() {
        write_csv(path, &["t", "re", "im", "stderr"], rows)
    } else {
        write_csv(path, &["t", "re", "im"], rows)
    }
}

/// Columns `omega,magnitude`.
pub fn write_spectrum(path: &Path, s: &SpectrumSeries) -> Result<()> {
    write_csv(
        path,
        &["omega", "magnitude"],
        s.omega.iter().zip(&s.magnitude).map(|(w, m)| vec![num(*w), num(*m)]),
    )
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `MemAvailable` from `/proc/meminfo`, in bytes.
pub fn mem_available() -> Option<u64> {
    let text = fs::read_to_string("/proc/meminfo").ok()?;
    let line = text.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Bytes held by `copies` dense complex `dim × dim` matrices.
pub fn dense_bytes(dim: usize, copies: usize) -> u64 {
    (dim as u64) * (dim as u64) * 16 * copies as u64
}

/// Fails when a computation needs more memory than is available.
pub fn require_memory(needed: u64, what: &str) -> Result<()> {
    if let Some(avail) = mem_available() {
        if needed > avail {
            bail!(
                "{what} needs about {:.1} GiB but only {:.1} GiB is available",
                needed as f64 / (1u64 << 30) as f64,
                avail as f64 / (1u64 << 30) as f64
            );
        }
    }
    Ok(())
}

/// `plot '<file>' using 1:<col> skip 1 with lines title '<title>'` for
/// several files.
pub fn plot_lines(entries: &[(String, usize, String)]) -> String {
    let parts: Vec<String> = entries
        .iter()
        .map(|(f, col, title)| format!("'{f}' using 1:{col} skip 1 with lines title '{title}'"))
        .collect();
    format!("plot {}\n", parts.join(", \\\n     "))
}

pub const PLOT_HEADER: &str = "# gnuplot script; run it from this directory: gnuplot -p plot.gp\nset datafile separator ','\nset key outside right\n";
