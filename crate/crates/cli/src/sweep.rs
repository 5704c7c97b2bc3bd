//! Parameter sweeps: one spectrum sub-run per value plus a summary table.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::output::{num, write_csv, write_text, PLOT_HEADER};
use crate::run::{correlation_run, SeriesMetrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub dir: String,
    /// `Err` holds the failure message; the sweep continues past it.
    pub result: std::result::Result<Vec<SeriesMetrics>, String>,
}

pub fn point_dir_name(index: usize, axis: &str, value: f64) -> String {
    format!("point_{index:02}_{axis}_{value}")
}

/// Runs every point (concurrently up to `workers`) and writes
/// `summary.csv` and `plot.gp`.
pub(crate) fn sweep_points(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<SweepPoint>> {
    let sw = cfg.sweep.as_ref().expect("validated");
    let axis = sw.axis.to_string();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sw.workers)
        .build()
        .map_err(|e| anyhow!("worker pool: {e}"))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        sw.values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| {
                let name = point_dir_name(i, &axis, v);
                let sub = dir.join(&name);
                let result = (|| -> Result<Vec<SeriesMetrics>> {
                    let point = cfg.sweep_point(v)?;
                    fs::create_dir_all(&sub)?;
                    correlation_run(&point, &sub, true)
                })()
                .map_err(|e| format!("{e:#}"));
                SweepPoint {
                    value: v,
                    dir: name,
                    result,
                }
            })
            .collect()
    });

    let mut rows = Vec::new();
    for p in &points {
        match &p.result {
            Ok(ms) => {
                for m in ms {
                    rows.push(vec![
                        num(p.value),
                        m.name.clone(),
                        num(m.envelope),
                        m.dominant_frequency.map(num).unwrap_or_default(),
                        m.spectral_entropy.map(num).unwrap_or_default(),
                        "ok".into(),
                        String::new(),
                    ]);
                }
            }
            Err(e) => rows.push(vec![
                num(p.value),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "failed".into(),
                e.clone(),
            ]),
        }
    }
    write_csv(
        &dir.join("summary.csv"),
        &["value", "observable", "envelope", "dominant_frequency", "spectral_entropy", "status", "error"],
        rows,
    )?;

    let mut plot = String::from(PLOT_HEADER);
    plot.push_str(&format!("set xlabel '{axis}'\nset ylabel 'metric'\nset style data linespoints\n"));
    let first = cfg.observables[0].name.clone();
    plot.push_str(&format!(
        "plot 'summary.csv' using 1:(stringcolumn(2) eq '{first}' ? $3 : 1/0) skip 1 title 'envelope ({first})', \\\n     \
         'summary.csv' using 1:(stringcolumn(2) eq '{first}' ? $5 : 1/0) skip 1 title 'spectral entropy ({first})'\n"
    ));
    write_text(&dir.join("plot.gp"), &plot)?;
    Ok(points)
}

/// Reads a `summary.csv` back.
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub value: f64,
    pub observable: String,
    pub envelope: Option<f64>,
    pub dominant_frequency: Option<f64>,
    pub spectral_entropy: Option<f64>,
    pub status: String,
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{preset, ExperimentKind, GridConfig, MethodConfig, SweepAxis, SweepConfig};

    fn small_sweep(values: Vec<f64>) -> ExperimentConfig {
        let mut c = preset("fig2a").unwrap();
        c.experiment = ExperimentKind::Sweep;
        c.params.n_sites = 3;
        c.params.boson_levels = 2;
        c.method = MethodConfig::Exact;
        c.grid = Some(GridConfig { dt: 0.1, t_max: 5.0 });
        c.sweep = Some(SweepConfig {
            axis: SweepAxis::W,
            values,
            workers: 2,
        });
        c
    }

    #[test]
    fn summary_has_a_row_per_point_and_observable() {
        let d = tempfile::tempdir().unwrap();
        let cfg = small_sweep(vec![3.0, 6.0]);
        cfg.validate().unwrap();
        let pts = sweep_points(&cfg, d.path()).unwrap();
        assert_eq!(pts.len(), 2);
        let rows = read_summary(&d.path().join("summary.csv")).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.status == "ok"));
        assert!(d.path().join("point_01_w_6/autocorr_Sx.csv").exists());
        assert!(d.path().join("point_00_w_3/spectrum_SzSp.csv").exists());
    }

    #[test]
    fn failing_point_is_recorded() {
        let d = tempfile::tempdir().unwrap();
        let mut cfg = small_sweep(vec![3.0]);
        cfg.sweep.as_mut().unwrap().axis = SweepAxis::N;
        cfg.sweep.as_mut().unwrap().values = vec![3.0, 2.5];
        // bypass validation to exercise the per-point failure path
        let pts = sweep_points(&cfg, d.path()).unwrap();
        assert!(pts[0].result.is_ok());
        assert!(pts[1].result.is_err());
        let rows = read_summary(&d.path().join("summary.csv")).unwrap();
        assert_eq!(rows.last().unwrap().status, "failed");
        assert!(!rows.last().unwrap().error.is_empty());
    }
}
