//! Experiment dispatch and the figure-class experiments.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use starkmbl::correlation::{
    dominant_frequency, envelope_metric, fluctuation_exact, fluctuation_typicality_many,
    peak_frequency, spectral_entropy, spectrum, uniform_grid, CorrelationSeries, SpectrumSeries,
};
use starkmbl::gates::{
    compose_cnot, gate_ising, gate_rot_x, gate_rot_z, run_error_recovery, verify_su2,
    ErrorInjection,
};
use starkmbl::hamiltonians::{build_effective, build_full, build_system, ModelParams};
use starkmbl::lbits::{build_seed, construct_tau, spin_locality_profile, ProfileMethod, Tau};
use starkmbl::propagation::{dense_eig, KrylovParams};
use starkmbl::{SpaceSpec, SparseOperator};

use crate::config::{
    build_operator, ExperimentConfig, ExperimentKind, HamiltonianKind, MethodConfig, SiteContext,
    SCHEMA_VERSION,
};
use crate::manifest::{collect_files, prepare_output_dir, write_manifest, RunManifest};
use crate::output::{
    dense_bytes, num, plot_lines, require_memory, write_csv, write_json, write_series,
    write_spectrum, write_text, PLOT_HEADER,
};
use crate::{sweep, verify};

/// Summary numbers of one correlation series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetrics {
    pub name: String,
    pub envelope_first_half: f64,
    /// Mean of `|F|` local maxima over the second half of the grid.
    pub envelope: f64,
    pub max_imag: f64,
    pub dominant_frequency: Option<f64>,
    pub peak_frequency: Option<f64>,
    pub spectral_entropy: Option<f64>,
}

fn series_metrics(name: &str, s: &CorrelationSeries, spec: Option<&SpectrumSeries>) -> SeriesMetrics {
    SeriesMetrics {
        name: name.to_string(),
        envelope_first_half: envelope_metric(s, 0.0, 0.5),
        envelope: envelope_metric(s, 0.5, 1.0),
        max_imag: s.max_imag(),
        dominant_frequency: spec.map(dominant_frequency),
        peak_frequency: spec.map(peak_frequency),
        spectral_entropy: spec.map(spectral_entropy),
    }
}

/// Runs `cfg` into `cfg.output_dir` and writes the manifest last.
pub fn run_experiment(cfg: &ExperimentConfig, force: bool) -> Result<RunManifest> {
    cfg.validate()?;
    let dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| anyhow!("no output directory (set output_dir or pass --out)"))?;
    prepare_output_dir(&dir, force)?;
    let start = Instant::now();
    match cfg.experiment {
        ExperimentKind::Autocorr => {
            correlation_run(cfg, &dir, false)?;
        }
        ExperimentKind::Spectrum => {
            correlation_run(cfg, &dir, true)?;
        }
        ExperimentKind::Lbit => lbit_run(cfg, &dir)?,
        ExperimentKind::Gates => gates_run(cfg, &dir)?,
        ExperimentKind::Verify => {
            verify::verify_run(cfg, &dir)?;
        }
        ExperimentKind::Sweep => {
            sweep::sweep_points(cfg, &dir)?;
        }
    }
    let mut echo = cfg.clone();
    echo.output_dir = None;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: echo.seed(),
        config: echo,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: collect_files(&dir)?,
    };
    write_manifest(&dir, &manifest)?;
    Ok(manifest)
}

/// Sweeps are ordinary runs of a sweep config.
pub fn run_sweep(cfg: &ExperimentConfig, force: bool) -> Result<RunManifest> {
    if cfg.experiment != ExperimentKind::Sweep {
        return Err(anyhow!("run_sweep needs a sweep experiment, got '{}'", cfg.experiment));
    }
    run_experiment(cfg, force)
}

pub(crate) fn model_and_hamiltonian(cfg: &ExperimentConfig) -> Result<(ModelParams, SparseOperator)> {
    let mut params = cfg.params.model()?;
    params.spec = cfg.operating_spec()?;
    let h = match cfg.hamiltonian {
        HamiltonianKind::Full => build_full(&params),
        HamiltonianKind::System => build_system(&params),
        HamiltonianKind::Effective => build_effective(&params),
    }
    .context("building the Hamiltonian")?;
    Ok((params, h))
}

fn method_json(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(cfg.method).expect("method serializes")
}

/// Autocorrelation (and optionally spectrum) files for every observable.
pub(crate) fn correlation_run(cfg: &ExperimentConfig, dir: &Path, with_spectrum: bool) -> Result<Vec<SeriesMetrics>> {
    let (params, h) = model_and_hamiltonian(cfg)?;
    let spec = params.spec;
    let grid = cfg.grid()?;
    let times = uniform_grid(grid.dt, grid.t_max)?;
    let ctx = SiteContext::new(spec.n_sites);
    let ops: Vec<(SparseOperator, SparseOperator)> = cfg
        .observables
        .iter()
        .map(|o| Ok((build_operator(&o.q, &spec, &ctx)?, build_operator(&o.b, &spec, &ctx)?)))
        .collect::<Result<_>>()?;

    let series: Vec<CorrelationSeries> = match cfg.method {
        MethodConfig::Exact => {
            require_memory(dense_bytes(h.dim(), 4), "exact diagonalization")?;
            let eig = dense_eig(&h)?;
            ops.iter()
                .zip(&cfg.observables)
                .map(|((q, b), o)| Ok(fluctuation_exact(q, b, &eig, &times)?.with_observable(o.name.clone())))
                .collect::<Result<_>>()?
        }
        MethodConfig::Typicality { samples, seed } => {
            let kp = cfg.krylov.unwrap_or_default();
            let mut out: Vec<Option<CorrelationSeries>> = vec![None; ops.len()];
            // observables sharing B reuse the same propagated states
            let mut done = vec![false; ops.len()];
            for i in 0..ops.len() {
                if done[i] {
                    continue;
                }
                let group: Vec<usize> = (i..ops.len())
                    .filter(|&k| !done[k] && cfg.observables[k].b == cfg.observables[i].b)
                    .collect();
                let qs: Vec<&SparseOperator> = group.iter().map(|&k| &ops[k].0).collect();
                let res = fluctuation_typicality_many(&qs, &ops[i].1, &h, &times, samples, seed, &kp)?;
                for (k, s) in group.into_iter().zip(res) {
                    done[k] = true;
                    out[k] = Some(s.with_observable(cfg.observables[k].name.clone()));
                }
            }
            out.into_iter().map(|s| s.expect("every observable computed")).collect()
        }
    };

    let window = cfg.spectrum.unwrap_or_default().window;
    let mut metrics = Vec::new();
    let mut obs_meta = Vec::new();
    for (o, s) in cfg.observables.iter().zip(&series) {
        let file = format!("autocorr_{}.csv", o.name);
        write_series(&dir.join(&file), s)?;
        let sp = if with_spectrum {
            let sp = spectrum(s, window)?;
            write_spectrum(&dir.join(format!("spectrum_{}.csv", o.name)), &sp)?;
            Some(sp)
        } else {
            None
        };
        let m = series_metrics(&o.name, s, sp.as_ref());
        obs_meta.push(json!({
            "name": o.name,
            "q": o.q,
            "b": o.b,
            "file": file,
            "spectrum_file": sp.as_ref().map(|_| format!("spectrum_{}.csv", o.name)),
            "value_at_zero": [s.values[0].re, s.values[0].im],
            "metrics": m,
        }));
        metrics.push(m);
    }
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "label": cfg.label,
        "params": cfg.params,
        "hamiltonian": cfg.hamiltonian,
        "dim": h.dim(),
        "method": method_json(cfg),
        "krylov": match cfg.method {
            MethodConfig::Typicality { .. } => Some(cfg.krylov.unwrap_or_default()),
            MethodConfig::Exact => None::<KrylovParams>,
        },
        "grid": { "dt": grid.dt, "t_max": grid.t_max, "points": times.len() },
        "spectrum_window": if with_spectrum { Some(window) } else { None },
        "csv_columns": { "autocorr": ["t", "re", "im", "stderr (typicality only)"], "spectrum": ["omega", "magnitude"] },
        "observables": obs_meta,
    });
    write_json(&dir.join("meta.json"), &meta)?;

    let mut plot = String::from(PLOT_HEADER);
    let title = cfg.label.clone().unwrap_or_else(|| cfg.experiment.to_string());
    if with_spectrum {
        plot.push_str("set multiplot layout 2,1\n");
    }
    plot.push_str(&format!("set title '{title}'\nset xlabel 't J'\nset ylabel 'Re F_{{QB}}(t)'\n"));
    let entries: Vec<(String, usize, String)> = cfg
        .observables
        .iter()
        .map(|o| (format!("autocorr_{}.csv", o.name), 2, o.name.clone()))
        .collect();
    plot.push_str(&plot_lines(&entries));
    if with_spectrum {
        plot.push_str("set title ''\nset xlabel 'omega / J'\nset ylabel '|Phi[F](omega)|'\n");
        let entries: Vec<(String, usize, String)> = cfg
            .observables
            .iter()
            .map(|o| (format!("spectrum_{}.csv", o.name), 2, o.name.clone()))
            .collect();
        plot.push_str(&plot_lines(&entries));
        plot.push_str("unset multiplot\n");
    }
    write_text(&dir.join("plot.gp"), &plot)?;
    Ok(metrics)
}

/// `‖[H, τ] - ωτ‖_F / ‖τ‖_F` from the eigenbasis matrix.
fn tau_residual(tau: &Tau, energies: &[f64]) -> f64 {
    let n = energies.len();
    let mut num2 = 0.0;
    let mut den2 = 0.0;
    for c in 0..n {
        for r in 0..n {
            let a = tau.eigen[(r, c)].norm_sqr();
            let d = energies[r] - energies[c] - tau.omega;
            num2 += d * d * a;
            den2 += a;
        }
    }
    (num2 / den2).sqrt()
}

fn lbit_run(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let lb = cfg.lbit.as_ref().expect("validated");
    let (params, h) = model_and_hamiltonian(cfg)?;
    let spec: SpaceSpec = params.spec;
    let grid = cfg.grid()?;
    let times = uniform_grid(grid.dt, grid.t_max)?;
    let ctx = SiteContext::new(spec.n_sites);
    require_memory(dense_bytes(h.dim(), 4), "l-bit construction")?;
    let eig = dense_eig(&h)?;
    let window = cfg.spectrum.unwrap_or_default().window;
    let bin = 2.0 * PI / (times.len() as f64 * grid.dt);

    let mut seeds_meta = Vec::new();
    let mut plot_profile = Vec::new();
    let mut plot_corr = Vec::new();
    let mut plot_spec = Vec::new();
    for sc in &lb.seeds {
        let site = ctx.resolve(&sc.site)?;
        let seed = build_seed(sc.k, site, &params)?;
        let tag = format!("A{}_{}", sc.k, site);
        let tau = construct_tau(&seed, &eig, lb.horizon)?;
        let residual = tau_residual(&tau, &eig.energies);

        let reduced = tau.spin_reduced(&eig, &spec)?;
        let mut profile = spin_locality_profile(&reduced, spec.n_sites)?;
        if spec.has_phonons() {
            profile.method = ProfileMethod::PhononTraced;
        }
        let profile_file = format!("lbit_{tag}_profile.csv");
        write_csv(
            &dir.join(&profile_file),
            &["site", "weight"],
            profile
                .weights
                .iter()
                .enumerate()
                .map(|(i, w)| vec![(i + 1).to_string(), num(*w)]),
        )?;

        let corr = if lb.partner == "tau_dag" {
            tau.autocorrelation(&eig.energies, &times)?
        } else {
            let b = build_operator(&lb.partner, &spec, &ctx.with_seed(site))?;
            tau.correlation_with(&b, &eig, &times, &format!("tau,{}", lb.partner))?
        };
        let sp = spectrum(&corr, window)?;
        let corr_file = format!("lbit_{tag}_corr.csv");
        let spec_file = format!("lbit_{tag}_spectrum.csv");
        write_series(&dir.join(&corr_file), &corr)?;
        write_spectrum(&dir.join(&spec_file), &sp)?;
        let dom = dominant_frequency(&sp);
        seeds_meta.push(json!({
            "seed": tag,
            "k": sc.k,
            "site": site,
            "omega": seed.freq,
            "horizon": lb.horizon,
            "partner": lb.partner,
            "eigenoperator_residual": residual,
            "raw_norm": tau.raw_norm,
            "seed_norm": tau.seed_norm,
            "profile": {
                "file": profile_file,
                "method": profile.method,
                "weights": profile.weights,
                "peak_site": profile.peak_site(),
                "neighbourhood_weight": profile.weight_on(site.saturating_sub(1), site + 1),
                "identity_weight": profile.identity_weight,
                "normalization": profile.normalization,
            },
            "correlation_file": corr_file,
            "spectrum_file": spec_file,
            "dominant_frequency": dom,
            "dominant_offset_bins": (dom - seed.freq.abs()) / bin,
            "spectral_entropy": spectral_entropy(&sp),
        }));
        plot_profile.push((profile_file, 2, tag.clone()));
        plot_corr.push((corr_file, 2, tag.clone()));
        plot_spec.push((spec_file, 2, tag));
    }
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "label": cfg.label,
        "params": cfg.params,
        "hamiltonian": cfg.hamiltonian,
        "dim": h.dim(),
        "grid": { "dt": grid.dt, "t_max": grid.t_max, "points": times.len() },
        "dft_bin": bin,
        "spectrum_window": window,
        "csv_columns": { "profile": ["site", "weight"], "correlation": ["t", "re", "im"], "spectrum": ["omega", "magnitude"] },
        "seeds": seeds_meta,
    });
    write_json(&dir.join("meta.json"), &meta)?;

    let mut plot = String::from(PLOT_HEADER);
    plot.push_str("set multiplot layout 3,1\nset xlabel 'site'\nset ylabel 'weight'\nset style data linespoints\n");
    plot.push_str(&plot_lines(&plot_profile).replace("with lines", "with linespoints"));
    plot.push_str("set xlabel 't J'\nset ylabel 'Re F_{tau B}(t)'\n");
    plot.push_str(&plot_lines(&plot_corr));
    plot.push_str("set xlabel 'omega / J'\nset ylabel '|Phi[F](omega)|'\n");
    plot.push_str(&plot_lines(&plot_spec));
    plot.push_str("unset multiplot\n");
    write_text(&dir.join("plot.gp"), &plot)?;
    Ok(())
}

fn gates_run(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let g = cfg.gates.as_ref().expect("validated");
    let mut params = cfg.params.model()?;
    params.spec = params.spec.spin_only();
    let spec = params.spec;
    let ctx = SiteContext::new(spec.n_sites);
    let j = ctx.resolve(&g.site)?;
    let grid = cfg.grid()?;
    let times = uniform_grid(grid.dt, grid.t_max)?;
    require_memory(dense_bytes(spec.dim(), 8), "gate experiments")?;

    let su2 = verify_su2(j, &spec)?;
    let rz = gate_rot_z(&params, j, g.rot_z_time)?;
    let is = gate_ising(&params, j, g.ising_time)?;
    let rx = gate_rot_x(&params, j, &times)?;
    write_csv(
        &dir.join("rotx.csv"),
        &["t", "sigma_y_overlap", "charge_overlap", "quality"],
        (0..rx.times.len()).map(|k| {
            vec![
                num(rx.times[k]),
                num(rx.sigma_y_overlap[k]),
                num(rx.charge_overlap[k]),
                num(rx.quality[k]),
            ]
        }),
    )?;
    let cnot = if g.cnot {
        let c = compose_cnot(&params, j, Some(rx.calibrated_duration))?;
        Some(json!({
            "control": c.control,
            "target": c.target,
            "schedule": c.schedule,
            "logical_states": c.logical.states,
            "sector_dims": c.logical.sector_dims,
            "fidelity": c.fidelity,
            "global_phase": c.global_phase,
            "leakage": c.leakage,
            "unitarity": c.unitarity,
        }))
    } else {
        None
    };
    let mut plot = String::from(PLOT_HEADER);
    let recovery = match &g.error {
        Some(e) => {
            let inj = ErrorInjection {
                error_op: build_operator(&e.op, &spec, &ctx)?,
                amplitude: e.amplitude,
                window: (e.window[0], e.window[1]),
            };
            let r = run_error_recovery(&params, &inj, j, &times)?;
            write_csv(
                &dir.join("recovery.csv"),
                &["t", "abs_c", "re_c"],
                (0..r.times.len()).map(|k| vec![num(r.times[k]), num(r.abs_c[k]), num(r.re_c[k])]),
            )?;
            Some(json!({
                "error_op": e.op,
                "amplitude": e.amplitude,
                "window": e.window,
                "class": r.class,
                "commutator_norm": r.commutator_norm,
                "window_min": r.window_min,
                "plateau": r.plateau,
                "degradation": r.degradation,
            }))
        }
        None => None,
    };
    if recovery.is_some() {
        plot.push_str("set multiplot layout 2,1\n");
    }
    plot.push_str("set xlabel 't'\nset ylabel 'overlap'\n");
    plot.push_str(&plot_lines(&[
        ("rotx.csv".into(), 2, "Sigma^y overlap".into()),
        ("rotx.csv".into(), 3, "charge overlap".into()),
    ]));
    if recovery.is_some() {
        plot.push_str("set ylabel '|c(t)|'\n");
        plot.push_str(&plot_lines(&[("recovery.csv".into(), 2, "|c|".into())]));
        plot.push_str("unset multiplot\n");
    }
    write_text(&dir.join("plot.gp"), &plot)?;

    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "label": cfg.label,
        "params": cfg.params,
        "site": j,
        "su2": su2,
        "rot_z": {
            "t": rz.t,
            "phase_deviation": rz.phase_deviation,
            "charge_deviation": rz.charge_deviation,
            "unitarity": rz.unitarity,
        },
        "ising": {
            "t": is.t,
            "sites": is.sites,
            "commutator_residual": is.commutator_residual,
            "charge_commutator": is.charge_commutator,
            "generator_hermiticity": is.generator_hermiticity,
            "unitarity": is.unitarity,
        },
        "rot_x": {
            "file": "rotx.csv",
            "calibrated_duration": rx.calibrated_duration,
            "peak_quality": rx.peak_quality,
            "unitarity": rx.unitarity,
        },
        "cnot": cnot,
        "recovery": recovery,
    });
    write_json(&dir.join("meta.json"), &meta)?;
    Ok(())
}
