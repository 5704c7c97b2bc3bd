//! Acceptance criteria. One line per criterion; exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{ensure, Result};
use serde_json::Value;
use starkmbl::correlation::{fluctuation_exact, fluctuation_typicality, random_state, uniform_grid};
use starkmbl::gates::{gate_ising, gate_rot_z, run_error_recovery, verify_su2, ErrorInjection};
use starkmbl::hamiltonians::{
    build_effective, build_full, build_spin32_sector, restrict_to_spin32_sector,
    verify_polaron_decoupling, verify_tilt_commutators, ModelParams,
};
use starkmbl::hilbert::{spin_op, SpinKind};
use starkmbl::lbits::{all_seeds, eigenoperator_residual, seed_operator, spin32_frequencies};
use starkmbl::propagation::{dense_eig, evolve_state, KrylovParams};
use starkmbl::{SpaceSpec, SparseOperator, C64};
use starkmbl_cli::config::{GridConfig, MethodConfig, ObservableConfig, SweepAxis, SweepConfig};
use starkmbl_cli::sweep::{read_summary, SummaryRow};
use starkmbl_cli::{preset, run_experiment, run_sweep, ExperimentConfig, ExperimentKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(id: &str, name: &str, limit_s: Option<f64>, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let r = f();
    let secs = start.elapsed().as_secs_f64();
    let (mut pass, mut detail) = match r {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e:#}")),
    };
    let timing = match limit_s {
        Some(l) => {
            if secs >= l {
                pass = false;
            }
            format!("{secs:.1} s, limit {l} s")
        }
        None => format!("{secs:.1} s"),
    };
    detail.push_str(&format!(" [{timing}]"));
    println!("{} {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn spin_chain(n: usize, w: f64) -> ModelParams {
    ModelParams::new(SpaceSpec::new(n, 2, 0).unwrap()).with_tilt(w)
}

fn phonon_model(n: usize, n_b: usize, w: f64, omega0: f64, lambda0: f64) -> ModelParams {
    ModelParams::new(SpaceSpec::new(n, 2, n_b).unwrap())
        .with_tilt(w)
        .with_phonons(omega0, lambda0)
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn eigenoperators() -> Result<Outcome> {
    let p = spin_chain(6, 10.0);
    let h = build_effective(&p)?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for s in all_seeds(&p)? {
        let base = 10.0 * s.site as f64;
        let expected = [base, base, base + 1.0, base - 1.0][s.k - 1];
        ensure!(s.freq == expected, "A{}({}) has frequency {}", s.k, s.site, s.freq);
        worst = worst.max(eigenoperator_residual(&h, &s.op, expected)?);
        count += 1;
    }
    ensure!(count == 16, "expected 16 seeds, found {count}");
    Ok(outcome(worst < 1e-10, format!("{count} seeds, max residual {:.2e} (tol 1e-10)", worst.abs())))
}

fn su2_constants() -> Result<Outcome> {
    let spec = SpaceSpec::new(4, 2, 0)?;
    let mut worst: f64 = 0.0;
    let mut kappas = Vec::new();
    for j in 2..4 {
        let r = verify_su2(j, &spec)?;
        worst = worst.max(r.residual_minus).max(r.residual_plus);
        kappas.push(format!("{:.6}", r.kappa));
    }
    Ok(outcome(
        worst < 1e-10,
        format!(
            "max of |[Q2,A2]+8A2|, |[Q2,A2^dag]-8A2^dag| = {worst:.3e} (tol 1e-10); fitted kappa = [{}]",
            kappas.join(", ")
        ),
    ))
}

fn tilt_and_polaron() -> Result<Outcome> {
    let p = phonon_model(3, 2, 10.0, 3.0, 1.0);
    let tilt = verify_tilt_commutators(&p)?;
    let single = phonon_model(1, 8, 10.0, 3.0, 1.0);
    let pol = verify_polaron_decoupling(&single)?;
    let expected = -pol.g / 4.0;
    let shift = (pol.ground_energy - expected).abs();
    Ok(outcome(
        tilt.max() < 1e-10 && shift < 1e-6,
        format!(
            "{} tilt residuals, max {:.2e} (tol 1e-10); ground energy {:.9} vs -g/4 = {:.9}, diff {shift:.2e} (tol 1e-6)",
            tilt.entries.len(),
            tilt.max().abs(),
            pol.ground_energy,
            expected
        ),
    ))
}

fn trace_point() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (p, full) in [
        (spin_chain(5, 6.0), false),
        (phonon_model(3, 2, 6.0, 3.0, 1.0), true),
    ] {
        let h = if full { build_full(&p)? } else { build_effective(&p)? };
        let eig = dense_eig(&h)?;
        for j in 1..=p.spec.n_sites {
            let sx = spin_op(&p.spec, j, SpinKind::Sx)?;
            let f = fluctuation_exact(&sx, &sx, &eig, &[0.0])?;
            worst = worst.max((f.values[0] - C64::new(0.25, 0.0)).norm());
        }
    }
    Ok(outcome(worst < 1e-12, format!("max |F(0) - 0.25| = {worst:.2e} (tol 1e-12)")))
}

fn backends() -> Result<Outcome> {
    let p = phonon_model(5, 2, 6.0, 3.0, 1.0);
    let h = build_full(&p)?;
    ensure!(h.dim() == 1024, "dimension {}", h.dim());
    let eig = dense_eig(&h)?;
    let kp = KrylovParams::default();
    let psi = random_state(h.dim(), 11, 0);
    let a = evolve_state(&h, &psi, 10.0, &kp)?;
    let b = eig.evolve(&psi, 10.0);
    let dist = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();

    let sx = spin_op(&p.spec, 3, SpinKind::Sx)?;
    let times = uniform_grid(0.5, 10.0)?;
    let exact = fluctuation_exact(&sx, &sx, &eig, &times)?;
    let typ = fluctuation_typicality(&sx, &sx, &h, &times, 64, 1, &kp)?;
    let se = typ.std_error.as_ref().expect("typicality reports errors");
    let worst_z = (0..times.len())
        .map(|k| (typ.values[k] - exact.values[k]).norm() / se[k])
        .fold(0.0, f64::max);
    Ok(outcome(
        dist < 1e-8 && worst_z <= 3.0,
        format!(
            "Krylov vs dense at t=10: {dist:.2e} (tol 1e-8); typicality R=64 on dim 1024: max |dev|/SE = {worst_z:.2} over {} times (tol 3)",
            times.len()
        ),
    ))
}

fn amplitude(m: &Value) -> (f64, f64) {
    (
        m["envelope_first_half"].as_f64().unwrap_or(f64::NAN),
        m["envelope"].as_f64().unwrap_or(f64::NAN),
    )
}

fn fig2_phenomenology(root: &Path) -> Result<Outcome> {
    let mut cfg = preset("fig2a").expect("preset exists");
    cfg.output_dir = Some(root.join("fig2a"));
    run_experiment(&cfg, false)?;
    let meta = read_json(&root.join("fig2a/meta.json"))?;
    let obs = meta["observables"].as_array().expect("observables");
    let find = |name: &str| obs.iter().find(|o| o["name"] == name).map(|o| amplitude(&o["metrics"]));
    let (sx1, sx2) = find("Sx").expect("Sx observable");
    let (z1, z2) = find("SzSp").expect("SzSp observable");
    let persistence = sx2 / sx1;
    let ratio = z1.max(z2) / sx1.max(sx2);
    Ok(outcome(
        persistence >= 0.5 && ratio <= 0.5,
        format!(
            "Sx envelope {sx1:.4} -> {sx2:.4} (ratio {persistence:.3}, need >= 0.5); three-spin/Sx amplitude {ratio:.3} (need <= 0.5)"
        ),
    ))
}

fn fig3_phenomenology(root: &Path) -> Result<Outcome> {
    let mut cfg = preset("fig3_5dot").expect("preset exists");
    ensure!(cfg.params.n_sites == 5 && cfg.params.boson_levels == 3 && cfg.params.w == 10.0);
    let lb = cfg.lbit.as_mut().expect("lbit section");
    ensure!(lb.horizon == 100.0);
    lb.seeds.retain(|s| s.k == 1);
    cfg.output_dir = Some(root.join("fig3"));
    run_experiment(&cfg, false)?;
    let meta = read_json(&root.join("fig3/meta.json"))?;
    let s = &meta["seeds"][0];
    ensure!(s["k"] == 1 && s["site"] == 3, "unexpected seed {}", s["seed"]);
    let peak = s["profile"]["peak_site"].as_u64().unwrap_or(0);
    let near = s["profile"]["neighbourhood_weight"].as_f64().unwrap_or(0.0);
    let dom = s["dominant_frequency"].as_f64().unwrap_or(f64::NAN);
    let bin = meta["dft_bin"].as_f64().unwrap_or(f64::NAN);
    let off = (dom - 30.0).abs() / bin;
    Ok(outcome(
        peak == 3 && near >= 0.5 && off <= 1.0,
        format!(
            "profile peak at site {peak} (need 3), weight on 2..4 = {near:.3} (need >= 0.5); dominant frequency {dom:.3}, {off:.2} bins from 30 (bin {bin:.4}, need <= 1)"
        ),
    ))
}

fn sweep_base(root: &Path, name: &str, axis: SweepAxis, values: Vec<f64>) -> ExperimentConfig {
    let mut c = preset("fig2a").expect("preset exists");
    c.experiment = ExperimentKind::Sweep;
    c.label = Some(name.to_string());
    c.params.n_sites = 5;
    c.params.boson_levels = 3;
    c.method = MethodConfig::Exact;
    c.grid = Some(GridConfig { dt: 0.05, t_max: 20.0 });
    c.observables = vec![ObservableConfig {
        name: "Sx".into(),
        q: "Sx@c".into(),
        b: "Sx@c".into(),
    }];
    c.sweep = Some(SweepConfig {
        axis,
        values,
        workers: 1,
    });
    c.output_dir = Some(root.join(name));
    c
}

fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    run_sweep(cfg, false)?;
    let rows = read_summary(&cfg.output_dir.as_ref().unwrap().join("summary.csv"))?;
    ensure!(rows.iter().all(|r| r.status == "ok"), "a sweep point failed");
    Ok(rows)
}

fn monotonicities(root: &Path) -> Result<Outcome> {
    let mut w = sweep_base(root, "sweep_w", SweepAxis::W, vec![3.0, 6.0]);
    w.params.omega0 = 1.0;
    let wr = sweep_rows(&w)?;
    let f: Vec<f64> = wr.iter().map(|r| r.dominant_frequency.unwrap_or(f64::NAN)).collect();
    let w_ok = f[1] > f[0];

    let mut l = sweep_base(root, "sweep_lambda", SweepAxis::Lambda0, vec![1.0 / 3.0, 1.0, 3.0]);
    l.params.w = 3.0;
    l.params.omega0 = 1.0;
    let lr = sweep_rows(&l)?;
    let s: Vec<f64> = lr.iter().map(|r| r.spectral_entropy.unwrap_or(f64::NAN)).collect();
    let l_ok = s[2] >= 1.1 * s[0].max(s[1]);

    let mut o = sweep_base(root, "sweep_omega", SweepAxis::Omega0, vec![1.0 / 3.0, 1.0, 3.0]);
    o.params.w = 6.0;
    let or = sweep_rows(&o)?;
    let e: Vec<f64> = or.iter().map(|r| r.envelope.unwrap_or(f64::NAN)).collect();
    let o_ok = e.windows(2).all(|p| p[1] >= p[0]);

    Ok(outcome(
        w_ok && l_ok && o_ok,
        format!(
            "W {{3,6}} at omega0=1: dominant {:.3} -> {:.3} ({}); lambda0 {{1/3,1,3}} at W=3, omega0=1: entropy {:.3}, {:.3}, {:.3} ({}); omega0 {{1/3,1,3}} at W=6: envelope {:.4}, {:.4}, {:.4} ({})",
            f[0], f[1], ok(w_ok), s[0], s[1], s[2], ok(l_ok), e[0], e[1], e[2], ok(o_ok)
        ),
    ))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

fn spin32() -> Result<Outcome> {
    let p = ModelParams::new(SpaceSpec::new(4, 4, 0)?)
        .with_tilt(10.0)
        .with_phonons(3.0, 1.0);
    let sector = build_spin32_sector(&p)?;
    let oracle = restrict_to_spin32_sector(&build_effective(&p)?, &p.spec)?;
    let mapped = sector
        .hamiltonian
        .checked_add(&SparseOperator::identity(sector.hamiltonian.dim()).scale_re(sector.constant))?;
    let diff = oracle.max_abs_diff(&mapped);

    let mut worst: f64 = 0.0;
    for j in 2..4 {
        let freqs = spin32_frequencies(&p, j)?;
        for k in 1..=4 {
            let a = seed_operator(k, j, &sector.pseudo_spec)?;
            worst = worst.max(eigenoperator_residual(&sector.hamiltonian, &a, freqs[k - 1])?);
        }
    }
    Ok(outcome(
        diff < 1e-12 && worst < 1e-10,
        format!(
            "sector vs substitution oracle {diff:.2e} (tol 1e-12); quoted frequencies shifted by -g: max residual {worst:.3} (tol 1e-10)"
        ),
    ))
}

fn gates() -> Result<Outcome> {
    let p = spin_chain(6, 10.0);
    let rz = gate_rot_z(&p, 3, 0.3)?;
    let phase = rz.phase_deviation.iter().copied().fold(0.0, f64::max);
    let ising = gate_ising(&p, 3, 0.7)?;

    let times = uniform_grid(0.05, 10.0)?;
    let injection = |spec: &SpaceSpec, amplitude: f64| -> Result<ErrorInjection> {
        Ok(ErrorInjection {
            error_op: spin_op(spec, 3, SpinKind::Sx)?,
            amplitude,
            window: (5.0, 6.0),
        })
    };
    let quiet = run_error_recovery(&p, &injection(&p.spec, 0.0)?, 3, &times)?;
    let flat = quiet.abs_c.iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max);
    let mut degr = Vec::new();
    for w in [5.0, 10.0, 20.0] {
        let q = spin_chain(6, w);
        degr.push(run_error_recovery(&q, &injection(&q.spec, 0.2)?, 3, &times)?.degradation);
    }
    let mono = degr.windows(2).all(|d| d[1] < d[0]);
    Ok(outcome(
        phase < 1e-10 && ising.commutator_residual < 1e-10 && flat < 1e-10 && mono,
        format!(
            "rot_z phase law {phase:.2e}; ising commutator {:.2e}; eps=0 max ||c|-1| {flat:.2e} (tol 1e-10 each); degradation at W=5,10,20: {:.3e}, {:.3e}, {:.3e} ({})",
            ising.commutator_residual.abs(),
            degr[0],
            degr[1],
            degr[2],
            ok(mono)
        ),
    ))
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temporary directory");
    let root = root.path();
    let results = [
        criterion("1", "eigenoperator identities (N=6, W=10)", Some(10.0), eigenoperators),
        criterion("2", "SU(2) structure constant 8 (N=4)", Some(1.0), su2_constants),
        criterion("3", "tilt commutators and polaron shift", Some(5.0), tilt_and_polaron),
        criterion("4", "trace point F(0) = 1/4", None, trace_point),
        criterion("5", "backend equivalence", Some(120.0), backends),
        criterion("6", "fig2a persistent oscillations", None, || fig2_phenomenology(root)),
        criterion("7", "l-bit locality and spectrum (N=5, N_B=3)", Some(1800.0), || {
            fig3_phenomenology(root)
        }),
        criterion("8", "sweep monotonicities (N=5, N_B=3)", None, || monotonicities(root)),
        criterion("9", "spin-3/2 sector", None, spin32),
        criterion("10", "gates and error recovery (N=6)", None, gates),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
