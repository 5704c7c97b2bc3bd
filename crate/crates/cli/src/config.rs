//! Experiment configuration: a strict JSON schema plus the built-in presets.

use std::fmt;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use starkmbl::correlation::Window;
use starkmbl::hamiltonians::ModelParams;
use starkmbl::hilbert::{spin_op, SpinKind};
use starkmbl::propagation::KrylovParams;
use starkmbl::{SpaceSpec, SparseOperator};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Autocorr,
    Spectrum,
    Lbit,
    Gates,
    Sweep,
    Verify,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Autocorr => "autocorr",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Lbit => "lbit",
            ExperimentKind::Gates => "gates",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Verify => "verify",
        };
        f.write_str(s)
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

/// Flat model parameters in units of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n_sites: usize,
    #[serde(default = "two")]
    pub spin_levels: usize,
    #[serde(default)]
    pub boson_levels: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default)]
    pub w: f64,
    #[serde(default = "one")]
    pub omega0: f64,
    #[serde(default)]
    pub lambda_perp: f64,
    #[serde(default)]
    pub lambda_par: f64,
}

impl ParamsConfig {
    pub fn spec(&self) -> Result<SpaceSpec> {
        Ok(SpaceSpec::new(self.n_sites, self.spin_levels, self.boson_levels)?)
    }

    pub fn model(&self) -> Result<ModelParams> {
        let p = ModelParams {
            j: self.j,
            delta: self.delta,
            w: self.w,
            omega0: self.omega0,
            lambda_perp: self.lambda_perp,
            lambda_par: self.lambda_par,
            spec: self.spec()?,
        };
        p.validate()?;
        Ok(p)
    }

    /// Site `r/2` with `r = N + 1`.
    pub fn center(&self) -> usize {
        (self.n_sites + 1) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// Spin chain plus phonons.
    #[default]
    Full,
    /// Spin chain alone (padded with the phonon identity).
    System,
    /// Effective Ising model on the spin-only space.
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dt: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    #[default]
    Exact,
    Typicality { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    /// Used in output file names.
    pub name: String,
    pub q: String,
    pub b: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "default_window")]
    pub window: Window,
}

fn default_window() -> Window {
    Window::Hann
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    /// Seed family `A_k`, `k = 1..=4`.
    pub k: usize,
    /// Site expression, e.g. `"c"` or `"3"`.
    pub site: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LbitConfig {
    pub seeds: Vec<SeedConfig>,
    /// Filter horizon `T`.
    pub horizon: f64,
    /// Operator `B` of `F_τB`; `j` stands for the seed site. `"tau_dag"`
    /// selects `B = τ^dag`.
    #[serde(default = "default_partner")]
    pub partner: String,
}

fn default_partner() -> String {
    "Sx@j".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorConfig {
    pub op: String,
    pub amplitude: f64,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesConfig {
    /// Control site; the target is the next site.
    pub site: String,
    pub rot_z_time: f64,
    pub ising_time: f64,
    #[serde(default)]
    pub cnot: bool,
    #[serde(default)]
    pub error: Option<ErrorConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    W,
    Omega0,
    Lambda0,
    N,
    NB,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepAxis::W => "w",
            SweepAxis::Omega0 => "omega0",
            SweepAxis::Lambda0 => "lambda0",
            SweepAxis::N => "n",
            SweepAxis::NB => "n_b",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl SweepAxis {
    /// `base` with this axis set to `v`.
    pub fn apply(&self, base: &ParamsConfig, v: f64) -> Result<ParamsConfig> {
        let mut p = *base;
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v < 1e6 {
                Ok(v as usize)
            } else {
                Err(anyhow!("sweep value {v} for axis {self} is not a count"))
            }
        };
        match self {
            SweepAxis::W => p.w = v,
            SweepAxis::Omega0 => p.omega0 = v,
            SweepAxis::Lambda0 => {
                p.lambda_perp = v;
                p.lambda_par = v;
            }
            SweepAxis::N => p.n_sites = as_count(v)?,
            SweepAxis::NB => p.boson_levels = as_count(v)?,
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub params: ParamsConfig,
    #[serde(default)]
    pub hamiltonian: HamiltonianKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub krylov: Option<KrylovParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lbit: Option<LbitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<GatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("malformed config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn seed(&self) -> Option<u64> {
        match self.method {
            MethodConfig::Typicality { seed, .. } => Some(seed),
            MethodConfig::Exact => None,
        }
    }

    pub fn set_seed(&mut self, s: u64) {
        if let MethodConfig::Typicality { seed, .. } = &mut self.method {
            *seed = s;
        }
    }

    pub fn grid(&self) -> Result<GridConfig> {
        self.grid
            .ok_or_else(|| anyhow!("experiment '{}' needs a grid section", self.experiment))
    }

    /// Spin-1/2 spec with the phonon factor dropped for the effective model.
    pub fn operating_spec(&self) -> Result<SpaceSpec> {
        let spec = self.params.spec()?;
        Ok(match self.hamiltonian {
            HamiltonianKind::Effective => spec.spin_only(),
            _ => spec,
        })
    }

    /// Checks every referenced field without building any operator.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        self.params.model().context("params")?;
        if let Some(g) = &self.grid {
            if !(g.dt > 0.0 && g.dt.is_finite() && g.t_max >= 0.0 && g.t_max.is_finite()) {
                bail!("grid needs dt > 0 and t_max >= 0");
            }
            if g.t_max / g.dt > 1e7 {
                bail!("grid has more than 10^7 points");
            }
        }
        if let MethodConfig::Typicality { samples, .. } = self.method {
            if samples == 0 {
                bail!("typicality needs at least one sample");
            }
        }
        if let Some(k) = &self.krylov {
            k.validate().context("krylov")?;
        }
        let sites = SiteContext::new(self.params.n_sites);
        match self.experiment {
            ExperimentKind::Autocorr | ExperimentKind::Spectrum => {
                self.grid()?;
                self.check_observables(&sites)?;
            }
            ExperimentKind::Sweep => {
                self.grid()?;
                self.check_observables(&sites)?;
                let sw = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| anyhow!("sweep experiment needs a sweep section"))?;
                if sw.values.is_empty() {
                    bail!("sweep needs at least one value");
                }
                if sw.workers == 0 {
                    bail!("sweep workers must be positive");
                }
                for &v in &sw.values {
                    let point = self.sweep_point(v)?;
                    point.validate().with_context(|| format!("sweep point {} = {v}", sw.axis))?;
                }
            }
            ExperimentKind::Lbit => {
                self.grid()?;
                let lb = self
                    .lbit
                    .as_ref()
                    .ok_or_else(|| anyhow!("lbit experiment needs an lbit section"))?;
                if lb.seeds.is_empty() {
                    bail!("lbit needs at least one seed");
                }
                if !(lb.horizon > 0.0 && lb.horizon.is_finite()) {
                    bail!("lbit horizon must be positive");
                }
                if self.params.spin_levels != 2 {
                    bail!("lbit seeds need spin_levels = 2");
                }
                for s in &lb.seeds {
                    if !(1..=4).contains(&s.k) {
                        bail!("seed k = {} outside 1..=4", s.k);
                    }
                    let site = sites.resolve(&s.site)?;
                    if site < 2 || site >= self.params.n_sites {
                        bail!("seed site {site} is not an interior site");
                    }
                    if lb.partner != "tau_dag" {
                        OperatorExpr::parse(&lb.partner)?.resolve_sites(&sites.with_seed(site))?;
                    }
                }
            }
            ExperimentKind::Gates => {
                self.grid()?;
                let g = self
                    .gates
                    .as_ref()
                    .ok_or_else(|| anyhow!("gates experiment needs a gates section"))?;
                if self.params.spin_levels != 2 {
                    bail!("gates need spin_levels = 2");
                }
                let site = sites.resolve(&g.site)?;
                if site < 2 || site + 2 > self.params.n_sites {
                    bail!("gate control site {site} needs interior sites {site} and {}", site + 1);
                }
                if !(g.rot_z_time.is_finite() && g.ising_time.is_finite()) {
                    bail!("gate times must be finite");
                }
                if let Some(e) = &g.error {
                    OperatorExpr::parse(&e.op)?.resolve_sites(&sites)?;
                    if !(e.amplitude.is_finite() && e.window[1] > e.window[0]) {
                        bail!("error window must satisfy t0 < t1 with a finite amplitude");
                    }
                }
            }
            ExperimentKind::Verify => {}
        }
        Ok(())
    }

    fn check_observables(&self, sites: &SiteContext) -> Result<()> {
        if self.observables.is_empty() {
            bail!("experiment '{}' needs at least one observable", self.experiment);
        }
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.observables {
            let ok = !o.name.is_empty()
                && o.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                bail!("observable name '{}' must be non-empty [A-Za-z0-9_-]", o.name);
            }
            if !seen.insert(o.name.clone()) {
                bail!("duplicate observable name '{}'", o.name);
            }
            OperatorExpr::parse(&o.q)?.resolve_sites(sites)?;
            OperatorExpr::parse(&o.b)?.resolve_sites(sites)?;
        }
        Ok(())
    }

    /// Configuration of one sweep point: a spectrum run on modified params.
    pub fn sweep_point(&self, v: f64) -> Result<ExperimentConfig> {
        let sw = self
            .sweep
            .as_ref()
            .ok_or_else(|| anyhow!("not a sweep config"))?;
        let mut c = self.clone();
        c.experiment = ExperimentKind::Spectrum;
        c.sweep = None;
        c.output_dir = None;
        c.params = sw.axis.apply(&self.params, v)?;
        Ok(c)
    }
}

/// Resolves site expressions: an integer, `c` (the center `(N+1)/2`),
/// `c+k`, `c-k`, and inside l-bit partners `j`, `j+k`, `j-k`.
#[derive(Debug, Clone, Copy)]
pub struct SiteContext {
    pub n_sites: usize,
    pub center: usize,
    pub seed_site: Option<usize>,
}

impl SiteContext {
    pub fn new(n_sites: usize) -> Self {
        SiteContext {
            n_sites,
            center: (n_sites + 1) / 2,
            seed_site: None,
        }
    }

    pub fn with_seed(mut self, site: usize) -> Self {
        self.seed_site = Some(site);
        self
    }

    pub fn resolve(&self, expr: &str) -> Result<usize> {
        let e = expr.trim();
        let (base, rest) = match e.chars().next() {
            Some('c') => (self.center as i64, &e[1..]),
            Some('j') => (
                self.seed_site
                    .ok_or_else(|| anyhow!("site '{e}': 'j' is only defined for l-bit partners"))?
                    as i64,
                &e[1..],
            ),
            _ => (0, e),
        };
        let site = if rest.is_empty() {
            base
        } else if base == 0 {
            rest.parse::<i64>().map_err(|_| anyhow!("bad site '{e}'"))?
        } else {
            let (sign, k) = match rest.as_bytes()[0] {
                b'+' => (1, &rest[1..]),
                b'-' => (-1, &rest[1..]),
                _ => bail!("bad site '{e}'"),
            };
            base + sign * k.parse::<i64>().map_err(|_| anyhow!("bad site '{e}'"))?
        };
        if site < 1 || site as usize > self.n_sites {
            bail!("site '{e}' = {site} outside 1..={}", self.n_sites);
        }
        Ok(site as usize)
    }
}

/// Product of single-site spin operators, `Sz@c-1*Sp@c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorExpr {
    pub factors: Vec<(SpinKind, String)>,
}

impl OperatorExpr {
    pub fn parse(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for part in s.split('*') {
            let (kind, site) = part
                .trim()
                .split_once('@')
                .ok_or_else(|| anyhow!("operator factor '{part}' must look like Sx@3"))?;
            let kind: SpinKind = kind.trim().parse()?;
            factors.push((kind, site.trim().to_string()));
        }
        if factors.is_empty() {
            bail!("empty operator expression");
        }
        Ok(OperatorExpr { factors })
    }

    pub fn resolve_sites(&self, ctx: &SiteContext) -> Result<Vec<(SpinKind, usize)>> {
        self.factors
            .iter()
            .map(|(k, s)| Ok((*k, ctx.resolve(s)?)))
            .collect()
    }

    pub fn build(&self, spec: &SpaceSpec, ctx: &SiteContext) -> Result<SparseOperator> {
        let mut op: Option<SparseOperator> = None;
        for (kind, site) in self.resolve_sites(ctx)? {
            let f = spin_op(spec, site, kind)?;
            op = Some(match op {
                None => f,
                Some(acc) => acc.checked_mul(&f)?,
            });
        }
        Ok(op.expect("non-empty expression"))
    }
}

/// Builds `expr` on `spec`.
pub fn build_operator(expr: &str, spec: &SpaceSpec, ctx: &SiteContext) -> Result<SparseOperator> {
    OperatorExpr::parse(expr)?
        .build(spec, ctx)
        .with_context(|| format!("operator '{expr}'"))
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2a", "transverse autocorrelation, N=7, N_B=3, W=6, typicality"),
    ("fig2b", "transverse autocorrelation, N=9, N_B=2, W=3, typicality"),
    ("fig3_7dot", "dressed l-bits A1, A4 at the center, N=7, N_B=2, W=10, T=100"),
    ("fig3_5dot", "dressed l-bits A1, A4 at the center, N=5, N_B=3, W=10, T=100"),
    ("gates", "l-bit gate experiments on the effective model, N=6, W=10"),
    ("verify", "operator identity checks, N=4, N_B=2, W=10"),
];

fn phonon_params(n: usize, n_b: usize, w: f64) -> ParamsConfig {
    ParamsConfig {
        n_sites: n,
        spin_levels: 2,
        boson_levels: n_b,
        j: 1.0,
        delta: 1.0,
        w,
        omega0: 3.0,
        lambda_perp: 1.0,
        lambda_par: 1.0,
    }
}

fn autocorr_preset(n: usize, n_b: usize, w: f64) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        experiment: ExperimentKind::Autocorr,
        label: None,
        params: phonon_params(n, n_b, w),
        hamiltonian: HamiltonianKind::Full,
        grid: Some(GridConfig { dt: 0.02, t_max: 20.0 }),
        method: MethodConfig::Typicality { samples: 2, seed: 1 },
        krylov: Some(KrylovParams {
            subspace_dim: 60,
            dt: 0.5,
            tolerance: 1e-7,
            max_steps: 1_000_000,
        }),
        observables: vec![
            ObservableConfig {
                name: "Sx".into(),
                q: "Sx@c".into(),
                b: "Sx@c".into(),
            },
            ObservableConfig {
                name: "SzSp".into(),
                q: "Sz@c-1*Sp@c".into(),
                b: "Sx@c".into(),
            },
        ],
        spectrum: None,
        lbit: None,
        gates: None,
        sweep: None,
        output_dir: None,
    }
}

fn lbit_preset(n: usize, n_b: usize) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        experiment: ExperimentKind::Lbit,
        label: None,
        params: phonon_params(n, n_b, 10.0),
        hamiltonian: HamiltonianKind::Full,
        grid: Some(GridConfig { dt: 0.05, t_max: 100.0 }),
        method: MethodConfig::Exact,
        krylov: None,
        observables: Vec::new(),
        spectrum: Some(SpectrumConfig::default()),
        lbit: Some(LbitConfig {
            seeds: vec![
                SeedConfig { k: 1, site: "c".into() },
                SeedConfig { k: 4, site: "c".into() },
            ],
            horizon: 100.0,
            partner: default_partner(),
        }),
        gates: None,
        sweep: None,
        output_dir: None,
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let mut cfg = match name {
        "fig2a" => autocorr_preset(7, 3, 6.0),
        "fig2b" => autocorr_preset(9, 2, 3.0),
        "fig3_7dot" => lbit_preset(7, 2),
        "fig3_5dot" => lbit_preset(5, 3),
        "gates" => ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment: ExperimentKind::Gates,
            label: None,
            params: ParamsConfig {
                n_sites: 6,
                spin_levels: 2,
                boson_levels: 0,
                j: 1.0,
                delta: 1.0,
                w: 10.0,
                omega0: 1.0,
                lambda_perp: 0.0,
                lambda_par: 0.0,
            },
            hamiltonian: HamiltonianKind::Effective,
            grid: Some(GridConfig { dt: 0.05, t_max: 10.0 }),
            method: MethodConfig::Exact,
            krylov: None,
            observables: Vec::new(),
            spectrum: None,
            lbit: None,
            gates: Some(GatesConfig {
                site: "c".into(),
                rot_z_time: 0.3,
                ising_time: 0.7,
                cnot: true,
                error: Some(ErrorConfig {
                    op: "Sx@c".into(),
                    amplitude: 0.2,
                    window: [5.0, 6.0],
                }),
            }),
            sweep: None,
            output_dir: None,
        },
        "verify" => ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment: ExperimentKind::Verify,
            label: None,
            params: phonon_params(4, 2, 10.0),
            hamiltonian: HamiltonianKind::Full,
            grid: None,
            method: MethodConfig::Exact,
            krylov: None,
            observables: Vec::new(),
            spectrum: None,
            lbit: None,
            gates: None,
            sweep: None,
            output_dir: None,
        },
        _ => return None,
    };
    cfg.label = Some(name.to_string());
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_caption_values() {
        let a = preset("fig2a").unwrap();
        assert_eq!(
            (a.params.n_sites, a.params.boson_levels, a.params.w, a.params.omega0),
            (7, 3, 6.0, 3.0)
        );
        assert_eq!((a.params.j, a.params.delta, a.params.lambda_par, a.params.lambda_perp), (1.0, 1.0, 1.0, 1.0));
        assert!(matches!(a.method, MethodConfig::Typicality { .. }));
        let b = preset("fig2b").unwrap();
        assert_eq!((b.params.n_sites, b.params.boson_levels, b.params.w), (9, 2, 3.0));
        let c = preset("fig3_7dot").unwrap();
        assert_eq!((c.params.n_sites, c.params.boson_levels, c.params.w), (7, 2, 10.0));
        assert_eq!(c.lbit.as_ref().unwrap().horizon, 100.0);
        let d = preset("fig3_5dot").unwrap();
        assert_eq!((d.params.n_sites, d.params.boson_levels, d.params.w), (5, 3, 10.0));
        let seeds: Vec<usize> = d.lbit.unwrap().seeds.iter().map(|s| s.k).collect();
        assert_eq!(seeds, vec![1, 4]);
        for (name, _) in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn presets_round_trip_through_json() {
        for (name, _) in PRESETS {
            let cfg = preset(name).unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&preset("fig2a").unwrap().to_json()).unwrap();
        v["params"]["bogus"] = 1.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&preset("fig2a").unwrap().to_json()).unwrap();
        v["extra"] = 1.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&preset("fig2a").unwrap().to_json()).unwrap();
        v["method"]["samplez"] = 3.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        let mut c = preset("fig2a").unwrap();
        c.params.j = -1.0;
        assert!(c.validate().is_err());
        let mut c = preset("fig2a").unwrap();
        c.grid = Some(GridConfig { dt: 0.0, t_max: 1.0 });
        assert!(c.validate().is_err());
        let mut c = preset("fig2a").unwrap();
        c.observables[0].q = "Sx@9".into();
        assert!(c.validate().is_err());
        let mut c = preset("fig2a").unwrap();
        c.schema_version = 7;
        assert!(c.validate().is_err());
        let mut c = preset("fig3_5dot").unwrap();
        c.lbit.as_mut().unwrap().seeds[0].site = "1".into();
        assert!(c.validate().is_err());
        let mut c = preset("fig2a").unwrap();
        c.method = MethodConfig::Typicality { samples: 0, seed: 1 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn site_grammar() {
        let ctx = SiteContext::new(7);
        assert_eq!(ctx.resolve("c").unwrap(), 4);
        assert_eq!(ctx.resolve("c-1").unwrap(), 3);
        assert_eq!(ctx.resolve("c+3").unwrap(), 7);
        assert_eq!(ctx.resolve("2").unwrap(), 2);
        assert!(ctx.resolve("c+4").is_err());
        assert!(ctx.resolve("0").is_err());
        assert!(ctx.resolve("j").is_err());
        assert_eq!(ctx.with_seed(3).resolve("j+1").unwrap(), 4);
        assert!(ctx.resolve("x").is_err());
    }

    #[test]
    fn operator_expressions() {
        let spec = SpaceSpec::new(3, 2, 0).unwrap();
        let ctx = SiteContext::new(3);
        let op = build_operator("Sz@c-1*Sp@c", &spec, &ctx).unwrap();
        let direct = spin_op(&spec, 1, SpinKind::Sz)
            .unwrap()
            .checked_mul(&spin_op(&spec, 2, SpinKind::Sp).unwrap())
            .unwrap();
        assert_eq!(op.max_abs_diff(&direct), 0.0);
        assert!(OperatorExpr::parse("Sq@1").is_err());
        assert!(OperatorExpr::parse("Sx").is_err());
    }

    #[test]
    fn sweep_axes() {
        let base = preset("fig2a").unwrap().params;
        assert_eq!(SweepAxis::Lambda0.apply(&base, 3.0).unwrap().lambda_par, 3.0);
        assert_eq!(SweepAxis::Lambda0.apply(&base, 3.0).unwrap().lambda_perp, 3.0);
        assert_eq!(SweepAxis::N.apply(&base, 5.0).unwrap().n_sites, 5);
        assert!(SweepAxis::NB.apply(&base, 2.5).is_err());
    }
}
