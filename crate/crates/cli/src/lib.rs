//! Command-line front end: configuration parsing, study dispatch and result files.
//!
//! Values come from three layers, later ones winning: built-in defaults, a
//! JSON config file (`--config`), then command-line flags. The resolved
//! configuration, including the seed actually used, is written into every
//! result manifest so a run can be repeated exactly.

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use cancellative::engine::{run_replicas, RunOptions, RunStatus};
use cancellative::experiments::{
    density_anneal, drift_audit, equilibrium_probe, extinction_vs_growth, good_event_sweep,
    interface_rate_audit, structural_audits, survival_scan, AnnealParams, AuditParams, DriftParams,
    EquilibriumParams, ExtinctionParams, GoodEventParams, InitialLaw, Observable, StudyResult,
    SurvivalParams,
};
use cancellative::lattice::{gradient, make_config, Init, LatticeShape, Site, SpinConfig};
use cancellative::oracle::{DualityChecker, MAX_ORACLE_SITES};
use cancellative::percolation::run_percolation;
use cancellative::rules::{build_model, ModelKind, ModelSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Relative output paths are resolved against this directory when set.
pub const OUT_DIR_ENV: &str = "CANCELLATIVE_OUT_DIR";
/// Worker threads when `--threads` is absent.
pub const THREADS_ENV: &str = "CANCELLATIVE_THREADS";

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for bad arguments, configs or parameters.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for failures while running or writing.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] cancellative::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(cancellative::Error::Precondition(_)) => EXIT_RUNTIME,
            CliError::Core(_) => EXIT_VALIDATION,
            CliError::Io { .. } | CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("invalid parameter `{field}`: {reason}"))
}

/// The subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Dual,
    Duality,
    Percolation,
    Anneal,
    Survival,
    Audit,
    Equilibrium,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything a run needs. Fields a subcommand does not use are ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub model: ModelKind,
    pub alpha: f64,
    /// Run the transposed system instead (simulate only).
    pub dual: bool,
    pub dim: usize,
    pub range: usize,
    pub sites: Option<usize>,
    /// Horizon of simulate/dual/survival/equilibrium.
    pub t_end: Option<f64>,
    /// Number of equally spaced samples after time 0.
    pub samples: usize,
    /// Times of the duality check.
    pub times: Vec<f64>,
    /// Start of `simulate`: `single`, `zero`, `one`, `product:Q`, `pattern:BITS`, `interval:A:B`.
    pub init: String,
    /// Occupied sites of finite starts on `Z`.
    pub y0: Vec<i64>,
    pub replicas: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub tol: f64,
    /// Variant of a study, e.g. `good-events`, `extinction`, `drift`.
    pub study: Option<String>,
    pub p: f64,
    pub levels: usize,
    pub halfwidth: Option<i64>,
    pub w0: Vec<i64>,
    pub alpha_step: f64,
    pub n_grid: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub stages: usize,
    pub t_total: Option<f64>,
    /// Full-scale anneal protocol.
    pub full: bool,
    /// Initial laws of `equilibrium`: `product:Q`, `half-space`, `interval:LEN`.
    pub laws: Vec<String>,
    /// Block scales of the good-event sweep.
    pub ls: Vec<i64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            model: ModelKind::Rebellious,
            alpha: 0.5,
            dual: false,
            dim: 1,
            range: 1,
            sites: None,
            t_end: None,
            samples: 10,
            times: vec![0.25, 1.0, 4.0],
            init: "single".into(),
            y0: vec![0, 1],
            replicas: None,
            seed: None,
            out: None,
            format: Format::Csv,
            threads: None,
            tol: 1e-12,
            study: None,
            p: 0.7,
            levels: 50,
            halfwidth: None,
            w0: vec![0],
            alpha_step: 0.05,
            n_grid: vec![1, 6],
            t_grid: vec![10.0, 100.0, 1000.0],
            stages: 100,
            t_total: None,
            full: false,
            laws: vec!["product:0.5".into(), "product:0.25".into()],
            ls: vec![4, 8, 16, 32],
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cancellative", version, about = "Cancellative spin systems and their duals")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Run a spin system on a torus.
    Simulate(Flags),
    /// Run the dual particle system on Z from a finite start.
    Dual(Flags),
    /// Exact duality gap on a small torus.
    Duality(Flags),
    /// Oriented percolation, or block good events with `--study good-events`.
    Percolation(Flags),
    /// Density of the dual on a ring while α is lowered.
    Anneal(Flags),
    /// Survival scan over α, or `--study extinction|gradient`.
    Survival(Flags),
    /// Structural audits, or `--study drift|interface`.
    Audit(Flags),
    /// Long-run statistics from several initial laws.
    Equilibrium(Flags),
}

#[derive(Args, Debug)]
struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    dual: bool,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    range: Option<usize>,
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated times.
    #[arg(long = "t", value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y0: Option<Vec<i64>>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, or `-` for stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    study: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    halfwidth: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    w0: Option<Vec<i64>>,
    #[arg(long)]
    alpha_step: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    t_total: Option<f64>,
    #[arg(long)]
    full: bool,
    #[arg(long, value_delimiter = ',')]
    laws: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    ls: Option<Vec<i64>>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| {
        format!("unknown model `{s}`; expected neutral-np, affine, rebellious, disagreement or swapping")
    })
}

macro_rules! overlay {
    ($cfg:ident, $flags:ident; $($f:ident),*) => {
        $( if let Some(v) = $flags.$f { $cfg.$f = v; } )*
    };
}

impl Flags {
    fn apply(self, command: Command) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if cfg.command.is_some_and(|c| c != command) {
            return Err(CliError::Validation(format!(
                "config file is for `{:?}`, not `{command:?}`",
                cfg.command.unwrap()
            )));
        }
        cfg.command = Some(command);
        let f = self;
        overlay!(cfg, f; model, alpha, dim, range, samples, times, init, y0, format, tol, p, levels, w0,
            alpha_step, n_grid, t_grid, stages, laws, ls);
        cfg.dual |= f.dual;
        cfg.full |= f.full;
        cfg.sites = f.sites.or(cfg.sites);
        cfg.t_end = f.t_end.or(cfg.t_end);
        cfg.replicas = f.replicas.or(cfg.replicas);
        cfg.seed = f.seed.or(cfg.seed);
        cfg.out = f.out.or(cfg.out);
        cfg.threads = f.threads.or(cfg.threads);
        cfg.study = f.study.or(cfg.study);
        cfg.halfwidth = f.halfwidth.or(cfg.halfwidth);
        cfg.t_total = f.t_total.or(cfg.t_total);
        Ok(cfg)
    }
}

/// Reads a config document; a result manifest's `config` member is accepted too.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let doc = doc
        .get("manifest")
        .and_then(|m| m.get("config"))
        .cloned()
        .unwrap_or(doc);
    serde_json::from_value(doc).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn unit_interval(field: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is outside the legal range [0, 1]")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be positive and finite")))
    }
}

impl RunConfig {
    pub fn command(&self) -> Result<Command, CliError> {
        self.command.ok_or_else(|| invalid("command", "no subcommand given"))
    }

    /// Fills in per-command defaults and draws a seed if none was given.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let c = self.command()?;
        self.seed.get_or_insert_with(rand::random);
        let (replicas, t_end, sites) = match c {
            Command::Simulate | Command::Dual => (1, 100.0, 201),
            Command::Duality => (1, 1.0, 6),
            Command::Percolation => (2000, 0.0, 0),
            Command::Anneal => (8, 0.0, 201),
            Command::Survival => (200, 1.0e4, 0),
            Command::Audit => (100_000, 0.0, 0),
            Command::Equilibrium => (20, 1.0e3, 400),
        };
        self.replicas.get_or_insert(replicas);
        self.t_end.get_or_insert(t_end);
        self.sites.get_or_insert(sites);
        if c == Command::Anneal {
            self.t_total.get_or_insert(3.0e4);
        }
        Ok(self)
    }

    /// Checks every numeric field a command uses against its legal range.
    pub fn validate(&self) -> Result<(), CliError> {
        let c = self.command()?;
        unit_interval("alpha", self.alpha)?;
        unit_interval("p", self.p)?;
        positive("tol", self.tol)?;
        positive("alpha_step", self.alpha_step)?;
        if self.alpha_step > 1.0 {
            return Err(invalid("alpha_step", "must be at most 1"));
        }
        if self.replicas == Some(0) {
            return Err(invalid("replicas", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be positive"));
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("t_end", format!("{t} must be finite and nonnegative")));
            }
        }
        if let Some(t) = self.t_total {
            positive("t_total", t)?;
        }
        if self.dim == 0 || self.range == 0 {
            return Err(invalid("dim/range", "must be at least 1"));
        }
        match c {
            Command::Simulate | Command::Equilibrium | Command::Anneal => {
                if self.sites.is_some_and(|s| s < 2) {
                    return Err(invalid("sites", "need at least 2 sites"));
                }
            }
            Command::Duality => {
                let s = self.sites.unwrap_or(0);
                let n = s.checked_pow(self.dim as u32).unwrap_or(usize::MAX);
                if s < 1 || n > MAX_ORACLE_SITES {
                    return Err(invalid(
                        "sites",
                        format!("the exact oracle needs 1 to {MAX_ORACLE_SITES} sites in total, got {n}"),
                    ));
                }
                if self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || self.times.is_empty() {
                    return Err(invalid("t", "need finite nonnegative times"));
                }
            }
            Command::Dual | Command::Survival => {
                if self.y0.is_empty() && c == Command::Dual {
                    return Err(invalid("y0", "need at least one occupied site"));
                }
            }
            Command::Percolation | Command::Audit => {}
        }
        if self.samples == 0 {
            return Err(invalid("samples", "must be positive"));
        }
        Ok(())
    }

    fn spec(&self) -> ModelSpec<f64> {
        ModelSpec {
            kind: self.model,
            dual: self.dual,
            alpha: self.alpha,
            dim: if self.model.has_range() { self.dim } else { 1 },
            range: self.range,
            allow_1d: false,
        }
    }

    fn seed(&self) -> u64 {
        self.seed.expect("resolved config has a seed")
    }

    fn replicas(&self) -> u64 {
        self.replicas.expect("resolved config has replicas")
    }
}

fn parse_init(s: &str, dim: usize) -> Result<Init, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |v: &str| v.parse::<f64>().map_err(|_| invalid("init", format!("`{v}` is not a number")));
    let int = |v: &str| v.parse::<i64>().map_err(|_| invalid("init", format!("`{v}` is not an integer")));
    Ok(match parts.as_slice() {
        ["single"] => Init::SingleSite(Site::origin(dim)),
        ["zero"] => Init::AllZero,
        ["one"] => Init::AllOne,
        ["product", q] => Init::Product { p: num(q)?, seed: 0 },
        ["pattern", bits] => Init::Pattern((*bits).to_string()),
        ["interval", a, b] => Init::Interval { a: int(a)?, b: int(b)? },
        _ => {
            return Err(invalid(
                "init",
                format!("`{s}`; expected single, zero, one, product:Q, pattern:BITS or interval:A:B"),
            ))
        }
    })
}

fn parse_law(s: &str) -> Result<InitialLaw, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["product", q] => {
            let q: f64 = q.parse().map_err(|_| invalid("laws", format!("`{q}` is not a number")))?;
            unit_interval("laws", q)?;
            Ok(InitialLaw::Product { q })
        }
        ["half-space"] => Ok(InitialLaw::HalfSpace),
        ["interval", n] => Ok(InitialLaw::Interval {
            len: n.parse().map_err(|_| invalid("laws", format!("`{n}` is not a length")))?,
        }),
        _ => Err(invalid("laws", format!("`{s}`; expected product:Q, half-space or interval:LEN"))),
    }
}

fn sample_times(t_end: f64, samples: usize) -> Vec<f64> {
    (0..=samples).map(|k| t_end * k as f64 / samples as f64).collect()
}

fn state_string(x: &SpinConfig) -> String {
    x.to_bit_string().unwrap_or_else(|| {
        x.support_list()
            .iter()
            .map(|c| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(":"))
            .collect::<Vec<_>>()
            .join(" ")
    })
}

fn trajectories(cfg: &RunConfig, spec: &ModelSpec<f64>, x0: &SpinConfig, name: &str) -> Result<StudyResult, CliError> {
    let rules = build_model(spec)?;
    let opts = RunOptions::new(cfg.seed(), sample_times(cfg.t_end.unwrap_or(0.0), cfg.samples));
    let runs = run_replicas(&rules, x0, &opts, cfg.replicas())?;
    let mut res = StudyResult::new(
        name,
        &json!({ "model": spec, "initial": state_string(x0) }),
        vec![cfg.seed()],
        &["replica", "time", "ones", "gradient", "state"],
    );
    let mut absorbed = 0;
    let mut capped = 0;
    let mut events = 0;
    for tr in &runs {
        for (t, x) in tr.sample_times.iter().zip(&tr.samples) {
            res.push(vec![
                tr.replica.into(),
                json!(t),
                x.ones().into(),
                gradient(x).into(),
                state_string(x).into(),
            ]);
        }
        events += tr.event_count;
        match tr.status {
            RunStatus::Absorbed { .. } => absorbed += 1,
            RunStatus::Capped { .. } => capped += 1,
            RunStatus::Completed => {}
        }
    }
    res.set_summary("rules", rules.name());
    res.set_summary("events", events);
    res.set_summary("absorbed", absorbed);
    res.set_summary("capped", capped);
    Ok(res)
}

fn simulate(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    let spec = cfg.spec();
    let shape = LatticeShape::torus(vec![cfg.sites.unwrap_or(0); spec.dim])?;
    let x0 = match parse_init(&cfg.init, spec.dim)? {
        Init::Product { p, .. } => make_config(&shape, &Init::Product { p, seed: cfg.seed() })?,
        init => make_config(&shape, &init)?,
    };
    trajectories(cfg, &spec, &x0, "simulate")
}

fn dual(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    let spec = ModelSpec { dim: 1, ..cfg.spec() }.dual();
    let y0 = SpinConfig::sparse_1d(cfg.y0.iter().copied());
    trajectories(cfg, &spec, &y0, "dual")
}

fn duality(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    let spec = ModelSpec { dual: false, ..cfg.spec() };
    let x_rules = build_model(&spec)?;
    let y_rules = build_model(&spec.clone().dual())?;
    let shape = LatticeShape::torus(vec![cfg.sites.unwrap_or(0); spec.dim])?;
    let checker = DualityChecker::new(&x_rules, &y_rules, &shape, cfg.tol)?;
    let rows = checker.full_grid(&cfg.times)?;
    let mut res = StudyResult::new(
        "duality",
        &json!({ "model": spec, "sites": cfg.sites, "times": cfg.times, "tol": cfg.tol }),
        vec![],
        &["x0", "y0", "t", "lhs", "rhs", "gap"],
    );
    let bits = |k: usize| {
        SpinConfig::from_state_index(&shape, k as u64)
            .ok()
            .and_then(|x| x.to_bit_string())
            .unwrap_or_default()
    };
    let mut max_gap: f64 = 0.0;
    for r in &rows {
        max_gap = max_gap.max(r.gap);
        res.push(vec![bits(r.x0).into(), bits(r.y0).into(), json!(r.t), json!(r.lhs), json!(r.rhs), json!(r.gap)]);
    }
    res.set_summary("states", checker.n_states());
    res.set_summary("max_gap", max_gap);
    Ok(res)
}

fn percolation(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    match cfg.study.as_deref().unwrap_or("oriented") {
        "oriented" => {
            let reach = cfg.w0.iter().map(|x| x.abs()).max().unwrap_or(0) + cfg.levels as i64;
            let hw = cfg.halfwidth.unwrap_or(reach);
            let run = run_percolation(cfg.p, &cfg.w0, cfg.levels, hw, cfg.seed())?;
            let mut res = StudyResult::new(
                "percolation",
                &json!({ "p": cfg.p, "w0": cfg.w0, "levels": cfg.levels, "halfwidth": hw }),
                vec![cfg.seed()],
                &["n", "size", "min", "max"],
            );
            for (n, w) in run.levels.iter().enumerate() {
                res.push(vec![n.into(), w.len().into(), json!(w.first()), json!(w.last())]);
            }
            res.set_summary("survives", run.survives());
            Ok(res)
        }
        "good-events" => {
            let mut p = GoodEventParams::new(cfg.seed());
            p.alpha = cfg.alpha;
            p.ls = cfg.ls.clone();
            p.replicas = cfg.replicas();
            Ok(good_event_sweep(&p)?)
        }
        other => Err(invalid("study", format!("`{other}`; expected oriented or good-events"))),
    }
}

fn anneal(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    let p = if cfg.full {
        AnnealParams::full(cfg.seed())
    } else {
        AnnealParams::linear(
            cfg.sites.unwrap_or(201),
            cfg.t_total.unwrap_or(3.0e4),
            cfg.stages,
            cfg.replicas(),
            cfg.seed(),
        )
    };
    Ok(density_anneal(&p)?)
}

fn survival(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    let dual_spec = ModelSpec { dual: true, ..cfg.spec() };
    match cfg.study.as_deref().unwrap_or("scan") {
        "scan" => {
            let mut p = SurvivalParams::adbarw(cfg.alpha_step, cfg.t_end.unwrap_or(1.0e4), cfg.replicas(), cfg.seed());
            p.model = dual_spec;
            p.y0 = cfg.y0.clone();
            Ok(survival_scan(&p)?)
        }
        s @ ("extinction" | "gradient") => {
            let mut p = ExtinctionParams::adbarw(
                cfg.alpha,
                cfg.n_grid.clone(),
                cfg.t_grid.clone(),
                cfg.replicas(),
                cfg.seed(),
            );
            p.y0 = cfg.y0.clone();
            if s == "gradient" {
                p.model = ModelSpec { dual: false, ..cfg.spec() };
                p.observable = Observable::Gradient;
            } else {
                p.model = dual_spec;
            }
            Ok(extinction_vs_growth(&p)?)
        }
        other => Err(invalid("study", format!("`{other}`; expected scan, extinction or gradient"))),
    }
}

fn audit(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    match cfg.study.as_deref().unwrap_or("structural") {
        "structural" => Ok(structural_audits(&AuditParams::new(cfg.replicas(), cfg.seed()))?),
        "drift" => {
            let mut p = DriftParams::new(cfg.replicas(), cfg.seed());
            p.alpha = cfg.alpha;
            Ok(drift_audit(&p)?)
        }
        "interface" => Ok(interface_rate_audit(&AuditParams::new(1, 0).exact_alphas)?),
        other => Err(invalid("study", format!("`{other}`; expected structural, drift or interface"))),
    }
}

fn equilibrium(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    let p = EquilibriumParams {
        model: ModelSpec { dual: false, ..cfg.spec() },
        sites: cfg.sites.unwrap_or(400),
        t_relax: cfg.t_end.unwrap_or(0.0),
        replicas: cfg.replicas(),
        laws: cfg.laws.iter().map(|s| parse_law(s)).collect::<Result<_, _>>()?,
        seed: cfg.seed(),
    };
    Ok(equilibrium_probe(&p)?)
}

/// Runs a resolved, validated configuration.
pub fn execute(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    cfg.validate()?;
    let work = || match cfg.command()? {
        Command::Simulate => simulate(cfg),
        Command::Dual => dual(cfg),
        Command::Duality => duality(cfg),
        Command::Percolation => percolation(cfg),
        Command::Anneal => anneal(cfg),
        Command::Survival => survival(cfg),
        Command::Audit => audit(cfg),
        Command::Equilibrium => equilibrium(cfg),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// The `manifest` member of emitted files.
pub fn manifest(result: &StudyResult, config: &RunConfig) -> Value {
    json!({
        "study": result.name,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "params": result.params,
        "seeds": result.seeds,
        "columns": result.columns,
        "summary": result.summary,
    })
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so `path` is either untouched or complete.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w).map_err(CliError::io(path))?;
        w.flush().map_err(CliError::io(path))?;
    }
    tmp.as_file().sync_all().map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_csv(result: &StudyResult, w: &mut dyn Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&result.columns)?;
    for row in &result.rows {
        out.write_record(row.iter().map(cell))?;
    }
    out.flush()
}

fn write_json(result: &StudyResult, config: &RunConfig, w: &mut dyn Write) -> io::Result<()> {
    let doc = json!({
        "manifest": manifest(result, config),
        "rows": result.rows,
    });
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)
}

/// Path of the manifest written next to a CSV file.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes `result` to `path` (`-` for stdout). CSV output gets its manifest
/// in a sibling `<path>.manifest.json`; JSON output embeds it.
pub fn emit_results(result: &StudyResult, config: &RunConfig, path: &Path, format: Format) -> Result<(), CliError> {
    if path == Path::new("-") {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        let r = match format {
            Format::Csv => write_csv(result, &mut lock),
            Format::Json => write_json(result, config, &mut lock),
        };
        return r.map_err(CliError::io(path));
    }
    match format {
        Format::Csv => {
            write_atomic(path, |w| write_csv(result, w))?;
            let doc = json!({ "manifest": manifest(result, config) });
            write_atomic(&manifest_path(path), |w| {
                serde_json::to_writer_pretty(&mut *w, &doc)?;
                writeln!(w)
            })
        }
        Format::Json => write_atomic(path, |w| write_json(result, config, w)),
    }
}

fn output_path(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if out.is_relative() && out != Path::new("-") => Path::new(&dir).join(out),
        _ => out.to_path_buf(),
    }
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Validation(e.to_string()))?;
    let (command, flags) = match cli.command {
        CliCommand::Simulate(f) => (Command::Simulate, f),
        CliCommand::Dual(f) => (Command::Dual, f),
        CliCommand::Duality(f) => (Command::Duality, f),
        CliCommand::Percolation(f) => (Command::Percolation, f),
        CliCommand::Anneal(f) => (Command::Anneal, f),
        CliCommand::Survival(f) => (Command::Survival, f),
        CliCommand::Audit(f) => (Command::Audit, f),
        CliCommand::Equilibrium(f) => (Command::Equilibrium, f),
    };
    let cfg = flags.apply(command)?.resolve()?;
    cfg.validate()?;
    if let Some(out) = &cfg.out {
        let path = output_path(out);
        if path != Path::new("-") {
            // fail before the work if the destination cannot take a file
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !dir.is_dir() {
                return Err(CliError::Io {
                    path: path.clone(),
                    source: io::Error::new(io::ErrorKind::NotFound, "output directory does not exist"),
                });
            }
        }
    }
    let result = execute(&cfg)?;
    if let Some(out) = &cfg.out {
        emit_results(&result, &cfg, &output_path(out), cfg.format)?;
    }
    let line = json!({ "study": result.name, "seed": cfg.seed, "summary": result.summary });
    if cfg.out.as_deref() == Some(Path::new("-")) {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match Cli::try_parse_from(&argv) {
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{first}");
            return EXIT_VALIDATION;
        }
        Ok(_) => {}
    }
    match run(argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
