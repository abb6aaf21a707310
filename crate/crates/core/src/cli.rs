//! Command-line front end.
//!
//! Exit codes: 0 success (verdicts are data), 1 configuration or parse
//! error, 2 evaluation error, 3 no saddle certificate found.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    self, check_hypotheses, duality_gap, locate_saddle, ArgTolerance, GapReport, HypothesisOptions,
    HypothesisReport, Mode, QuasiconcavityWitness, SaddleCertificate,
};
use crate::error::Error;
use crate::fixedpoint::{self, AbReport, ChainReport, DeltaRule, SolutionSweep};
use crate::instances::{self, BuildCheck, Instance, InstanceSpec};
use crate::par;
use crate::report::{self, SliceRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_EVAL: i32 = 2;
pub const EXIT_NO_SADDLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "minimax-lab", version, about = "Mesh-level minimax duality lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: RunOptions,
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    /// Instance config (TOML).
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    /// Output directory for reports and CSV tables.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Absolute arg-set tolerance; replaces the default relative one.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Solution threshold for fixed-point sweeps.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Sampled sublevel thresholds per column.
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Restrict hypothesis checks to one mode.
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoName {
    /// Bilinear pairing on the circle (gap 2).
    Circle,
    /// Disconnected argmax control (gap about 1/4).
    Gapcase,
    /// Saddle at the origin.
    Okcase,
    /// Rows that are not quasi-concave, zero gap.
    Nonqc,
    /// Fixed-point family with split solution sets.
    Shear,
}

impl DemoName {
    fn config_name(self) -> &'static str {
        match self {
            DemoName::Circle => "circle",
            DemoName::Gapcase => "gapcase",
            DemoName::Okcase => "okcase",
            DemoName::Nonqc => "nonqc",
            DemoName::Shear => "shear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Hypotheses, duality gap and saddle search.
    Analyze,
    /// Saddle search only; exit 3 when none exists.
    Saddle,
    /// Gaps over the configured nested subgrids.
    Exhaust,
    /// Fixed-point solution sweep with its hypothesis checks.
    Sweep,
    /// Run a shipped instance end to end.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

/// Tolerances used by a run, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub arg: ArgTolerance,
    pub level_samples: usize,
    /// `None` means `1e-6 (1 + |sup inf|)`.
    pub compactness_margin: Option<f64>,
    /// `None` means the mesh rule `2 h (1 + |lambda| L)`.
    pub delta: Option<f64>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub instance: Option<PathBuf>,
    pub out: PathBuf,
    pub tolerances: Tolerances,
    pub modes: Vec<Mode>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<RunConfig, String> {
        let o = cli.opts;
        if let Some(e) = o.epsilon {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(format!("--epsilon must be finite and >= 0, got {e}"));
            }
        }
        if let Some(d) = o.delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(format!("--delta must be finite and > 0, got {d}"));
            }
        }
        if o.levels == Some(0) {
            return Err("--levels must be >= 1".into());
        }
        if o.jobs == Some(0) {
            return Err("--jobs must be >= 1".into());
        }
        if !matches!(cli.command, Command::Demo { .. }) && o.instance.is_none() {
            return Err("--instance is required for this command".into());
        }
        Ok(RunConfig {
            command: cli.command,
            instance: o.instance,
            out: o.out,
            tolerances: Tolerances {
                arg: o.epsilon.map_or_else(ArgTolerance::default, ArgTolerance::absolute),
                level_samples: o.levels.unwrap_or(16),
                compactness_margin: None,
                delta: o.delta,
            },
            modes: match o.mode {
                Some(m) => vec![m],
                None => vec![Mode::Theorem1, Mode::Theorem2],
            },
            jobs: o.jobs,
        })
    }
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. } | Error::Io { .. } => EXIT_EVAL,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub source: String,
    pub family: String,
    pub objective: String,
    pub lipschitz: Option<f64>,
    pub points: usize,
    pub dim: usize,
    pub mesh_spacing: f64,
    pub grid_a: f64,
    pub grid_b: f64,
    pub grid_n: usize,
    pub grid_spacing: f64,
    pub checks: Vec<BuildCheck>,
}

impl InstanceSummary {
    fn new(source: &str, inst: &Instance) -> Self {
        InstanceSummary {
            source: source.to_string(),
            family: inst.family.to_string(),
            objective: inst.objective.name().to_string(),
            lipschitz: inst.objective.lipschitz(),
            points: inst.space.len(),
            dim: inst.space.dim(),
            mesh_spacing: inst.space.spacing(),
            grid_a: inst.grid.a(),
            grid_b: inst.grid.b(),
            grid_n: inst.grid.len(),
            grid_spacing: inst.grid.spacing(),
            checks: inst.checks.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoVerdict {
    pub name: DemoName,
    pub expectation: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub command: Command,
    pub instance: InstanceSummary,
    pub tolerances: Tolerances,
    pub hypotheses: Vec<HypothesisReport>,
    pub gap: GapReport,
    pub saddle: Option<SaddleCertificate>,
    /// First mesh point whose row is not quasi-concave, if any.
    pub quasiconcavity_violation: Option<QuasiconcavityWitness>,
    pub demo: Option<DemoVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleReport {
    pub command: Command,
    pub instance: InstanceSummary,
    pub tolerances: Tolerances,
    pub saddle: Option<SaddleCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustReport {
    pub command: Command,
    pub instance: InstanceSummary,
    pub tolerances: Tolerances,
    pub exhaustion: analysis::ExhaustionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeWitness {
    pub lambda_index: usize,
    pub lambda: f64,
    pub sweep_components: usize,
    pub argmin_epsilon: f64,
    pub argmin_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub command: Command,
    pub instance: InstanceSummary,
    pub tolerances: Tolerances,
    pub range_norm_bounds: fixedpoint::RangeNormBounds,
    pub ab: AbReport,
    pub chain: ChainReport,
    pub sweep: SolutionSweep,
    /// Argmin sets of the penalty function at the disconnected parameters.
    pub bridge: Vec<BridgeWitness>,
    pub demo: Option<DemoVerdict>,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cfg) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Runs a validated configuration and returns the exit code.
pub fn execute(cfg: &RunConfig) -> Result<i32, Failure> {
    let jobs = cfg.jobs;
    par::with_jobs(jobs, || execute_inner(cfg))
}

fn load(cfg: &RunConfig) -> Result<(String, InstanceSpec), Failure> {
    match (&cfg.command, &cfg.instance) {
        (Command::Demo { name }, _) => {
            let key = name.config_name();
            let spec = instances::builtin_spec(key).ok_or_else(|| Failure::config(format!("unknown demo {key}")))?;
            Ok((format!("demo:{key}"), spec))
        }
        (_, Some(path)) => {
            let spec = instances::load_spec(path).map_err(|e| match e {
                Error::Io { .. } => Failure::config(e.to_string()),
                other => Failure::from(other),
            })?;
            Ok((path.display().to_string(), spec))
        }
        (_, None) => Err(Failure::config("--instance is required for this command")),
    }
}

fn execute_inner(cfg: &RunConfig) -> Result<i32, Failure> {
    let (source, spec) = load(cfg)?;
    let inst = instances::build_instance(&spec)?;
    let summary = InstanceSummary::new(&source, &inst);
    match cfg.command {
        Command::Analyze => analyze(cfg, &inst, summary, None),
        Command::Saddle => saddle(cfg, &inst, summary),
        Command::Exhaust => exhaust(cfg, &inst, summary),
        Command::Sweep => sweep(cfg, &inst, summary, None),
        Command::Demo { name } => match name {
            DemoName::Shear => sweep(cfg, &inst, summary, Some(name)),
            _ => analyze(cfg, &inst, summary, Some(name)),
        },
    }
}

fn out_path(cfg: &RunConfig, file: &str) -> PathBuf {
    cfg.out.join(file)
}

/// Full analysis of one instance, without writing anything.
pub fn analyze_instance(
    inst: &Instance,
    summary: InstanceSummary,
    tolerances: &Tolerances,
    modes: &[Mode],
    command: Command,
) -> Result<(AnalyzeReport, Vec<SliceRow>), Failure> {
    let table = inst.table()?;
    let hypotheses = modes
        .iter()
        .map(|&mode| {
            let opts = HypothesisOptions {
                mode,
                tolerance: tolerances.arg,
                level_samples: tolerances.level_samples,
                exhaustion: inst.exhaustion.clone(),
                dense: inst.dense.clone(),
                compactness_margin: tolerances.compactness_margin,
            };
            check_hypotheses(&table, &inst.space, &inst.grid, &opts)
        })
        .collect();
    let gap = duality_gap(&table);
    let saddle = locate_saddle(&table, tolerances.arg);
    let quasiconcavity_violation = par::map_indices(table.rows(), |i| analysis::quasiconcavity_violation(&table, i))
        .into_iter()
        .flatten()
        .next();
    let slices = report::slice_rows(&table, &inst.space, &inst.grid, tolerances.arg);
    Ok((
        AnalyzeReport {
            command,
            instance: summary,
            tolerances: tolerances.clone(),
            hypotheses,
            gap,
            saddle,
            quasiconcavity_violation,
            demo: None,
        },
        slices,
    ))
}

fn demo_verdict(name: DemoName, r: &AnalyzeReport) -> DemoVerdict {
    let (expectation, passed) = match name {
        DemoName::Circle => (
            "sup_inf = -1 and inf_sup = 1 within 1e-12, gap 2".to_string(),
            (r.gap.sup_inf + 1.0).abs() <= 1e-12 && (r.gap.inf_sup - 1.0).abs() <= 1e-12,
        ),
        DemoName::Gapcase => (
            "argmax disconnected at x = 0.5 and gap within 2h of 0.25".to_string(),
            r.hypotheses.iter().all(|h| !h.holds) && (r.gap.gap - 0.25).abs() <= 2.0 * r.instance.mesh_spacing.max(r.instance.grid_spacing),
        ),
        DemoName::Okcase => (
            "all clauses hold, saddle at the origin with value 0".to_string(),
            r.hypotheses.iter().all(|h| h.holds) && r.saddle.as_ref().is_some_and(|s| s.value == 0.0),
        ),
        DemoName::Nonqc => {
            let l = r.instance.lipschitz.unwrap_or(f64::INFINITY);
            let bound = 2.0 * l * (r.instance.mesh_spacing + r.instance.grid_spacing);
            (
                format!("some row is not quasi-concave, all clauses hold, gap <= {bound}"),
                r.quasiconcavity_violation.is_some() && r.hypotheses.iter().all(|h| h.holds) && r.gap.gap <= bound,
            )
        }
        DemoName::Shear => unreachable!("the shear demo runs the sweep"),
    };
    DemoVerdict {
        name,
        expectation,
        passed,
    }
}

fn analyze(cfg: &RunConfig, inst: &Instance, summary: InstanceSummary, demo: Option<DemoName>) -> Result<i32, Failure> {
    let (mut rep, slices) = analyze_instance(inst, summary, &cfg.tolerances, &cfg.modes, cfg.command)?;
    rep.demo = demo.map(|d| demo_verdict(d, &rep));
    report::write_json(&out_path(cfg, "report.json"), &rep)?;
    report::write_atomic(&out_path(cfg, "slices.csv"), &report::slice_csv(&slices))?;
    println!(
        "sup_inf = {}, inf_sup = {}, gap = {}, saddle = {}",
        rep.gap.sup_inf,
        rep.gap.inf_sup,
        rep.gap.gap,
        if rep.saddle.is_some() { "found" } else { "not found" }
    );
    for h in &rep.hypotheses {
        println!("{:?}: {}", h.mode, if h.holds { "all clauses hold" } else { "some clause fails" });
    }
    match &rep.demo {
        Some(v) if !v.passed => {
            eprintln!("demo expectation failed: {}", v.expectation);
            Ok(EXIT_EVAL)
        }
        _ => Ok(EXIT_OK),
    }
}

fn saddle(cfg: &RunConfig, inst: &Instance, summary: InstanceSummary) -> Result<i32, Failure> {
    let table = inst.table()?;
    let rep = SaddleReport {
        command: cfg.command,
        instance: summary,
        tolerances: cfg.tolerances.clone(),
        saddle: locate_saddle(&table, cfg.tolerances.arg),
    };
    report::write_json(&out_path(cfg, "saddle.json"), &rep)?;
    match &rep.saddle {
        Some(s) => {
            println!("saddle at x index {}, lambda index {}, value {}", s.x_index, s.lambda_index, s.value);
            Ok(EXIT_OK)
        }
        None => {
            println!("no saddle certificate");
            Ok(EXIT_NO_SADDLE)
        }
    }
}

fn exhaust(cfg: &RunConfig, inst: &Instance, summary: InstanceSummary) -> Result<i32, Failure> {
    if inst.exhaustion.is_empty() {
        return Err(Failure::config("the instance declares no `exhaustion` intervals"));
    }
    let table = inst.table()?;
    let ex = analysis::exhaustion_from_table(&table, &inst.grid, &inst.exhaustion, cfg.tolerances.arg)?;
    let rows = ex.steps.iter().enumerate().map(|(n, s)| {
        vec![
            (n + 1).to_string(),
            s.lo.to_string(),
            s.hi.to_string(),
            s.gap.sup_inf.to_string(),
            s.gap.inf_sup.to_string(),
            s.gap.gap.to_string(),
            s.saddle.is_some().to_string(),
        ]
    });
    let csv = report::to_csv(&["n", "lo", "hi", "sup_inf", "inf_sup", "gap", "saddle_found"], rows);
    let rep = ExhaustReport {
        command: cfg.command,
        instance: summary,
        tolerances: cfg.tolerances.clone(),
        exhaustion: ex,
    };
    report::write_json(&out_path(cfg, "exhaust.json"), &rep)?;
    report::write_atomic(&out_path(cfg, "exhaustion.csv"), &csv)?;
    println!(
        "{} subgrids, sup_inf non-decreasing: {}, limit equal: {}",
        rep.exhaustion.steps.len(),
        rep.exhaustion.sup_inf_nondecreasing,
        rep.exhaustion.limit_equal
    );
    Ok(EXIT_OK)
}

/// Sweep, hypothesis checks, chain check and bridge for a fixed-point
/// instance, without writing anything.
pub fn sweep_instance(
    inst: &Instance,
    summary: InstanceSummary,
    tolerances: &Tolerances,
    command: Command,
) -> Result<SweepReport, Failure> {
    let setup = inst
        .field
        .as_ref()
        .ok_or_else(|| Failure::config("sweep needs a fixedpoint_phi instance"))?;
    let map = &setup.map;
    let rule = tolerances.delta.map_or(DeltaRule::MeshDefault, DeltaRule::Fixed);
    let tol = fixedpoint::default_ab_tol(map, &inst.space);
    let ab = fixedpoint::check_ab(map, &inst.space, setup.mode, tol)?;
    let chain = fixedpoint::supinf_chain_check(map, &inst.grid, &inst.space, None)?;
    let sweep = fixedpoint::sweep_solutions(map, &inst.grid, rule, &inst.space)?;
    let bridge = sweep
        .disconnected
        .iter()
        .map(|&j| {
            let s = &sweep.slices[j];
            let eps = s.delta * s.delta;
            let comp = fixedpoint::phi_argmin_components(map, &inst.space, s.lambda, eps)?;
            Ok(BridgeWitness {
                lambda_index: j,
                lambda: s.lambda,
                sweep_components: s.component_count,
                argmin_epsilon: eps,
                argmin_components: comp.component_count,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(SweepReport {
        command,
        instance: summary,
        tolerances: tolerances.clone(),
        range_norm_bounds: setup.bounds,
        ab,
        chain,
        sweep,
        bridge,
        demo: None,
    })
}

fn sweep(cfg: &RunConfig, inst: &Instance, summary: InstanceSummary, demo: Option<DemoName>) -> Result<i32, Failure> {
    let mut rep = sweep_instance(inst, summary, &cfg.tolerances, cfg.command)?;
    if let Some(name) = demo {
        rep.demo = Some(DemoVerdict {
            name,
            expectation: "hypothesis clauses hold on the mesh and some lambda splits the solution set".into(),
            passed: rep.ab.holds && rep.bridge.iter().any(|b| b.argmin_components >= 2),
        });
    }
    report::write_json(&out_path(cfg, "sweep.json"), &rep)?;
    report::write_atomic(&out_path(cfg, "sweep.csv"), &report::sweep_csv(&rep.sweep))?;
    println!(
        "clauses hold: {}, disconnected lambdas: {}",
        rep.ab.holds,
        rep.sweep.disconnected.len()
    );
    match &rep.demo {
        Some(v) if !v.passed => {
            eprintln!("demo expectation failed: {}", v.expectation);
            Ok(EXIT_EVAL)
        }
        _ => Ok(EXIT_OK),
    }
}

/// Convenience for tests: reads a report written by a previous run.
pub fn read_report(out: &Path, file: &str) -> std::io::Result<Vec<u8>> {
    std::fs::read(out.join(file))
}
