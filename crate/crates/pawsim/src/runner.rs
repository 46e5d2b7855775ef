//! Config-driven batch runner: executes tasks in declaration order and
//! emits deterministic CSV traces plus a JSON run report.
//!
//! Determinism contract: identical configs produce byte-identical output
//! files on the same platform. Floats are written with 17 significant
//! digits; every emitted file starts with a comment header carrying the
//! config hash and tool version; wall-clock time is reported to the caller
//! but never written into output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{
    parse_observable, parse_scope, serialize_config, ConfigError, ExperimentConfig,
    ObservableSpec, TaskConfig,
};
use crate::error::Error as LibError;
use crate::presets::{paired_random_system, spin_observable};
use crate::tensor::{embed_local, DenseOperator};
use crate::tidit::{
    check_redshift_conservation, degenerate_split, dilation_sign_map, propagate_time_dilated,
    redshift, DilationKind,
};
use crate::universe::{Scope, UniverseSpec};
use crate::verify;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("runtime error: {0}")]
    Lib(#[from] LibError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Runner options resolved by the caller (CLI flags/env already applied).
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Multiplies every verification tolerance.
    pub tol_scale: f64,
    /// Seeds random-universe generation in the verify suite.
    pub seed: u64,
    /// Write output files (reports are produced either way).
    pub emit: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            tol_scale: 1.0,
            seed: 0,
            emit: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Passed,
    Failed,
    Error,
}

/// One quantitative verdict; `invariant` names the property checked.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub invariant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Metric {
    pub fn check(name: impl Into<String>, value: f64, tol: f64, invariant: &str) -> Self {
        Metric {
            name: name.into(),
            value,
            tolerance: Some(tol),
            pass: Some(value.is_finite() && value <= tol),
            invariant: invariant.to_string(),
            note: None,
        }
    }

    pub fn info(name: impl Into<String>, value: f64, invariant: &str) -> Self {
        Metric {
            name: name.into(),
            value,
            tolerance: None,
            pass: None,
            invariant: invariant.to_string(),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub required: bool,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<String>,
}

impl TaskReport {
    fn from_metrics(task: &str, required: bool, metrics: Vec<Metric>, files: Vec<String>) -> Self {
        let failed = metrics.iter().any(|m| m.pass == Some(false));
        TaskReport {
            task: task.to_string(),
            required,
            status: if failed {
                TaskStatus::Failed
            } else {
                TaskStatus::Passed
            },
            error: None,
            metrics,
            files,
        }
    }

    fn from_error(task: &str, required: bool, err: &LibError) -> Self {
        TaskReport {
            task: task.to_string(),
            required,
            status: TaskStatus::Error,
            error: Some(err.to_string()),
            metrics: Vec::new(),
            files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub config_hash: String,
    pub version: String,
    pub tasks: Vec<TaskReport>,
    /// Measured per run; deliberately excluded from emitted files so that
    /// repeated runs stay byte-identical.
    #[serde(skip)]
    pub wall_clock_ms: u128,
}

impl RunReport {
    /// True iff every required task passed (non-required failures are
    /// reported but do not gate).
    pub fn required_tasks_passed(&self) -> bool {
        self.tasks
            .iter()
            .filter(|t| t.required)
            .all(|t| t.status == TaskStatus::Passed)
    }

    pub fn any_error(&self) -> bool {
        self.tasks.iter().any(|t| t.status == TaskStatus::Error)
    }
}

/// Short hash of the canonical config serialization.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serialize_config(config);
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// 17-significant-digit float formatting (bit-stable round trips).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct CsvFile {
    name: String,
    lines: Vec<String>,
}

impl CsvFile {
    fn new(name: String, hash: &str, columns: &[String]) -> Self {
        CsvFile {
            name,
            lines: vec![
                format!("# pawsim v{TOOL_VERSION} config_hash={hash}"),
                columns.join(","),
            ],
        }
    }

    fn row(&mut self, cells: &[String]) {
        self.lines.push(cells.join(","));
    }

    fn contents(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

/// Executes every task in declaration order. A failing or erroring task
/// marked required aborts the remaining tasks; others are recorded and the
/// run continues.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let hash = config_hash(config);
    let formats = config
        .output
        .as_ref()
        .and_then(|o| o.formats.clone())
        .unwrap_or_else(|| vec!["csv".to_string(), "json".to_string()]);
    let emit_csv = opts.emit && formats.iter().any(|f| f == "csv");
    let emit_json = opts.emit && formats.iter().any(|f| f == "json");
    if opts.emit {
        std::fs::create_dir_all(&opts.out_dir).map_err(|source| RunError::Io {
            path: opts.out_dir.clone(),
            source,
        })?;
    }

    let mut tasks = Vec::new();
    for (index, task) in config.tasks.iter().enumerate() {
        let required = task.required();
        let outcome = run_task(config, task, index, &hash, opts);
        let report = match outcome {
            Ok((metrics, csvs)) => {
                let mut files = Vec::new();
                for csv in &csvs {
                    if emit_csv {
                        write_file(&opts.out_dir, &csv.name, &csv.contents())?;
                        files.push(csv.name.clone());
                    }
                }
                TaskReport::from_metrics(task.label(), required, metrics, files)
            }
            Err(err) => TaskReport::from_error(task.label(), required, &err),
        };
        let abort = required && report.status != TaskStatus::Passed;
        tasks.push(report);
        if abort {
            break;
        }
    }

    let report = RunReport {
        name: config.name.clone().unwrap_or_else(|| "unnamed".to_string()),
        config_hash: hash,
        version: TOOL_VERSION.to_string(),
        tasks,
        wall_clock_ms: started.elapsed().as_millis(),
    };
    if emit_json {
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_file(&opts.out_dir, "report.json", &text)?;
    }
    Ok(report)
}

fn run_task(
    config: &ExperimentConfig,
    task: &TaskConfig,
    index: usize,
    hash: &str,
    opts: &RunOptions,
) -> crate::error::Result<(Vec<Metric>, Vec<CsvFile>)> {
    match task {
        TaskConfig::ConditionalTrace {
            scope, observables, ..
        } => conditional_trace(config, scope.as_deref(), observables.as_deref(), index, hash, opts),
        TaskConfig::AmplitudeProfile { scope, .. } => {
            amplitude_profile(config, scope.as_deref(), index, hash, opts)
        }
        TaskConfig::TransitionAmplitude { nodes, .. } => {
            transition_amplitude(config, nodes.unwrap_or(16), index, hash)
        }
        TaskConfig::TiditSweep {
            clock, g_values, ..
        } => tidit_sweep(config, clock.as_deref(), g_values, index, hash, opts),
        TaskConfig::Verify { .. } => {
            let metrics = verify::run_suite(config, opts.seed, opts.tol_scale);
            Ok((metrics, Vec::new()))
        }
    }
}

fn resolve_scope(config: &ExperimentConfig, scope: Option<&str>) -> crate::error::Result<Scope> {
    match scope {
        None => Ok(Scope::Global),
        Some(s) => parse_scope(s, config.clocks.len())
            .ok_or_else(|| LibError::InvalidInput(format!("invalid scope '{s}'"))),
    }
}

/// Builds the observable operator on the conditional factor for a scope.
fn observable_operator(
    u: &UniverseSpec,
    scope: Scope,
    spec: &ObservableSpec,
) -> crate::error::Result<DenseOperator> {
    let base = spin_observable(&spec.name)
        .ok_or_else(|| LibError::InvalidInput(format!("unknown observable '{}'", spec.name)))?;
    match (scope, spec.clock) {
        (_, None) => {
            if u.system_dim() != 2 {
                return Err(LibError::DimensionMismatch {
                    context: "spin observable on a non-two-level system",
                    expected: 2,
                    actual: u.system_dim(),
                });
            }
            Ok(base)
        }
        (Scope::Global, Some(_)) => Err(LibError::InvalidInput(
            "clock observables are unavailable after conditioning on the global clock".into(),
        )),
        (Scope::Local(a), Some(j)) => {
            if j == a {
                return Err(LibError::InvalidInput(
                    "cannot observe the clock that was conditioned away".into(),
                ));
            }
            let dims = crate::tidit::conditional_dims(u, a)?;
            let site = if j < a { j } else { j - 1 };
            embed_local(&base, site, &dims)
        }
    }
}

fn conditional_trace(
    config: &ExperimentConfig,
    scope: Option<&str>,
    observables: Option<&[String]>,
    index: usize,
    hash: &str,
    opts: &RunOptions,
) -> crate::error::Result<(Vec<Metric>, Vec<CsvFile>)> {
    let scope = resolve_scope(config, scope)?;
    let universe = config.build_universe()?;
    let history = config.build_history(&universe)?;
    let grid = config.build_grid(universe.clock(), scope)?;

    let obs_specs: Vec<ObservableSpec> = observables
        .unwrap_or(&[])
        .iter()
        .map(|s| {
            parse_observable(s, config)
                .ok_or_else(|| LibError::InvalidInput(format!("invalid observable '{s}'")))
        })
        .collect::<crate::error::Result<_>>()?;
    let obs_ops: Vec<DenseOperator> = obs_specs
        .iter()
        .map(|o| observable_operator(&universe, scope, o))
        .collect::<crate::error::Result<_>>()?;

    let probe = history.condition(scope, grid.node(0))?;
    let dim = probe.psi.dim();
    let mut columns: Vec<String> = vec!["t".into(), "a".into()];
    for k in 0..dim {
        columns.push(format!("psi_re_{k}"));
    }
    for k in 0..dim {
        columns.push(format!("psi_im_{k}"));
    }
    for (spec, s) in obs_specs.iter().zip(observables.unwrap_or(&[])) {
        let _ = spec;
        columns.push(s.clone());
    }

    let mut csv = CsvFile::new(format!("{index:02}_conditional-trace.csv"), hash, &columns);
    let mut min_amp = f64::INFINITY;
    let mut max_dev = 0.0f64;
    let mut first_amp = None;
    for t in grid.nodes() {
        let cond = match history.condition(scope, t) {
            Ok(c) => c,
            Err(LibError::ZeroAmplitude { .. }) => continue,
            Err(e) => return Err(e),
        };
        min_amp = min_amp.min(cond.amplitude);
        let a0 = *first_amp.get_or_insert(cond.amplitude);
        max_dev = max_dev.max((cond.amplitude - a0).abs());
        let mut cells = vec![fmt_float(t), fmt_float(cond.amplitude)];
        for k in 0..dim {
            cells.push(fmt_float(cond.psi.vector()[k].re));
        }
        for k in 0..dim {
            cells.push(fmt_float(cond.psi.vector()[k].im));
        }
        for op in &obs_ops {
            cells.push(fmt_float(op.expectation(&cond.psi).re));
        }
        csv.row(&cells);
    }

    let metrics = vec![
        Metric::check(
            "amplitude-max-deviation",
            max_dev,
            1e-12 * opts.tol_scale,
            "a(t) is constant for constraint histories",
        ),
        Metric::info("amplitude-min", min_amp, "conditioning amplitude floor"),
        Metric::info(
            "constraint-residual",
            history.constraint_residual(),
            "history state lies in the constraint kernel",
        ),
    ];
    Ok((metrics, vec![csv]))
}

fn amplitude_profile(
    config: &ExperimentConfig,
    scope: Option<&str>,
    index: usize,
    hash: &str,
    opts: &RunOptions,
) -> crate::error::Result<(Vec<Metric>, Vec<CsvFile>)> {
    let scope = resolve_scope(config, scope)?;
    let universe = config.build_universe()?;
    let history = config.build_history(&universe)?;
    let grid = config.build_grid(universe.clock(), scope)?;
    let profile = history.amplitude_profile(scope, &grid)?;

    let columns = vec!["t".to_string(), "a".to_string(), "pr".to_string()];
    let mut csv = CsvFile::new(format!("{index:02}_amplitude-profile.csv"), hash, &columns);
    for ((t, a), pr) in profile.samples.iter().zip(profile.densities.iter()) {
        csv.row(&[fmt_float(*t), fmt_float(*a), fmt_float(*pr)]);
    }

    let metrics = vec![
        Metric::check(
            "amplitude-max-deviation",
            profile.max_deviation_from_first(),
            1e-12 * opts.tol_scale,
            "a(t) is constant for constraint histories",
        ),
        Metric::check(
            "probability-normalization",
            (profile.quadrature_sum - 1.0).abs(),
            1e-8 * opts.tol_scale,
            "quadrature sum of Pr(t) over one period equals 1",
        ),
    ];
    Ok((metrics, vec![csv]))
}

fn transition_amplitude(
    config: &ExperimentConfig,
    nodes: usize,
    index: usize,
    hash: &str,
) -> crate::error::Result<(Vec<Metric>, Vec<CsvFile>)> {
    let net = config.build_network()?;
    if net.len() != 2 {
        return Err(LibError::InvalidInput(
            "transition-amplitude is defined for two-clock networks".into(),
        ));
    }
    let cap = config.denominator_cap();
    let t_a = net.local(0)?.classify_spectrum(cap)?.period;
    let t_b = net.local(1)?.classify_spectrum(cap)?.period;
    let t_g = net.classify_global(cap)?.period;

    let columns = vec![
        "tau_a".to_string(),
        "tau_b".to_string(),
        "t".to_string(),
        "f_re".to_string(),
        "f_im".to_string(),
    ];
    let mut csv = CsvFile::new(
        format!("{index:02}_transition-amplitude.csv"),
        hash,
        &columns,
    );

    let interacting = net.global_spectrum()
        != crate::clock::ClockNetwork::free(net.locals().to_vec())?.global_spectrum();
    let omega_a = net.local(0)?.frequencies()[1];
    let omega_b = net.local(1)?.frequencies()[1];
    let mut closed_form_dev = 0.0f64;
    for i in 0..nodes {
        let tau_a = i as f64 * t_a / nodes as f64;
        for j in 0..nodes {
            let tau_b = j as f64 * t_b / nodes as f64;
            for k in 0..nodes {
                let t = k as f64 * t_g / nodes as f64;
                let f = net.transition_amplitude(&[tau_a, tau_b], t)?;
                if !interacting {
                    let expected =
                        (omega_a * (tau_a - t)).cos() * (omega_b * (tau_b - t)).cos();
                    closed_form_dev = closed_form_dev.max((f - expected).norm());
                }
                csv.row(&[
                    fmt_float(tau_a),
                    fmt_float(tau_b),
                    fmt_float(t),
                    fmt_float(f.re),
                    fmt_float(f.im),
                ]);
            }
        }
    }

    let mut metrics = Vec::new();
    if !interacting {
        metrics.push(Metric::check(
            "factorized-cosine-deviation",
            closed_form_dev,
            1e-12,
            "free two-spin amplitude factorizes into cosines",
        ));
    } else {
        metrics.push(Metric::info(
            "nodes",
            nodes as f64,
            "interacting amplitudes sampled (no product closed form)",
        ));
    }
    Ok((metrics, vec![csv]))
}

fn tidit_sweep(
    config: &ExperimentConfig,
    clock: Option<&str>,
    g_values: &[f64],
    index: usize,
    hash: &str,
    opts: &RunOptions,
) -> crate::error::Result<(Vec<Metric>, Vec<CsvFile>)> {
    let n = config.clocks.len();
    let a = match clock {
        None => 0,
        Some(c) => crate::config::clock_index(c, n)
            .ok_or_else(|| LibError::InvalidInput(format!("unknown clock '{c}'")))?,
    };
    let omegas: Vec<f64> = config.clocks.iter().map(|c| c.omega.unwrap_or(1.0)).collect();
    let d_s = config.system.dim.unwrap_or(2);
    let seed = config.system.seed.unwrap_or(1);

    let columns: Vec<String> = [
        "g",
        "spectral_radius",
        "invertible",
        "eps_min",
        "eps_max",
        "n_frozen",
        "n_reversed",
        "factor_min",
        "factor_max",
        "route_max_infidelity",
        "redshift_drift",
        "frozen_dim",
        "stationary_residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut csv = CsvFile::new(format!("{index:02}_tidit-sweep.csv"), hash, &columns);
    let mut metrics = Vec::new();

    for &g in g_values {
        // replace every coupling that touches the swept clock by g
        // (dimensionless convention), leaving the others untouched
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                if j == a || k == a {
                    let (obs, partner) = if j == a { (j, k) } else { (k, j) };
                    pairs.push((obs, partner, g));
                } else if let Some(cp) = &config.couplings {
                    if let Some(existing) = &cp.pairs {
                        for p in existing {
                            let pj = crate::config::clock_index(&p.a, n);
                            let pk = crate::config::clock_index(&p.b, n);
                            if (pj, pk) == (Some(j), Some(k)) || (pj, pk) == (Some(k), Some(j)) {
                                pairs.push((j, k, p.g));
                            }
                        }
                    }
                }
            }
        }
        let net = crate::presets::spin_network(&omegas, &pairs)?;
        let bundle = redshift(
            &UniverseSpec::new(net.clone(), DenseOperator::zeros(d_s))?,
            a,
        )?;
        let dilation = dilation_sign_map(
            &UniverseSpec::new(net.clone(), DenseOperator::zeros(d_s))?,
            a,
        )?;
        let n_frozen = dilation
            .iter()
            .filter(|e| e.kind == DilationKind::Frozen)
            .map(|e| e.multiplicity)
            .sum::<usize>();
        let n_reversed = dilation
            .iter()
            .filter(|e| e.kind == DilationKind::Reversed)
            .map(|e| e.multiplicity)
            .sum::<usize>();
        let factors: Vec<f64> = dilation.iter().filter_map(|e| e.scale_factor).collect();
        let factor_min = factors.iter().cloned().fold(f64::INFINITY, f64::min);
        let factor_max = factors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        let system = if config.system.kind == "paired-random" {
            paired_random_system(&net, d_s, seed, None)?
        } else {
            config.build_system(&net)?
        };
        let universe = UniverseSpec::new(net, system)?;

        let mut route_infidelity = f64::NAN;
        let mut drift = f64::NAN;
        let mut frozen_dim = f64::NAN;
        let mut stationary_residual = f64::NAN;

        if bundle.invertible {
            let history = universe.energy_paired_history()?;
            let grid = config.build_grid(universe.clock(), Scope::Local(a))?;
            let psi0 = history.condition_local(a, grid.node(0))?.psi;
            let traj = propagate_time_dilated(&universe, a, &psi0, &grid)?;
            let mut worst = 0.0f64;
            for (tau, psi) in &traj.samples {
                let conditioned = history.condition_local(a, *tau)?.psi;
                worst = worst.max(1.0 - conditioned.fidelity(psi));
            }
            route_infidelity = worst;
            drift = check_redshift_conservation(&universe, a, &psi0, &grid)?;
            let drift_tol = if bundle.spectral_radius < 1.0 { 1e-10 } else { 1e-8 };
            metrics.push(Metric::check(
                format!("route-equivalence@g={g}"),
                route_infidelity,
                1e-8 * opts.tol_scale,
                "local conditioning matches time-dilated propagation",
            ));
            metrics.push(Metric::check(
                format!("redshift-conservation@g={g}"),
                drift,
                drift_tol * opts.tol_scale,
                "the redshift expectation is conserved along trajectories",
            ));
        } else {
            let split = degenerate_split(&universe, a)?;
            frozen_dim = split.frozen_projector.trace().re;
            stationary_residual = split.stationary_constraint_residual;
            metrics.push(
                Metric::check(
                    format!("stationary-residual@g={g}"),
                    stationary_residual,
                    1e-10 * opts.tol_scale,
                    "frozen-subspace states satisfy the stationary constraint",
                )
                .with_note("degenerate coupling: one redshift eigenspace is frozen"),
            );
        }

        csv.row(&[
            fmt_float(g),
            fmt_float(bundle.spectral_radius),
            if bundle.invertible { "1".into() } else { "0".into() },
            fmt_float(bundle.eigenvalues[0]),
            fmt_float(*bundle.eigenvalues.last().unwrap()),
            format!("{n_frozen}"),
            format!("{n_reversed}"),
            fmt_float(factor_min),
            fmt_float(factor_max),
            fmt_float(route_infidelity),
            fmt_float(drift),
            fmt_float(frozen_dim),
            fmt_float(stationary_residual),
        ]);
    }
    Ok((metrics, vec![csv]))
}
