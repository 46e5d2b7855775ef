//! Declarative experiment configs: parsing, validation and builders.
//!
//! Configs are TOML with the following sections: `clocks` (array of spin or
//! custom clocks), `couplings` (symmetric pairwise couplings, optionally in
//! the dimensionless spin convention), `system` (an explicit Hermitian
//! matrix, a zero Hamiltonian, or a seeded constraint-compatible random
//! matrix), `constraint` (kernel pairing rule or explicit coefficients),
//! `grid`, `tasks` and `output`. Validation reports every violation with a
//! path to the offending key before any computation runs.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{ClockModel, ClockNetwork, InteractionKind, DEFAULT_DENOMINATOR_CAP};
use crate::error::Error as LibError;
use crate::grid::{TimeGrid, DEFAULT_GRID_NODES};
use crate::tensor::{CMatrix, DenseOperator};
use crate::universe::{select_history, HistoryState, Scope, UniverseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// ħ scale applied to couplings on ingest (internal units keep ħ = 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    pub clocks: Vec<ClockConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<CouplingsConfig>,
    pub system: SystemConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<TaskConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    /// "spin" (two-level, spectrum {−ω, +ω}) or "custom".
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsConfig {
    /// When true, pair values follow the dimensionless spin convention:
    /// listing `{a = "A", b = "B", g = v}` means the coefficient of clock
    /// B's Pauli operator in Φ(A) is v, i.e. raw g_AB = v/ω_B.
    #[serde(default)]
    pub dimensionless: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<CouplingPair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingPair {
    pub a: String,
    pub b: String,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// "matrix", "zero" or "paired-random".
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_re: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_im: Option<Vec<Vec<f64>>>,
    /// Seed for "paired-random" system generation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Global clock levels to pair against (distinct indices into the
    /// sorted distinct global spectrum); seeded random choice when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    /// "energy-paired" (default): pair each global clock level W with a
    /// system eigenstate at −W, all with equal weight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    /// Explicit complex coefficients (re, im pairs) over the kernel basis
    /// returned by the constraint solver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Overrides the period derived from the clock spectrum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name")]
pub enum TaskConfig {
    /// Samples a(t) and |ψ(t)⟩ amplitudes (plus selected expectations) over
    /// the grid and writes a CSV trace.
    #[serde(rename = "conditional-trace")]
    ConditionalTrace {
        /// "global" or "local:<clock>"; default "global".
        #[serde(skip_serializing_if = "Option::is_none")]
        scope: Option<String>,
        /// Observables as "sigma_x|sigma_y|sigma_z@<system|clock>".
        #[serde(skip_serializing_if = "Option::is_none")]
        observables: Option<Vec<String>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        required: Option<bool>,
    },
    /// a(t), Pr(t) and the quadrature sum over one period.
    #[serde(rename = "amplitude-profile")]
    AmplitudeProfile {
        #[serde(skip_serializing_if = "Option::is_none")]
        scope: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        required: Option<bool>,
    },
    /// F(τ_A, τ_B | t) sampled on a cubic grid (two-clock networks).
    #[serde(rename = "transition-amplitude")]
    TransitionAmplitude {
        #[serde(skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        required: Option<bool>,
    },
    /// Redshift spectra, dilation factors, route-equivalence fidelities and
    /// degenerate-subspace reports over a list of dimensionless couplings.
    #[serde(rename = "tidit-sweep")]
    TiditSweep {
        #[serde(skip_serializing_if = "Option::is_none")]
        clock: Option<String>,
        g_values: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        required: Option<bool>,
    },
    /// Runs the library invariant suite against this config.
    #[serde(rename = "verify")]
    Verify {
        #[serde(skip_serializing_if = "Option::is_none")]
        required: Option<bool>,
    },
}

impl TaskConfig {
    pub fn label(&self) -> &'static str {
        match self {
            TaskConfig::ConditionalTrace { .. } => "conditional-trace",
            TaskConfig::AmplitudeProfile { .. } => "amplitude-profile",
            TaskConfig::TransitionAmplitude { .. } => "transition-amplitude",
            TaskConfig::TiditSweep { .. } => "tidit-sweep",
            TaskConfig::Verify { .. } => "verify",
        }
    }

    pub fn required(&self) -> bool {
        match self {
            TaskConfig::ConditionalTrace { required, .. }
            | TaskConfig::AmplitudeProfile { required, .. }
            | TaskConfig::TransitionAmplitude { required, .. }
            | TaskConfig::TiditSweep { required, .. }
            | TaskConfig::Verify { required, .. } => required.unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Any of "csv" (task data files) and "json" (run report).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
}

/// A single validation finding with the path of the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("config validation failed:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses and validates a config, returning non-fatal warnings alongside.
pub fn parse_config(text: &str) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    validate(&config, &mut violations, &mut warnings);
    if violations.is_empty() {
        Ok((config, warnings))
    } else {
        Err(ConfigError::Validation(violations))
    }
}

/// Canonical serialized form (used for hashing and round-trips).
pub fn serialize_config(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("validated config serializes")
}

/// Maps a clock label ("A".."Z" or a numeric index) to its position.
pub fn clock_index(label: &str, n: usize) -> Option<usize> {
    let idx = if label.len() == 1 {
        let c = label.chars().next().unwrap();
        if c.is_ascii_uppercase() {
            Some((c as u8 - b'A') as usize)
        } else {
            label.parse::<usize>().ok()
        }
    } else {
        label.parse::<usize>().ok()
    }?;
    (idx < n).then_some(idx)
}

/// Inverse of [`clock_index`] for display.
pub fn clock_label(index: usize) -> String {
    if index < 26 {
        ((b'A' + index as u8) as char).to_string()
    } else {
        index.to_string()
    }
}

/// Parses "global" or "local:<clock>".
pub fn parse_scope(s: &str, n_clocks: usize) -> Option<Scope> {
    if s == "global" {
        return Some(Scope::Global);
    }
    let rest = s.strip_prefix("local:")?;
    clock_index(rest, n_clocks).map(Scope::Local)
}

fn validate(config: &ExperimentConfig, out: &mut Vec<Violation>, warnings: &mut Vec<String>) {
    let mut push = |path: &str, message: String| {
        out.push(Violation {
            path: path.to_string(),
            message,
        })
    };

    if let Some(h) = config.hbar {
        if !(h > 0.0) {
            push("hbar", format!("must be positive, got {h}"));
        }
    }

    let n = config.clocks.len();
    if n == 0 {
        push("clocks", "at least one clock is required".into());
    }
    for (i, c) in config.clocks.iter().enumerate() {
        let base = format!("clocks.{i}");
        match c.kind.as_str() {
            "spin" => {
                match c.omega {
                    Some(w) if w > 0.0 => {}
                    Some(w) => push(&format!("{base}.omega"), format!("must be positive, got {w}")),
                    None => push(&format!("{base}.omega"), "required for spin clocks".into()),
                }
                if c.frequencies.is_some() {
                    push(
                        &format!("{base}.frequencies"),
                        "spin clocks take omega, not frequencies".into(),
                    );
                }
                if let Some(p) = &c.phases {
                    if p.len() != 2 {
                        push(&format!("{base}.phases"), "spin clocks have two phases".into());
                    }
                }
            }
            "custom" => {
                match &c.frequencies {
                    Some(f) if f.len() >= 2 => {
                        if f.windows(2).any(|p| p[1] <= p[0]) {
                            push(
                                &format!("{base}.frequencies"),
                                "must be strictly ascending".into(),
                            );
                        }
                    }
                    Some(_) => push(
                        &format!("{base}.frequencies"),
                        "custom clocks need at least two levels".into(),
                    ),
                    None => push(
                        &format!("{base}.frequencies"),
                        "required for custom clocks".into(),
                    ),
                }
                if let (Some(f), Some(p)) = (&c.frequencies, &c.phases) {
                    if f.len() != p.len() {
                        push(
                            &format!("{base}.phases"),
                            format!("expected {} phases, got {}", f.len(), p.len()),
                        );
                    }
                }
                if c.omega.is_some() {
                    push(&format!("{base}.omega"), "custom clocks take frequencies".into());
                }
            }
            other => push(&format!("{base}.kind"), format!("unknown clock kind '{other}'")),
        }
    }

    if let Some(cp) = &config.couplings {
        if cp.matrix.is_some() && cp.pairs.is_some() {
            push("couplings", "give either matrix or pairs, not both".into());
        }
        if let Some(m) = &cp.matrix {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                push("couplings.matrix", format!("must be {n}×{n}"));
            } else {
                for j in 0..n {
                    if m[j][j] != 0.0 {
                        push(
                            &format!("couplings.{}.{}", clock_label(j), clock_label(j)),
                            "self-couplings must be zero".into(),
                        );
                    }
                    for k in 0..n {
                        if m[j][k] != m[k][j] {
                            push(
                                &format!("couplings.matrix.{j}.{k}"),
                                "matrix must be symmetric".into(),
                            );
                        }
                    }
                }
            }
            if cp.dimensionless {
                push(
                    "couplings.dimensionless",
                    "the dimensionless convention applies to pairs, not a raw matrix".into(),
                );
            }
        }
        if let Some(pairs) = &cp.pairs {
            for (i, p) in pairs.iter().enumerate() {
                let base = format!("couplings.pairs.{i}");
                let a = clock_index(&p.a, n);
                let b = clock_index(&p.b, n);
                if a.is_none() {
                    push(&format!("{base}.a"), format!("unknown clock '{}'", p.a));
                }
                if b.is_none() {
                    push(&format!("{base}.b"), format!("unknown clock '{}'", p.b));
                }
                if let (Some(a), Some(b)) = (a, b) {
                    if a == b {
                        push(
                            &format!("couplings.{}.{}", p.a, p.b),
                            "self-couplings must be zero".into(),
                        );
                    }
                }
            }
        }
        if cp.dimensionless && config.clocks.iter().any(|c| c.kind != "spin") {
            push(
                "couplings.dimensionless",
                "dimensionless couplings require an all-spin network".into(),
            );
        }
    }

    match config.system.kind.as_str() {
        "matrix" => match &config.system.matrix_re {
            None => push("system.matrix_re", "required for kind = \"matrix\"".into()),
            Some(re) => {
                let d = re.len();
                if d == 0 || re.iter().any(|row| row.len() != d) {
                    push("system.matrix_re", "must be square and non-empty".into());
                } else {
                    if let Some(cfg_d) = config.system.dim {
                        if cfg_d != d {
                            push(
                                "system.dim",
                                format!("dim {cfg_d} does not match matrix size {d}"),
                            );
                        }
                    }
                    let im = config
                        .system
                        .matrix_im
                        .clone()
                        .unwrap_or_else(|| vec![vec![0.0; d]; d]);
                    if im.len() != d || im.iter().any(|row| row.len() != d) {
                        push("system.matrix_im", format!("must be {d}×{d}"));
                    } else {
                        let scale = re
                            .iter()
                            .flatten()
                            .chain(im.iter().flatten())
                            .fold(0.0f64, |m, x| m.max(x.abs()))
                            .max(f64::MIN_POSITIVE);
                        'herm: for i in 0..d {
                            for j in 0..d {
                                let sym = (re[i][j] - re[j][i]).abs();
                                let asym = (im[i][j] + im[j][i]).abs();
                                if sym > 1e-12 * scale || asym > 1e-12 * scale {
                                    push("system.matrix_re", "matrix must be Hermitian".into());
                                    break 'herm;
                                }
                            }
                        }
                    }
                }
            }
        },
        "zero" | "paired-random" => {
            match config.system.dim {
                Some(d) if d >= 1 => {}
                Some(d) => push("system.dim", format!("must be at least 1, got {d}")),
                None => push("system.dim", "required for zero / paired-random systems".into()),
            }
            if config.system.matrix_re.is_some() {
                push("system.matrix_re", "only valid for kind = \"matrix\"".into());
            }
            if config.system.kind == "paired-random" {
                if let (Some(levels), Some(d)) = (&config.system.levels, config.system.dim) {
                    if levels.len() != d {
                        push("system.levels", format!("expected {d} level indices"));
                    }
                    let mut sorted = levels.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != levels.len() {
                        push("system.levels", "level indices must be distinct".into());
                    }
                }
            }
        }
        other => push("system.kind", format!("unknown system kind '{other}'")),
    }

    if let Some(c) = &config.constraint {
        if let Some(rule) = &c.rule {
            if rule != "energy-paired" {
                push("constraint.rule", format!("unknown rule '{rule}'"));
            }
            if c.coefficients.is_some() {
                push("constraint", "give either rule or coefficients, not both".into());
            }
        }
    }

    if let Some(g) = &config.grid {
        if let Some(nodes) = g.nodes {
            if nodes < 2 {
                push("grid.nodes", format!("need at least 2 nodes, got {nodes}"));
            }
        }
        if let Some(p) = g.period {
            if !(p > 0.0) {
                push("grid.period", format!("must be positive, got {p}"));
            }
        }
        if g.denominator_cap == Some(0) {
            push("grid.denominator_cap", "must be positive".into());
        }
    }

    for (i, task) in config.tasks.iter().enumerate() {
        let base = format!("tasks.{i}");
        match task {
            TaskConfig::ConditionalTrace { scope, observables, .. } => {
                if let Some(s) = scope {
                    if parse_scope(s, n).is_none() {
                        push(&format!("{base}.scope"), format!("invalid scope '{s}'"));
                    }
                }
                if let Some(obs) = observables {
                    for (k, o) in obs.iter().enumerate() {
                        if parse_observable(o, config).is_none() {
                            push(
                                &format!("{base}.observables.{k}"),
                                format!("invalid observable '{o}'"),
                            );
                        }
                    }
                }
            }
            TaskConfig::AmplitudeProfile { scope, .. } => {
                if let Some(s) = scope {
                    if parse_scope(s, n).is_none() {
                        push(&format!("{base}.scope"), format!("invalid scope '{s}'"));
                    }
                }
            }
            TaskConfig::TransitionAmplitude { nodes, .. } => {
                if let Some(k) = nodes {
                    if *k < 2 {
                        push(&format!("{base}.nodes"), "need at least 2 nodes per axis".into());
                    }
                }
                if n != 2 {
                    push(&base, "transition-amplitude is defined for two-clock networks".into());
                }
            }
            TaskConfig::TiditSweep { clock, g_values, .. } => {
                if n < 2 {
                    push(&base, "tidit-sweep needs at least two local clocks".into());
                }
                if g_values.is_empty() {
                    push(&format!("{base}.g_values"), "must be non-empty".into());
                }
                if let Some(c) = clock {
                    if clock_index(c, n).is_none() {
                        push(&format!("{base}.clock"), format!("unknown clock '{c}'"));
                    }
                }
                if config.clocks.iter().any(|c| c.kind != "spin") {
                    push(&base, "tidit-sweep requires an all-spin network".into());
                }
            }
            TaskConfig::Verify { .. } => {}
        }
    }

    if let Some(o) = &config.output {
        if let Some(f) = &o.formats {
            for (i, fmt) in f.iter().enumerate() {
                if fmt != "csv" && fmt != "json" {
                    push(&format!("output.formats.{i}"), format!("unknown format '{fmt}'"));
                }
            }
        }
    }

    // degenerate-α warning: equal spin frequencies make the free global
    // clock spectrum degenerate and rule out global time-state bases
    if out.is_empty() {
        if let Ok(net) = build_network_unchecked(config) {
            let mut w = net.global_spectrum();
            w.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            if w.windows(2).any(|p| p[1] - p[0] <= 1e-9 * scale) {
                warnings.push(
                    "degenerate global clock spectrum (for two spins this is the |α| = 1 case); \
                     no global time-state basis exists"
                        .to_string(),
                );
            }
        }
    }
}

/// Observable names: "sigma_x", "sigma_y", "sigma_z", optionally suffixed
/// with "@system" or "@<clock>".
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    pub name: String,
    /// `None` targets the system factor.
    pub clock: Option<usize>,
}

pub fn parse_observable(s: &str, config: &ExperimentConfig) -> Option<ObservableSpec> {
    let (name, target) = match s.split_once('@') {
        Some((n, t)) => (n, t),
        None => (s, "system"),
    };
    if !matches!(name, "sigma_x" | "sigma_y" | "sigma_z") {
        return None;
    }
    let clock = if target == "system" {
        None
    } else {
        let idx = clock_index(target, config.clocks.len())?;
        if config.clocks[idx].kind != "spin" {
            return None;
        }
        Some(idx)
    };
    Some(ObservableSpec {
        name: name.to_string(),
        clock,
    })
}

fn build_clock(c: &ClockConfig) -> crate::error::Result<ClockModel> {
    match c.kind.as_str() {
        "spin" => {
            let omega = c.omega.unwrap_or(1.0);
            match &c.phases {
                Some(p) => ClockModel::new(vec![-omega, omega], p.clone()),
                None => ClockModel::spin(omega),
            }
        }
        _ => {
            let freqs = c.frequencies.clone().unwrap_or_default();
            match &c.phases {
                Some(p) => ClockModel::new(freqs, p.clone()),
                None => ClockModel::with_spectrum(freqs),
            }
        }
    }
}

fn build_network_unchecked(config: &ExperimentConfig) -> crate::error::Result<ClockNetwork> {
    let clocks: Vec<ClockModel> = config
        .clocks
        .iter()
        .map(build_clock)
        .collect::<crate::error::Result<_>>()?;
    let n = clocks.len();
    let hbar = config.hbar.unwrap_or(1.0);
    let mut raw = vec![vec![0.0f64; n]; n];
    let mut any = false;
    if let Some(cp) = &config.couplings {
        if let Some(m) = &cp.matrix {
            for j in 0..n {
                for k in 0..n {
                    raw[j][k] = m[j][k] * hbar;
                    any |= m[j][k] != 0.0;
                }
            }
        }
        if let Some(pairs) = &cp.pairs {
            for p in pairs {
                let a = clock_index(&p.a, n).ok_or_else(|| {
                    LibError::InvalidInput(format!("unknown clock label '{}'", p.a))
                })?;
                let b = clock_index(&p.b, n).ok_or_else(|| {
                    LibError::InvalidInput(format!("unknown clock label '{}'", p.b))
                })?;
                let value = if cp.dimensionless {
                    // dimensionless: g multiplies the partner's Pauli operator
                    // in Φ(observer), so raw = g/ω_partner
                    let omega_b = config.clocks[b].omega.unwrap_or(1.0);
                    p.g / omega_b
                } else {
                    p.g
                };
                raw[a][b] = value * hbar;
                raw[b][a] = value * hbar;
                any |= p.g != 0.0;
            }
        }
    }
    let interaction = if any {
        InteractionKind::GravitationalLike
    } else {
        InteractionKind::None
    };
    ClockNetwork::new(clocks, raw, interaction)
}

impl ExperimentConfig {
    pub fn build_network(&self) -> crate::error::Result<ClockNetwork> {
        build_network_unchecked(self)
    }

    pub fn build_universe(&self) -> crate::error::Result<UniverseSpec> {
        let net = self.build_network()?;
        let system = self.build_system(&net)?;
        UniverseSpec::new(net, system)
    }

    pub fn build_system(&self, net: &ClockNetwork) -> crate::error::Result<DenseOperator> {
        match self.system.kind.as_str() {
            "zero" => Ok(DenseOperator::zeros(self.system.dim.unwrap_or(1))),
            "matrix" => {
                let re = self
                    .system
                    .matrix_re
                    .as_ref()
                    .ok_or_else(|| LibError::InvalidInput("system.matrix_re missing".into()))?;
                let d = re.len();
                let im = self
                    .system
                    .matrix_im
                    .clone()
                    .unwrap_or_else(|| vec![vec![0.0; d]; d]);
                let mut mat = CMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        mat[(i, j)] = C64::new(re[i][j], im[i][j]);
                    }
                }
                DenseOperator::new(mat)
            }
            "paired-random" => {
                let d = self.system.dim.unwrap_or(2);
                let seed = self.system.seed.unwrap_or(1);
                crate::presets::paired_random_system(net, d, seed, self.system.levels.as_deref())
            }
            other => Err(LibError::InvalidInput(format!(
                "unknown system kind '{other}'"
            ))),
        }
    }

    /// The history state selected by the constraint section
    /// (energy-paired by default).
    pub fn build_history(&self, universe: &UniverseSpec) -> crate::error::Result<HistoryState> {
        match &self.constraint {
            Some(ConstraintConfig {
                coefficients: Some(coeffs),
                ..
            }) => {
                let basis = universe.solve_constraint()?;
                if coeffs.len() != basis.len() {
                    return Err(LibError::DimensionMismatch {
                        context: "constraint.coefficients (one per kernel basis vector)",
                        expected: basis.len(),
                        actual: coeffs.len(),
                    });
                }
                let cs: Vec<C64> = coeffs.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                select_history(&basis, &cs)
            }
            _ => universe.energy_paired_history(),
        }
    }

    pub fn denominator_cap(&self) -> u64 {
        self.grid
            .as_ref()
            .and_then(|g| g.denominator_cap)
            .unwrap_or(DEFAULT_DENOMINATOR_CAP)
    }

    pub fn grid_nodes(&self) -> usize {
        self.grid
            .as_ref()
            .and_then(|g| g.nodes)
            .unwrap_or(DEFAULT_GRID_NODES)
    }

    /// Grid spanning one period of the scoped clock (global spectrum or a
    /// local clock), honoring config overrides.
    pub fn build_grid(&self, net: &ClockNetwork, scope: Scope) -> crate::error::Result<TimeGrid> {
        let nodes = self.grid_nodes();
        if let Some(period) = self.grid.as_ref().and_then(|g| g.period) {
            return Ok(TimeGrid::periodic(period, nodes));
        }
        let period = match scope {
            Scope::Global => net.classify_global(self.denominator_cap())?.period,
            Scope::Local(j) => net.local(j)?.classify_spectrum(self.denominator_cap())?.period,
        };
        Ok(TimeGrid::periodic(period, nodes))
    }
}

/// Applies a dotted-path override (`couplings.pairs.0.g = value`) to a
/// config text, returning the new text. Values parse as TOML scalars.
pub fn override_path(text: &str, path: &str, value: &str) -> Result<String, ConfigError> {
    let mut root: toml::Value =
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let parsed: toml::Value = parse_scalar(value);
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::Validation(vec![Violation {
            path: path.to_string(),
            message: "empty override path".into(),
        }]));
    }
    let mut cursor = &mut root;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        match cursor {
            toml::Value::Table(table) => {
                if last {
                    table.insert(seg.to_string(), parsed.clone());
                    break;
                }
                cursor = table.get_mut(*seg).ok_or_else(|| {
                    ConfigError::Validation(vec![Violation {
                        path: segments[..=i].join("."),
                        message: "no such key".into(),
                    }])
                })?;
            }
            toml::Value::Array(arr) => {
                let idx: usize = seg.parse().map_err(|_| {
                    ConfigError::Validation(vec![Violation {
                        path: segments[..=i].join("."),
                        message: "array index expected".into(),
                    }])
                })?;
                let len = arr.len();
                let slot = arr.get_mut(idx).ok_or_else(|| {
                    ConfigError::Validation(vec![Violation {
                        path: segments[..=i].join("."),
                        message: format!("index {idx} out of bounds (len {len})"),
                    }])
                })?;
                if last {
                    *slot = parsed.clone();
                    break;
                }
                cursor = slot;
            }
            _ => {
                return Err(ConfigError::Validation(vec![Violation {
                    path: segments[..=i].join("."),
                    message: "cannot descend into a scalar".into(),
                }]))
            }
        }
    }
    toml::to_string(&root).map_err(|e| ConfigError::Syntax(e.to_string()))
}

fn parse_scalar(value: &str) -> toml::Value {
    if let Ok(b) = value.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = value.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = value.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(value.to_string())
}
