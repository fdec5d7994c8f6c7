//! Experiment configuration: TOML schema, validation and conversion into
//! library objects. Every validation error carries the line it refers to.

use fracreg::ode::TimeFn;
use fracreg::parabolic::SpaceTimeFn;
use fracreg::regularity::KernelForm;
use fracreg::{HistorySpec, QuadratureSpec, SpaceKernel, SpaceKernelFamily, SpaceModulation, SpatialTail, StartBasis, TimeKernel, TimeModulation};
use serde::Deserialize;
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub struct ConfigError {
    /// 1-based; 0 when the error is not tied to a config file.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SolveOde,
    SolveParabolic,
    EstimateHolder,
    SweepAlpha,
    ProbeMeasure,
    VerifyInvariants,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SolveOde => "solve-ode",
            Experiment::SolveParabolic => "solve-parabolic",
            Experiment::EstimateHolder => "estimate-holder",
            Experiment::SweepAlpha => "sweep-alpha",
            Experiment::ProbeMeasure => "probe-measure",
            Experiment::VerifyInvariants => "verify-invariants",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Raw {
    /// Optional; when present it must match the subcommand.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    pub kernel: KernelBlock,
    #[serde(default)]
    pub space: Option<SpaceBlock>,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub quadrature: QuadBlock,
    #[serde(default)]
    pub holder: Option<HolderBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub probe: Option<ProbeBlock>,
    #[serde(default)]
    pub invariants: Option<InvariantsBlock>,
    #[serde(default)]
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub alpha: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub big_lambda: f64,
    /// Absent means the reference (Caputo) kernel.
    #[serde(default)]
    pub modulation: Option<TimeModulationCfg>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeModulationCfg {
    Constant { value: f64 },
    CosSum { a: f64, b: f64, freq: f64 },
    CosLag { a: f64, b: f64, freq: f64 },
    Piecewise { near: f64, far: f64, split: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceBlock {
    pub sigma: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub big_lambda: f64,
    /// Isaacs family, `inf` over the outer index of `sup` over the inner one.
    /// Absent means the fractional Laplacian.
    #[serde(default)]
    pub members: Option<Vec<Vec<SpaceModulationCfg>>>,
    pub x_half_width: f64,
    pub nx: usize,
    #[serde(default)]
    pub tail: TailCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceModulationCfg {
    Constant { value: f64 },
    Piecewise { near: f64, far: f64, split: f64 },
    CosX { a: f64, b: f64, freq: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailCfg {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Extension,
    Growth {
        rate: f64,
        exponent: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub rhs: RhsCfg,
    #[serde(default)]
    pub history: HistoryCfg,
    #[serde(default)]
    pub damping: f64,
    #[serde(default = "one")]
    pub source_scale: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RhsCfg {
    Zero,
    Constant { value: f64 },
    /// `Σ a·sin(w t + p)` for rows `[a, w, p]`.
    Trig { terms: Vec<[f64; 3]> },
    /// `Σ a·sin(k x + w t + p)` for rows `[a, k, w, p]`.
    TrigXt { terms: Vec<[f64; 4]> },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HistoryCfg {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Power {
        scale: f64,
        rate: f64,
        exponent: f64,
        offset: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadBlock {
    pub tail_cutoff_error: Option<f64>,
    pub history_rel_tol: Option<f64>,
    /// "power" or "linear".
    pub start_basis: Option<String>,
    pub gauss_points: Option<usize>,
    pub grading_levels: Option<usize>,
    pub far_field_panels: Option<usize>,
    pub max_intervals: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Radii {
    pub first: f64,
    #[serde(default = "half")]
    pub ratio: f64,
    pub count: usize,
}

impl Radii {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.first * self.ratio.powi(k as i32)).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderBlock {
    #[serde(default)]
    pub x0: f64,
    pub t0: Option<f64>,
    pub radii: Radii,
    /// Time interval for the ODE modulus fit.
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub alphas: Vec<f64>,
    pub radii: Radii,
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub x0: f64,
    pub t0: Option<f64>,
    /// `‖f‖_∞` used to normalise constants; defaults to a sampled estimate.
    pub rhs_sup: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    pub t0: Option<f64>,
    #[serde(default = "one")]
    pub big_m: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default)]
    pub lepsilon: Option<LEpsilonCfg>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LEpsilonCfg {
    pub r: f64,
    #[serde(default = "one")]
    pub eps0: f64,
    #[serde(default)]
    pub c0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantsBlock {
    #[serde(default = "twenty")]
    pub trials: usize,
}

/// Artifact directory; `--out` takes precedence.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: std::path::PathBuf,
}

/// Flattens the config into dotted `key = value` pairs for the manifest echo.
pub fn echo(source: &str) -> Vec<(String, String)> {
    fn walk(prefix: &str, t: &toml::Table, out: &mut Vec<(String, String)>) {
        for (k, v) in t {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                toml::Value::Table(sub) => walk(&key, sub, out),
                other => out.push((key, other.to_string())),
            }
        }
    }
    let mut out = Vec::new();
    if let Ok(t) = source.parse::<toml::Table>() {
        walk("", &t, &mut out);
    }
    out
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn twenty() -> usize {
    20
}

/// A validated configuration with its library objects built.
#[derive(Clone)]
pub struct Config {
    pub experiment: Experiment,
    pub raw: Raw,
    pub kernel: TimeKernel,
    pub kernel_form: KernelForm,
    pub family: Option<SpaceKernelFamily>,
    pub tail: SpatialTail,
    pub history: HistorySpec,
    pub rhs: RhsCfg,
    pub quadrature: QuadratureSpec,
}

impl Config {
    pub fn parse(source: &str, experiment: Experiment) -> Result<Self, ConfigError> {
        let raw: Raw = toml::from_str(source).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(source, s.start)).unwrap_or(1),
            message: e.message().to_string(),
        })?;
        let v = Validator { source };
        if let Some(e) = raw.experiment {
            v.require(e == experiment, "", "experiment", format!("config is for {} but {} was requested", e.name(), experiment.name()))?;
        }
        v.check(&raw, experiment)?;
        let kernel = build_kernel(&raw.kernel).map_err(|e| v.err("kernel", "alpha", e.to_string()))?;
        let kernel_form = match &raw.kernel.modulation {
            None => KernelForm::Caputo,
            Some(m) => KernelForm::Modulated { lambda: raw.kernel.lambda, big_lambda: raw.kernel.big_lambda, rho: time_modulation(m) },
        };
        let family = match &raw.space {
            None => None,
            Some(s) => Some(build_family(s).map_err(|e| v.err("space", "members", e.to_string()))?),
        };
        let tail = match raw.space.as_ref().map(|s| &s.tail) {
            None | Some(TailCfg::Zero) => SpatialTail::Constant(0.0),
            Some(TailCfg::Constant { value }) => SpatialTail::Constant(*value),
            Some(TailCfg::Extension) => SpatialTail::Extension,
            Some(TailCfg::Growth { rate, exponent }) => SpatialTail::Growth { rate: *rate, exponent: *exponent },
        };
        let history = match raw.problem.history {
            HistoryCfg::Zero => Ok(HistorySpec::zero()),
            HistoryCfg::Constant { value } => HistorySpec::constant(value),
            HistoryCfg::Power { scale, rate, exponent, offset } => HistorySpec::power(scale, rate, exponent, offset),
        }
        .map_err(|e| v.err("problem", "history", e.to_string()))?;
        let quadrature = build_quadrature(&raw.quadrature).map_err(|m| v.err("quadrature", "start_basis", m))?;
        let rhs = raw.problem.rhs.clone();
        Ok(Config { experiment, kernel, kernel_form, family, tail, history, rhs, quadrature, raw })
    }

    pub fn time_rhs(&self) -> TimeFn {
        match self.rhs.clone() {
            RhsCfg::Zero => Arc::new(|_| 0.0),
            RhsCfg::Constant { value } => Arc::new(move |_| value),
            RhsCfg::Trig { terms } => Arc::new(move |t| terms.iter().map(|[a, w, p]| a * (w * t + p).sin()).sum()),
            RhsCfg::TrigXt { terms } => Arc::new(move |t| terms.iter().map(|[a, _, w, p]| a * (w * t + p).sin()).sum()),
        }
    }

    pub fn space_time_rhs(&self) -> SpaceTimeFn {
        match self.rhs.clone() {
            RhsCfg::TrigXt { terms } => Arc::new(move |x, t| terms.iter().map(|[a, k, w, p]| a * (k * x + w * t + p).sin()).sum()),
            _ => {
                let f = self.time_rhs();
                Arc::new(move |_, t| f(t))
            }
        }
    }

    /// `sup |f|` sampled on the problem grid (and the spatial grid if any).
    pub fn rhs_sup(&self) -> f64 {
        let p = &self.raw.problem;
        let n = ((p.t_end - p.t_start) / p.step).round() as usize;
        let f = self.space_time_rhs();
        let xs: Vec<f64> = match &self.raw.space {
            Some(s) => (0..s.nx).map(|i| -s.x_half_width + 2.0 * s.x_half_width * i as f64 / (s.nx as f64 - 1.0)).collect(),
            None => vec![0.0],
        };
        let mut m = 0.0f64;
        for j in 0..=n {
            let t = p.t_start + j as f64 * p.step;
            for &x in &xs {
                m = m.max(f(x, t).abs());
            }
        }
        m
    }
}

fn build_kernel(k: &KernelBlock) -> fracreg::Result<TimeKernel> {
    match &k.modulation {
        None => TimeKernel::caputo(k.alpha),
        Some(m) => TimeKernel::modulated(k.alpha, k.lambda, k.big_lambda, time_modulation(m)),
    }
}

pub fn time_modulation(m: &TimeModulationCfg) -> TimeModulation {
    match *m {
        TimeModulationCfg::Constant { value } => TimeModulation::Constant(value),
        TimeModulationCfg::CosSum { a, b, freq } => TimeModulation::CosSum { a, b, freq },
        TimeModulationCfg::CosLag { a, b, freq } => TimeModulation::CosLag { a, b, freq },
        TimeModulationCfg::Piecewise { near, far, split } => TimeModulation::Piecewise { near, far, split },
    }
}

fn build_family(s: &SpaceBlock) -> fracreg::Result<SpaceKernelFamily> {
    match &s.members {
        None => SpaceKernelFamily::fractional_laplacian(s.sigma),
        Some(rows) => {
            let members = rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|m| {
                            SpaceKernel::new(match *m {
                                SpaceModulationCfg::Constant { value } => SpaceModulation::Constant(value),
                                SpaceModulationCfg::Piecewise { near, far, split } => SpaceModulation::Piecewise { near, far, split },
                                SpaceModulationCfg::CosX { a, b, freq } => SpaceModulation::CosX { a, b, freq },
                            })
                        })
                        .collect()
                })
                .collect();
            SpaceKernelFamily::new(s.sigma, s.lambda, s.big_lambda, members)
        }
    }
}

fn build_quadrature(q: &QuadBlock) -> Result<QuadratureSpec, String> {
    let mut spec = QuadratureSpec::default();
    if let Some(v) = q.tail_cutoff_error {
        spec.tail_cutoff_error = v;
    }
    if let Some(v) = q.history_rel_tol {
        spec.history_rel_tol = v;
    }
    if let Some(b) = &q.start_basis {
        spec.start_basis = match b.as_str() {
            "power" => StartBasis::Power,
            "linear" => StartBasis::Linear,
            other => return Err(format!("unknown start basis {other:?} (expected \"power\" or \"linear\")")),
        };
    }
    if let Some(v) = q.gauss_points {
        spec.gauss_points = v;
    }
    if let Some(v) = q.grading_levels {
        spec.grading_levels = v;
    }
    if let Some(v) = q.far_field_panels {
        spec.far_field_panels = v;
    }
    if let Some(v) = q.max_intervals {
        spec.max_intervals = v;
    }
    Ok(spec)
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

struct Validator<'a> {
    source: &'a str,
}

impl Validator<'_> {
    /// Line of `key` inside `[table]` (or of the table header, or line 1).
    fn locate(&self, table: &str, key: &str) -> usize {
        let mut current = String::new();
        let mut header = None;
        for (n, line) in self.source.lines().enumerate() {
            let l = line.trim();
            if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                current = name.trim().to_string();
                if current == table {
                    header = Some(n + 1);
                }
                continue;
            }
            let Some((k, _)) = l.split_once('=') else { continue };
            let k = k.trim();
            if (current == table && k == key) || (current.is_empty() && (k == format!("{table}.{key}") || (table.is_empty() && k == key))) {
                return n + 1;
            }
        }
        header.unwrap_or(1)
    }

    fn err(&self, table: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let message = message.into();
        let full = if table.is_empty() { format!("{key}: {message}") } else { format!("{table}.{key}: {message}") };
        ConfigError { line: self.locate(table, key), message: full }
    }

    fn require(&self, ok: bool, table: &str, key: &str, message: impl Into<String>) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(self.err(table, key, message))
        }
    }

    fn check(&self, raw: &Raw, experiment: Experiment) -> Result<(), ConfigError> {
        let k = &raw.kernel;
        self.require(k.alpha > 0.0 && k.alpha < 1.0, "kernel", "alpha", format!("α = {} must lie in (0, 1)", k.alpha))?;
        self.require(k.lambda > 0.0 && k.lambda.is_finite(), "kernel", "lambda", "λ must be positive")?;
        self.require(k.big_lambda >= k.lambda && k.big_lambda.is_finite(), "kernel", "big_lambda", "Λ must be finite and at least λ")?;

        let p = &raw.problem;
        self.require(p.step > 0.0 && p.step.is_finite(), "problem", "step", "step must be positive")?;
        self.require(p.t_start.is_finite() && p.t_end > p.t_start && p.t_end.is_finite(), "problem", "t_end", "need t_start < t_end")?;
        self.require(p.damping >= 0.0, "problem", "damping", "damping must be nonnegative")?;
        self.require(p.source_scale >= 0.0, "problem", "source_scale", "source scale must be nonnegative")?;
        match &p.rhs {
            RhsCfg::Constant { value } => self.require(value.is_finite(), "problem", "rhs", "rhs value must be finite")?,
            RhsCfg::Trig { terms } => self.require(terms.iter().flatten().all(|v| v.is_finite()), "problem", "rhs", "rhs terms must be finite")?,
            RhsCfg::TrigXt { terms } => {
                self.require(terms.iter().flatten().all(|v| v.is_finite()), "problem", "rhs", "rhs terms must be finite")?;
                self.require(raw.space.is_some(), "problem", "rhs", "trig-xt needs a [space] block")?;
            }
            RhsCfg::Zero => {}
        }

        if let Some(s) = &raw.space {
            self.require(s.sigma > 0.0 && s.sigma < 1.0, "space", "sigma", format!("σ = {} must lie in (0, 1)", s.sigma))?;
            self.require(s.lambda > 0.0, "space", "lambda", "λ must be positive")?;
            self.require(s.big_lambda >= s.lambda, "space", "big_lambda", "Λ must be at least λ")?;
            self.require(s.x_half_width > 0.0 && s.x_half_width.is_finite(), "space", "x_half_width", "half width must be positive")?;
            self.require(s.nx >= 3, "space", "nx", "need at least 3 spatial nodes")?;
        }
        let needs_space = matches!(experiment, Experiment::SolveParabolic);
        self.require(!needs_space || raw.space.is_some(), "", "experiment", "solve-parabolic needs a [space] block")?;

        if let Some(h) = &raw.holder {
            self.check_radii("holder", &h.radii)?;
        }
        if matches!(experiment, Experiment::EstimateHolder) {
            self.require(raw.holder.is_some(), "", "experiment", "estimate-holder needs a [holder] block")?;
        }
        if let Some(s) = &raw.sweep {
            self.require(!s.alphas.is_empty(), "sweep", "alphas", "no alphas given")?;
            for &a in &s.alphas {
                self.require(a > 0.0 && a <= 0.995, "sweep", "alphas", format!("α = {a} must lie in (0, 0.995]"))?;
            }
            self.require(s.alphas.windows(2).all(|w| w[1] > w[0]), "sweep", "alphas", "alphas must be strictly increasing")?;
            self.check_radii("sweep", &s.radii)?;
        }
        if matches!(experiment, Experiment::SweepAlpha) {
            self.require(raw.sweep.is_some(), "", "experiment", "sweep-alpha needs a [sweep] block")?;
        }
        if let Some(pr) = &raw.probe {
            self.require(pr.big_m > 0.0, "probe", "big_m", "M must be positive")?;
            self.require(pr.c0 >= 0.0, "probe", "c0", "C₀ must be nonnegative")?;
            if let Some(l) = &pr.lepsilon {
                self.require(l.r > 0.0 && l.eps0 > 0.0 && l.c0 >= 0.0, "probe", "lepsilon", "need r > 0, eps0 > 0, c0 ≥ 0")?;
            }
        }
        if let Some(i) = &raw.invariants {
            self.require(i.trials >= 1, "invariants", "trials", "need at least one trial")?;
        }
        let q = &raw.quadrature;
        self.require(q.tail_cutoff_error.is_none_or(|v| v > 0.0), "quadrature", "tail_cutoff_error", "must be positive")?;
        self.require(q.history_rel_tol.is_none_or(|v| v > 0.0), "quadrature", "history_rel_tol", "must be positive")?;
        self.require(q.gauss_points.is_none_or(|v| (2..=64).contains(&v)), "quadrature", "gauss_points", "must lie in 2..=64")?;
        self.require(q.max_intervals.is_none_or(|v| v >= 16), "quadrature", "max_intervals", "must be at least 16")?;
        Ok(())
    }

    fn check_radii(&self, table: &str, r: &Radii) -> Result<(), ConfigError> {
        self.require(r.first > 0.0 && r.first.is_finite(), table, "radii", "first radius must be positive")?;
        self.require(r.ratio > 0.0 && r.ratio < 1.0, table, "radii", "radius ratio must lie in (0, 1)")?;
        self.require(r.count >= 4, table, "radii", "at least 4 radii are needed")
    }
}
