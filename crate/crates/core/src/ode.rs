//! The time-only problem `D u = c₀ f − C₁ u` on a uniform grid, envelopes by
//! sup/inf convolution, and the comparison/energy verifiers.

use crate::error::{invalid, precondition, Error, Result};
use crate::fracops::{QuadratureSpec, StencilRow, TimeStencil};
use crate::grid::{node_count, HistoryKind, HistorySpec, SpaceTimeGridFunction, TimeGridFunction};
use crate::kernels::TimeKernel;
use std::sync::Arc;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct OdeProblem {
    pub kernel: TimeKernel,
    pub rhs: TimeFn,
    pub history: HistorySpec,
    pub damping: f64,
    pub source_scale: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
}

impl std::fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeProblem")
            .field("kernel", &self.kernel)
            .field("history", &self.history)
            .field("damping", &self.damping)
            .field("source_scale", &self.source_scale)
            .field("t_start", &self.t_start)
            .field("t_end", &self.t_end)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

impl OdeProblem {
    /// `D v = f` from rest: zero history, no damping, unit source scale.
    pub fn new(kernel: TimeKernel, rhs: TimeFn, t_start: f64, t_end: f64, step: f64) -> Self {
        Self { kernel, rhs, history: HistorySpec::zero(), damping: 0.0, source_scale: 1.0, t_start, t_end, step }
    }

    pub fn with_history(mut self, history: HistorySpec) -> Self {
        self.history = history;
        self
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    pub fn with_source_scale(mut self, c0: f64) -> Self {
        self.source_scale = c0;
        self
    }

    pub fn validate(&self) -> Result<usize> {
        if !(self.step > 0.0) {
            return invalid(format!("grid step ε = {} must be positive", self.step));
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            return invalid(format!("damping C₁ = {} must be finite and ≥ 0", self.damping));
        }
        if !(self.source_scale >= 0.0) || !self.source_scale.is_finite() {
            return invalid(format!("source scale c₀ = {} must be finite and ≥ 0", self.source_scale));
        }
        node_count(self.t_start, self.t_end, self.step)
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub solution: TimeGridFunction,
    /// `D v_j + C₁ v_j − c₀ f_j` at each node (0 at the initial node).
    pub residuals: Vec<f64>,
    /// `W_j` (time diagonal plus damping).
    pub diagonals: Vec<f64>,
}

impl OdeSolution {
    /// `max_j |res_j| / (|f_j| + W_j|v_j|)`, the scale-free residual.
    pub fn max_relative_residual(&self, rhs: &dyn Fn(f64) -> f64) -> f64 {
        let v = &self.solution;
        (1..v.len())
            .map(|j| {
                let scale = rhs(v.time(j)).abs() + self.diagonals[j] * v.value(j).abs();
                if scale == 0.0 {
                    self.residuals[j].abs()
                } else {
                    self.residuals[j].abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Forward recursion of the implicit scheme: at step `j`,
/// `W_j v_j = c₀ f_j + Σ_{i<j} w_{ji} v_i + ∫ φ K` with `W_j = Σ w_{ji} + H_j + C₁`.
pub fn solve_discrete(p: &OdeProblem, spec: &QuadratureSpec) -> Result<OdeSolution> {
    let n = p.validate()?;
    let stencil = TimeStencil::new(&p.kernel, p.t_start, p.step, n, spec)?;
    solve_with_stencil(p, &stencil)
}

pub fn solve_with_stencil(p: &OdeProblem, stencil: &TimeStencil) -> Result<OdeSolution> {
    let n = p.validate()?;
    if stencil.len() < n {
        return invalid("stencil shorter than the problem grid");
    }
    let mut v = vec![0.0; n];
    v[0] = p.history.eval(p.t_start);
    let mut residuals = vec![0.0; n];
    let mut diagonals = vec![0.0; n];
    for j in 1..n {
        let t = p.t_start + j as f64 * p.step;
        let f = (p.rhs)(t);
        if !f.is_finite() {
            return invalid(format!("right-hand side is not finite at t = {t}"));
        }
        let row = stencil.row(j);
        let hc = stencil.history_coupling(j, &p.history, &row)?;
        let w = row.diagonal() + p.damping;
        let known: f64 = row.weights.iter().zip(&v[..j]).map(|(w, vi)| w * vi).sum();
        v[j] = (p.source_scale * f + known + hc) / w;
        diagonals[j] = w;
        residuals[j] = stencil.apply_row(&v, j, &row, hc) + p.damping * v[j] - p.source_scale * f;
    }
    let solution = TimeGridFunction::new(p.t_start, p.step, v, p.history.clone())?;
    Ok(OdeSolution { solution, residuals, diagonals })
}

/// Upper or lower envelope with its maximiser/minimiser per node.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub values: TimeGridFunction,
    /// `t*` for each grid node.
    pub argmax: Vec<f64>,
}

/// `u^ε(t) = sup_{s ≤ t} { u(s) + (s − t)/ε + ε }` over grid and history
/// samples (history sampled with the grid step). Ties go to the smallest `s`.
pub fn sup_convolution(u: &TimeGridFunction, eps: f64) -> Result<Envelope> {
    if !(eps > 0.0) {
        return invalid(format!("convolution parameter ε = {eps} must be positive"));
    }
    let bound = match u.history().sup_bound() {
        Some(b) => b.max(u.sup_abs()),
        None => return precondition("sup-convolution needs a bounded function (history has no sup bound)"),
    };
    let step = u.step();
    // Maximisers satisfy t − t* ≤ 2ε sup|u|, so this window suffices.
    let reach = ((2.0 * eps * bound) / step).ceil() as usize + 1;
    let hist_times: Vec<f64> = (1..=reach).rev().map(|k| u.t_start() - k as f64 * step).collect();
    let mut times = hist_times.clone();
    let mut vals: Vec<f64> = hist_times.iter().map(|&t| u.history().eval(t)).collect();
    for j in 0..u.len() {
        times.push(u.time(j));
        vals.push(u.value(j));
    }
    let env = |k: usize| -> (f64, f64) {
        let t = times[k];
        let lo = k.saturating_sub(reach);
        let mut best = f64::NEG_INFINITY;
        let mut arg = t;
        for m in lo..=k {
            let c = vals[m] + (times[m] - t) / eps + eps;
            if c > best {
                best = c;
                arg = times[m];
            }
        }
        (best, arg)
    };
    let mut values = Vec::with_capacity(u.len());
    let mut argmax = Vec::with_capacity(u.len());
    for j in 0..u.len() {
        let (v, a) = env(reach + j);
        values.push(v);
        argmax.push(a);
    }
    let hist_vals: Vec<f64> = (0..reach).map(|k| env(k).0).collect();
    let history = HistorySpec::sampled(hist_times, hist_vals, bound + eps)?;
    Ok(Envelope { values: TimeGridFunction::new(u.t_start(), step, values, history)?, argmax })
}

/// `u_ε(t) = inf_{s ≤ t} { u(s) − (s − t)/ε − ε } = −(−u)^ε(t)`.
pub fn inf_convolution(u: &TimeGridFunction, eps: f64) -> Result<Envelope> {
    let neg = negate(u)?;
    let e = sup_convolution(&neg, eps)?;
    let values = negate(&e.values)?;
    Ok(Envelope { values, argmax: e.argmax })
}

fn negate(u: &TimeGridFunction) -> Result<TimeGridFunction> {
    let history = match u.history().kind() {
        HistoryKind::Zero => HistorySpec::zero(),
        HistoryKind::Constant(c) => HistorySpec::constant(-c)?,
        HistoryKind::Sampled { times, values, before } => {
            HistorySpec::sampled(times.clone(), values.iter().map(|v| -v).collect(), -before)?
        }
        HistoryKind::Power { .. } => return precondition("envelopes need a bounded history"),
    };
    TimeGridFunction::new(u.t_start(), u.step(), u.values().iter().map(|v| -v).collect(), history)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub pass: bool,
    /// `(node, u_j − v_j)` wherever `u_j > v_j` beyond tolerance.
    pub violations: Vec<(usize, f64)>,
    pub max_excess: f64,
}

/// Certifies `D u ≤ f` and `D v ≥ f` from the residual signs and then checks
/// `u ≤ v` at every node (tolerance `1e−12·(1 + |v|)`).
pub fn check_comparison(
    u: &TimeGridFunction,
    v: &TimeGridFunction,
    f: &dyn Fn(f64) -> f64,
    kernel: &TimeKernel,
    spec: &QuadratureSpec,
) -> Result<ComparisonReport> {
    if u.len() != v.len() || u.step() != v.step() || u.t_start() != v.t_start() {
        return invalid("comparison needs u and v on the same grid");
    }
    let stencil = TimeStencil::for_grid(kernel, u, spec)?;
    for j in 1..u.len() {
        let row = stencil.row(j);
        let fj = f(u.time(j));
        let w = row.diagonal();
        let du = stencil.apply_row(u.values(), j, &row, stencil.history_coupling(j, u.history(), &row)?);
        let dv = stencil.apply_row(v.values(), j, &row, stencil.history_coupling(j, v.history(), &row)?);
        let tol_u = 1e-10 * (1.0 + fj.abs() + w * u.value(j).abs());
        let tol_v = 1e-10 * (1.0 + fj.abs() + w * v.value(j).abs());
        if du - fj > tol_u {
            return Err(Error::HypothesesNotMet(format!("D u − f = {:e} > 0 at t = {}", du - fj, u.time(j))));
        }
        if dv - fj < -tol_v {
            return Err(Error::HypothesesNotMet(format!("D v − f = {:e} < 0 at t = {}", dv - fj, v.time(j))));
        }
    }
    let mut violations = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    for j in 0..u.len() {
        let d = u.value(j) - v.value(j);
        max_excess = max_excess.max(d);
        if d > 1e-12 * (1.0 + v.value(j).abs()) {
            violations.push((j, d));
        }
    }
    Ok(ComparisonReport { pass: violations.is_empty(), violations, max_excess })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Integrated form of the equation for nonnegative solutions from rest:
///
/// `λ/Γ(1−α) ∫ v(s)(t−s)^{−α} ds ≤ ∫ f ≤ Λ/Γ(1−α) ∫ v(s)(t−s)^{−α} ds`.
///
/// Each quantity is the discrete counterpart obtained by summing the scheme's
/// rows: `ε Σ_{j≤J} f_j` in the middle and `ε Σ_i v_i T_{J,i}` on the sides,
/// where `T_{J,i} = W_i − Σ_{i<j≤J} w_{ji}` is built from the reference
/// weights. `probes` is the number of evaluation times.
pub fn divergence_energy_check(
    v: &TimeGridFunction,
    f: &dyn Fn(f64) -> f64,
    kernel: &TimeKernel,
    spec: &QuadratureSpec,
    probes: usize,
) -> Result<EnergyReport> {
    if let Some(j) = v.values().iter().position(|&x| x < 0.0) {
        return precondition(format!("energy check needs v ≥ 0; v = {} at t = {}", v.value(j), v.time(j)));
    }
    if !matches!(v.history().kind(), HistoryKind::Zero) {
        return precondition("energy check needs a zero history");
    }
    if !kernel.is_symmetric() {
        return precondition("energy check needs a kernel flagged symmetric");
    }
    let n = v.len();
    let eps = v.step();
    let reference = TimeStencil::for_grid(&kernel.reference(), v, spec)?;
    let stride = ((n - 1) / probes.max(1)).max(1);
    let mut colsum = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut f_acc = 0.0;
    let mut f_abs = 0.0;
    let mut rows = Vec::new();
    for j in 1..n {
        let row: StencilRow = reference.row(j);
        diag[j] = row.diagonal();
        for (i, w) in row.weights.iter().enumerate() {
            colsum[i] += w;
        }
        let fj = f(v.time(j));
        f_acc += eps * fj;
        f_abs += eps * fj.abs();
        if j % stride == 0 || j == n - 1 {
            let mut s = 0.0;
            for i in 1..=j {
                s += v.value(i) * (diag[i] - colsum[i]);
            }
            let s = eps * s;
            rows.push(EnergyRow { t: v.time(j), lower: kernel.lambda() * s, middle: f_acc, upper: kernel.big_lambda() * s });
        }
    }
    let tolerance = 1e-6 * (1.0 + f_abs);
    let pass = rows.iter().all(|r| r.lower <= r.middle + tolerance && r.middle <= r.upper + tolerance);
    Ok(EnergyReport { rows, tolerance, pass })
}

/// `D m = c₀ G − C₁ m` from rest at `t_start`.
#[allow(clippy::too_many_arguments)]
pub fn solve_memory_ode(
    kernel: &TimeKernel,
    source: TimeFn,
    c0: f64,
    c1: f64,
    t_start: f64,
    t_end: f64,
    step: f64,
    spec: &QuadratureSpec,
) -> Result<OdeSolution> {
    let n = node_count(t_start, t_end, step)?;
    for j in 0..n {
        let t = t_start + j as f64 * step;
        let g = source(t);
        if !(g >= 0.0) {
            return precondition(format!("memory source G({t}) = {g} must be nonnegative"));
        }
    }
    let p = OdeProblem::new(kernel.clone(), source, t_start, t_end, step).with_damping(c1).with_source_scale(c0);
    solve_discrete(&p, spec)
}

/// `G(t, ε) = ∫_{B₁} min{max(0, −u)/ε, 1} dx` by the trapezoid rule on the
/// nodes in `[−1, 1]` (partial end cells use interpolated values at ±1).
pub fn smooth_indicator(u: &SpaceTimeGridFunction, eps: f64) -> Result<TimeGridFunction> {
    if !(eps > 0.0) {
        return invalid(format!("indicator parameter ε = {eps} must be positive"));
    }
    if u.x_half_width() < 1.0 - 1e-12 {
        return invalid("indicator needs a spatial grid covering [−1, 1]");
    }
    let g = |v: f64| ((-v).max(0.0) / eps).min(1.0);
    let mut out = Vec::with_capacity(u.nt());
    for j in 0..u.nt() {
        let mut pts: Vec<(f64, f64)> = vec![(-1.0, g(u.value_at(-1.0, j)))];
        for i in 0..u.nx() {
            let x = u.x(i);
            if x > -1.0 + 1e-12 && x < 1.0 - 1e-12 {
                pts.push((x, g(u.value(i, j))));
            }
        }
        pts.push((1.0, g(u.value_at(1.0, j))));
        let total: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
        out.push(total);
    }
    TimeGridFunction::new(u.t_start(), u.step(), out, HistorySpec::zero())
}

/// `min_{t ∈ [a, b]} m(t)` over grid nodes.
pub fn min_on(u: &TimeGridFunction, a: f64, b: f64) -> f64 {
    (0..u.len()).filter(|&j| u.time(j) >= a - 1e-12 && u.time(j) <= b + 1e-12).map(|j| u.value(j)).fold(f64::INFINITY, f64::min)
}
