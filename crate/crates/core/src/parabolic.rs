//! Space–time solver for `D_t u − sup_a inf_b L_{ab} u = f` on `[−X, X]`,
//! Pucci residual certification, the parabolic rescaling and barrier
//! profiles.

use crate::error::{invalid, precondition, Error, Result};
use crate::fracops::{member_weights, FnSlice, GridSlice, QuadratureSpec, Sign, SpaceStencil, StartBasis, TimeStencil};
use crate::grid::{node_count, HistorySpec, SpaceTimeGridFunction, SpatialTail, TimeGridFunction};
use crate::kernels::{SpaceKernelFamily, TimeKernel};
use crate::special::{gamma, power_barrier_constant};
use nalgebra::{DMatrix, DVector, LU};
use std::collections::HashMap;
use std::sync::Arc;

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ParabolicProblem {
    pub time_kernel: TimeKernel,
    pub family: SpaceKernelFamily,
    pub rhs: SpaceTimeFn,
    pub x_half_width: f64,
    pub nx: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub tail: SpatialTail,
    pub history: HistorySpec,
}

impl std::fmt::Debug for ParabolicProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParabolicProblem")
            .field("time_kernel", &self.time_kernel)
            .field("family", &self.family)
            .field("x_half_width", &self.x_half_width)
            .field("nx", &self.nx)
            .field("t_start", &self.t_start)
            .field("t_end", &self.t_end)
            .field("step", &self.step)
            .field("tail", &self.tail)
            .field("history", &self.history)
            .finish_non_exhaustive()
    }
}

impl ParabolicProblem {
    /// Zero exterior data and zero history.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        time_kernel: TimeKernel,
        family: SpaceKernelFamily,
        rhs: SpaceTimeFn,
        x_half_width: f64,
        nx: usize,
        t_start: f64,
        t_end: f64,
        step: f64,
    ) -> Self {
        Self {
            time_kernel,
            family,
            rhs,
            x_half_width,
            nx,
            t_start,
            t_end,
            step,
            tail: SpatialTail::Constant(0.0),
            history: HistorySpec::zero(),
        }
    }

    pub fn with_tail(mut self, tail: SpatialTail) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_history(mut self, history: HistorySpec) -> Self {
        self.history = history;
        self
    }

    pub fn h(&self) -> f64 {
        2.0 * self.x_half_width / (self.nx as f64 - 1.0)
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            return self.x_half_width;
        }
        -self.x_half_width + i as f64 * self.h()
    }

    fn validate(&self) -> Result<usize> {
        if !self.time_kernel.is_symmetric() {
            return precondition("the space–time solver needs a time kernel flagged symmetric");
        }
        if !(self.x_half_width > 0.0) || self.nx < 3 {
            return invalid(format!("bad spatial grid: X = {}, nx = {}", self.x_half_width, self.nx));
        }
        if self.tail.growth_exponent() >= 2.0 * self.family.sigma() {
            return precondition(format!(
                "tail growth {} must be below 2σ = {}",
                self.tail.growth_exponent(),
                2.0 * self.family.sigma()
            ));
        }
        if self.history.sup_bound().is_none() && self.history.growth_exponent() >= self.time_kernel.alpha() {
            return precondition("history growth exponent must be below α");
        }
        node_count(self.t_start, self.t_end, self.step)
    }
}

#[derive(Debug, Clone)]
pub struct ParabolicSolution {
    pub u: SpaceTimeGridFunction,
    /// `D_t u − I u − f` per node, row-major in time (zero on the first slice).
    pub residuals: Vec<f64>,
    /// Outer policy sweeps per time step.
    pub policy_sweeps: Vec<usize>,
}

impl ParabolicSolution {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Linear operator of one family member on a slice: `L U + c`.
struct MemberOperator {
    matrix: DMatrix<f64>,
    constant: DVector<f64>,
}

fn assemble_member(p: &ParabolicProblem, st: &SpaceStencil, a: usize, b: usize, t: f64) -> MemberOperator {
    let nx = p.nx;
    let h = p.h();
    let mut matrix = DMatrix::zeros(nx, nx);
    let mut constant = DVector::zeros(nx);
    for i in 0..nx {
        let x = p.x(i);
        let (near, far) = member_weights(st, &p.family, a, b, x, t);
        let mut diag = 0.0;
        let add = |xq: f64, idx: Option<usize>, w: f64, matrix: &mut DMatrix<f64>, constant: &mut DVector<f64>| {
            match idx {
                Some(k) => matrix[(i, k)] += w,
                None => match p.tail {
                    SpatialTail::Extension => {
                        let k = if xq < 0.0 { 0 } else { nx - 1 };
                        matrix[(i, k)] += w;
                    }
                    tail => constant[i] += w * tail.eval(xq, (0.0, 0.0)),
                },
            }
        };
        for (k, &w) in near.iter().enumerate().skip(1) {
            diag += 2.0 * w;
            for sgn in [1i64, -1] {
                let idx = i as i64 + sgn * k as i64;
                let inside = idx >= 0 && (idx as usize) < nx;
                add(x + sgn as f64 * k as f64 * h, inside.then_some(idx as usize), w, &mut matrix, &mut constant);
            }
        }
        for (q, &(y, _)) in st.far_points().iter().enumerate() {
            let w = far[q];
            diag += 2.0 * w;
            add(x + y, None, w, &mut matrix, &mut constant);
            add(x - y, None, w, &mut matrix, &mut constant);
        }
        matrix[(i, i)] -= diag;
    }
    MemberOperator { matrix, constant }
}

struct Howard<'a> {
    ops: &'a [Vec<MemberOperator>],
    nx: usize,
    cache: HashMap<(Vec<u8>, u64), LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl Howard<'_> {
    fn values(&self, u: &DVector<f64>) -> Vec<Vec<DVector<f64>>> {
        self.ops.iter().map(|row| row.iter().map(|op| &op.matrix * u + &op.constant).collect()).collect()
    }

    fn solve_policy(&mut self, w: f64, rhs: &DVector<f64>, pa: &[usize], pb: &[usize]) -> Result<DVector<f64>> {
        let mut key: Vec<u8> = pa.iter().map(|&a| a as u8).collect();
        key.extend(pb.iter().map(|&b| b as u8));
        let key = (key, w.to_bits());
        let mut r = rhs.clone();
        for i in 0..self.nx {
            r[i] += self.ops[pa[i]][pb[i]].constant[i];
        }
        if !self.cache.contains_key(&key) {
            let mut a = DMatrix::zeros(self.nx, self.nx);
            for i in 0..self.nx {
                let m = &self.ops[pa[i]][pb[i]].matrix;
                for k in 0..self.nx {
                    a[(i, k)] = -m[(i, k)];
                }
                a[(i, i)] += w;
            }
            if self.cache.len() > 32 {
                self.cache.clear();
            }
            self.cache.insert(key.clone(), a.lu());
        }
        self.cache[&key]
            .solve(&r)
            .ok_or_else(|| Error::Singular("policy matrix is singular".into()))
    }
}

fn improve(current: usize, candidates: impl Iterator<Item = (usize, f64)>, better: impl Fn(f64, f64) -> bool, cur_val: f64) -> usize {
    let mut best = current;
    let mut best_val = cur_val;
    for (k, v) in candidates {
        let tol = 1e-13 * (1.0 + best_val.abs());
        if better(v, best_val + if better(1.0, 0.0) { tol } else { -tol }) {
            best = k;
            best_val = v;
        }
    }
    best
}

/// Implicit time marching; the slice equation
/// `W U − R − sup_a inf_b (L_{ab} U + c_{ab}) = 0` is solved by nested
/// policy iteration (outer over `a`, inner over `b`), each policy giving a
/// diagonally dominant M-matrix system solved by LU.
pub fn solve_parabolic(p: &ParabolicProblem, spec: &QuadratureSpec) -> Result<ParabolicSolution> {
    let nt = p.validate()?;
    let nx = p.nx;
    let fam = &p.family;
    let stencil = TimeStencil::new(&p.time_kernel, p.t_start, p.step, nt, spec)?;
    let st = SpaceStencil::new(fam.sigma(), p.h(), nx, p.tail.growth_exponent(), spec)?;
    let build = |t: f64| -> Vec<Vec<MemberOperator>> {
        (0..fam.outer_len()).map(|a| (0..fam.inner_len()).map(|b| assemble_member(p, &st, a, b, t)).collect()).collect()
    };
    let static_ops = fam.is_time_independent().then(|| build(p.t_start));
    let cap = fam.outer_len() * fam.inner_len() + 5;

    let mut values = vec![0.0; nt * nx];
    let u0 = p.history.eval(p.t_start);
    values[..nx].iter_mut().for_each(|v| *v = u0);
    let mut residuals = vec![0.0; nt * nx];
    let mut sweeps_log = vec![0; nt];
    let mut pol_a = vec![0usize; nx];
    let mut pol_b = vec![0usize; nx];
    let mut dyn_ops;
    let mut cache = HashMap::new();
    for j in 1..nt {
        let t = p.t_start + j as f64 * p.step;
        let ops: &[Vec<MemberOperator>] = match &static_ops {
            Some(o) => o,
            None => {
                dyn_ops = build(t);
                cache.clear();
                &dyn_ops
            }
        };
        let row = stencil.row(j);
        let hc = stencil.history_coupling(j, &p.history, &row)?;
        let w = row.diagonal();
        let mut known = vec![0.0; nx];
        for (l, wl) in row.weights.iter().enumerate() {
            for (k, v) in known.iter_mut().zip(&values[l * nx..(l + 1) * nx]) {
                *k += wl * v;
            }
        }
        let mut rhs = DVector::zeros(nx);
        for i in 0..nx {
            let f = (p.rhs)(p.x(i), t);
            if !f.is_finite() {
                return invalid(format!("right-hand side is not finite at ({}, {t})", p.x(i)));
            }
            rhs[i] = f + known[i] + hc;
        }
        let mut how = Howard { ops, nx, cache: std::mem::take(&mut cache) };
        let mut outer = 0;
        let u = loop {
            outer += 1;
            let mut inner = 0;
            let u = loop {
                inner += 1;
                let u = how.solve_policy(w, &rhs, &pol_a, &pol_b)?;
                let vals = how.values(&u);
                let mut changed = false;
                for i in 0..nx {
                    let a = pol_a[i];
                    let nb = improve(pol_b[i], (0..fam.inner_len()).map(|b| (b, vals[a][b][i])), |x, y| x < y, vals[a][pol_b[i]][i]);
                    changed |= nb != pol_b[i];
                    pol_b[i] = nb;
                }
                if !changed {
                    break u;
                }
                if inner > cap {
                    return Err(policy_failure(inner, j, &u, &pol_a, &pol_b));
                }
            };
            let vals = how.values(&u);
            let mut changed = false;
            for i in 0..nx {
                let inf_b = |a: usize| (0..fam.inner_len()).map(|b| vals[a][b][i]).fold(f64::INFINITY, f64::min);
                let na = improve(pol_a[i], (0..fam.outer_len()).map(|a| (a, inf_b(a))), |x, y| x > y, inf_b(pol_a[i]));
                if na != pol_a[i] {
                    changed = true;
                    pol_a[i] = na;
                    pol_b[i] = (0..fam.inner_len())
                        .min_by(|&x, &y| vals[na][x][i].total_cmp(&vals[na][y][i]))
                        .unwrap_or(0);
                }
            }
            if !changed {
                break u;
            }
            if outer > cap {
                return Err(policy_failure(outer, j, &u, &pol_a, &pol_b));
            }
        };
        sweeps_log[j] = outer;
        let vals = how.values(&u);
        cache = how.cache;
        for i in 0..nx {
            values[j * nx + i] = u[i];
        }
        for i in 0..nx {
            let isaacs = (0..fam.outer_len())
                .map(|a| (0..fam.inner_len()).map(|b| vals[a][b][i]).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max);
            let dt = w * u[i] - known[i] - hc;
            residuals[j * nx + i] = dt - isaacs - (p.rhs)(p.x(i), t);
        }
    }
    let u = SpaceTimeGridFunction::new(p.x_half_width, nx, p.t_start, p.step, values, p.tail, p.history.clone())?;
    Ok(ParabolicSolution { u, residuals, policy_sweeps: sweeps_log })
}

fn policy_failure(sweeps: usize, j: usize, u: &DVector<f64>, a: &[usize], b: &[usize]) -> Error {
    let preview = |v: &[usize]| v.iter().take(16).map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let umax = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Error::PolicyIteration {
        sweeps,
        time_index: j,
        dump: format!("u ∈ [{umin:e}, {umax:e}], outer policy [{}…], inner policy [{}…]", preview(a), preview(b)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichResidualReport {
    /// `D_t u − M^+ u ≤ f + tol` at every checked node.
    pub upper_pass: bool,
    /// `D_t u − M^− u ≥ f − tol` at every checked node.
    pub lower_pass: bool,
    /// `max (D_t u − M^+ u − f)`.
    pub max_upper_excess: f64,
    /// `min (D_t u − M^− u − f)`.
    pub min_lower_margin: f64,
    pub upper_violations: usize,
    pub lower_violations: usize,
    pub nodes_checked: usize,
}

impl SandwichResidualReport {
    pub fn pass(&self) -> bool {
        self.upper_pass && self.lower_pass
    }
}

/// Checks `D_t u − M^+ u ≤ f` and `D_t u − M^− u ≥ f` at every grid node with
/// `t > t_start`, tolerance `1e−8·(1 + |f|)`.
#[allow(clippy::too_many_arguments)]
pub fn residual_sandwich(
    u: &SpaceTimeGridFunction,
    f: &dyn Fn(f64, f64) -> f64,
    sigma: f64,
    lambda: f64,
    big_lambda: f64,
    kernel: &TimeKernel,
    spec: &QuadratureSpec,
) -> Result<SandwichResidualReport> {
    let nx = u.nx();
    let stencil = TimeStencil::new(kernel, u.t_start(), u.step(), u.nt(), spec)?;
    let st = SpaceStencil::for_grid(u, sigma, spec)?;
    let mut rep = SandwichResidualReport {
        upper_pass: true,
        lower_pass: true,
        max_upper_excess: f64::NEG_INFINITY,
        min_lower_margin: f64::INFINITY,
        upper_violations: 0,
        lower_violations: 0,
        nodes_checked: 0,
    };
    for j in 1..u.nt() {
        let row = stencil.row(j);
        let hc = stencil.history_coupling(j, u.history(), &row)?;
        let mut known = vec![0.0; nx];
        for (l, wl) in row.weights.iter().enumerate() {
            for (k, v) in known.iter_mut().zip(u.slice(l)) {
                *k += wl * v;
            }
        }
        let w = row.diagonal();
        for i in 0..nx {
            let dt = w * u.value(i, j) - known[i] - hc;
            let slice = GridSlice::new(u, i, j);
            let mp = st.apply_pucci(&slice, lambda, big_lambda, Sign::Plus);
            let mm = st.apply_pucci(&slice, lambda, big_lambda, Sign::Minus);
            let fv = f(u.x(i), u.t(j));
            let tol = 1e-8 * (1.0 + fv.abs());
            let up = dt - mp - fv;
            let lo = dt - mm - fv;
            rep.max_upper_excess = rep.max_upper_excess.max(up);
            rep.min_lower_margin = rep.min_lower_margin.min(lo);
            if up > tol {
                rep.upper_violations += 1;
                rep.upper_pass = false;
            }
            if lo < -tol {
                rep.lower_violations += 1;
                rep.lower_pass = false;
            }
            rep.nodes_checked += 1;
        }
    }
    Ok(rep)
}

/// `τ = r^{2σ/α}`: the time scale matched to the spatial scale `r`.
pub fn time_scale(r: f64, sigma: f64, alpha: f64) -> f64 {
    r.powf(2.0 * sigma / alpha)
}

/// `v(x, t) = u(r x, τ t)` with `τ = r^{2σ/α}`: the same samples on the
/// grid scaled by `1/r` in space and `1/τ` in time, with tail and history
/// transformed accordingly.
pub fn rescale(u: &SpaceTimeGridFunction, r: f64, sigma: f64, alpha: f64) -> Result<SpaceTimeGridFunction> {
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("rescaling factor r = {r} must be positive"));
    }
    let tau = time_scale(r, sigma, alpha);
    SpaceTimeGridFunction::new(
        u.x_half_width() / r,
        u.nx(),
        u.t_start() / tau,
        u.step() / tau,
        u.values().to_vec(),
        u.tail().rescaled(r),
        u.history().time_rescaled(tau),
    )
}

/// Kernels for the rescaled function: `D̃_t v − L̃ v = r^{2σ} (D_t u − L u)`
/// at corresponding points.
pub fn rescaled_kernels(kernel: &TimeKernel, family: &SpaceKernelFamily, r: f64, alpha: f64) -> (TimeKernel, SpaceKernelFamily) {
    let tau = time_scale(r, family.sigma(), alpha);
    (kernel.time_rescaled(tau), family.rescaled(r, tau))
}

// -------------------------------------------------------------- barriers ----

/// `Φ(t) = 0` for `t ≤ 3/4`, `4(t − 3/4)` after.
pub fn barrier_phi(t: f64) -> f64 {
    if t <= 0.75 {
        0.0
    } else {
        4.0 * (t - 0.75)
    }
}

/// `η(s) = exp(4 − 1/(s(1−s)))` on `(0, 1)`, zero outside; `max η = η(1/2) = 1`.
pub fn eta(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (4.0 - 1.0 / (s * (1.0 - s))).exp()
    }
}

/// `η_ε(t) = ε η(t/ε)`.
pub fn barrier_bump(eps: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return invalid(format!("bump width ε = {eps} must be positive"));
    }
    Ok(eps * eta(t / eps))
}

/// `c_α (2 + t)_+^α` with `c_α = 1/Γ(1+α)`.
pub fn barrier_power(alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("α = {alpha} must lie in (0, 1)"));
    }
    Ok(power_barrier_constant(alpha) * (2.0 + t).max(0.0).powf(alpha))
}

/// `h(t) = max{2|rt|^ν − 1, 0}`.
pub fn barrier_tail(r: f64, nu: f64, t: f64) -> Result<f64> {
    if !(r > 0.0) || !(nu > 0.0 && nu < 1.0) {
        return invalid(format!("tail barrier needs r > 0 and 0 < ν < 1, got r = {r}, ν = {nu}"));
    }
    Ok((2.0 * (r * t).abs().powf(nu) - 1.0).max(0.0))
}

/// Smooth nonincreasing cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn cutoff(s: f64) -> f64 {
    let psi = |z: f64| if z > 0.0 { (-1.0 / z).exp() } else { 0.0 };
    let a = psi(2.0 - s);
    let b = psi(s - 1.0);
    a / (a + b)
}

/// Spatial bump `b(x) = β(|x|)`.
pub fn spatial_bump(x: f64) -> f64 {
    cutoff(x.abs())
}

/// `r = min{1/4, 4^{−α/(2σ)}}`.
pub fn tail_barrier_rate(alpha: f64, sigma: f64) -> f64 {
    0.25f64.min(4f64.powf(-alpha / (2.0 * sigma)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailBarrierReport {
    pub alpha: f64,
    pub nu: f64,
    pub rate: f64,
    /// `(t₁, D h(t₁))` at the probes.
    pub probes: Vec<(f64, f64)>,
    /// `max (−D h)/λ` over the probes.
    pub constant: f64,
    /// `D h ≤ 0` at every probe (up to 1e−10).
    pub sign_ok: bool,
}

/// Evaluates `D h` for the tail barrier `h = max{2|rt|^ν − 1, 0}` under the
/// kernel on probes `t₁ ∈ [−probe_span, 0]`; the grid starts at
/// `−2·probe_span` with `h` itself as history.
pub fn tail_barrier_probe(kernel: &TimeKernel, nu: f64, rate: f64, probe_span: f64, step: f64, probes: usize, spec: &QuadratureSpec) -> Result<TailBarrierReport> {
    let alpha = kernel.alpha();
    if !(nu > 0.0 && nu < alpha) {
        return precondition(format!("tail barrier needs 0 < ν < α, got ν = {nu}, α = {alpha}"));
    }
    let t_start = -2.0 * probe_span;
    let history = HistorySpec::power(2.0, rate, nu, 1.0)?;
    let h = TimeGridFunction::from_fn(t_start, 0.0, step, history, |t| barrier_tail(rate, nu, t).unwrap_or(0.0))?;
    let spec = QuadratureSpec { start_basis: StartBasis::Linear, ..*spec };
    let stencil = TimeStencil::for_grid(kernel, &h, &spec)?;
    let first = h.index_of(-probe_span).ok_or_else(|| Error::Invalid("probe window outside grid".into()))?;
    let last = h.len() - 1;
    let stride = ((last - first) / probes.max(1)).max(1);
    let mut out = Vec::new();
    let mut j = first;
    while j <= last {
        out.push((h.time(j), crate::fracops::marchaud_with(&stencil, &h, j)?));
        if j == last {
            break;
        }
        j = (j + stride).min(last);
    }
    let constant = out.iter().map(|&(_, d)| -d).fold(0.0, f64::max) / kernel.lambda();
    let sign_ok = out.iter().all(|&(_, d)| d <= 1e-10);
    Ok(TailBarrierReport { alpha, nu, rate, probes: out, constant, sign_ok })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BumpReport {
    /// Largest `β` with `M^− b ≥ 0` wherever `b ≤ β` (on the sample points).
    pub beta1: f64,
    /// `min M^− b` over sample points where `b = 0`.
    pub min_outside: f64,
    pub samples: usize,
}

/// Bisection for the level `β₁` below which `M_σ^− b ≥ 0`, for the bump
/// `b(x) = β(|x|)` sampled at spacing `h` on `[0, 3]`.
pub fn bump_threshold(sigma: f64, lambda: f64, big_lambda: f64, h: f64, spec: &QuadratureSpec) -> Result<BumpReport> {
    let n_near = (6.0 / h).ceil() as usize;
    let st = SpaceStencil::new(sigma, h, n_near, 0.0, spec)?;
    let xs: Vec<f64> = (0..=(3.0 / h).round() as usize).map(|k| k as f64 * h).collect();
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| {
            let s = FnSlice { f: spatial_bump, x, h };
            (spatial_bump(x), st.apply_pucci(&s, lambda, big_lambda, Sign::Minus))
        })
        .collect();
    let min_outside = pts.iter().filter(|(b, _)| *b == 0.0).map(|&(_, m)| m).fold(f64::INFINITY, f64::min);
    let ok = |beta: f64| pts.iter().all(|&(b, m)| b > beta || m >= 0.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    if !ok(lo) {
        return Ok(BumpReport { beta1: 0.0, min_outside, samples: pts.len() });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BumpReport { beta1: lo, min_outside, samples: pts.len() })
}

/// `M_σ^± u(x)` for an analytic profile on a lattice of spacing `h`
/// covering `|y| ≤ y_lin`.
pub fn pucci_space_profile(f: impl Fn(f64) -> f64, x: f64, sigma: f64, lambda: f64, big_lambda: f64, sign: Sign, h: f64, y_lin: f64, spec: &QuadratureSpec) -> Result<f64> {
    let st = SpaceStencil::new(sigma, h, (y_lin / h).round().max(2.0) as usize, 0.0, spec)?;
    Ok(st.apply_pucci(&FnSlice { f, x, h }, lambda, big_lambda, sign))
}

/// Reference Caputo derivative of `(t − a)_+^β`: `Γ(1+β)/Γ(1+β−α)·(t−a)^{β−α}`.
pub fn caputo_power(alpha: f64, beta: f64, dt: f64) -> f64 {
    gamma(1.0 + beta) / gamma(1.0 + beta - alpha) * dt.powf(beta - alpha)
}
