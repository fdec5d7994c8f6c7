//! Regularity measurements: Hölder seminorms, oscillation decay over dyadic
//! cylinders, exponent fits, α-sweeps and the level-set probes.

use crate::error::{invalid, precondition, Error, Result};
use crate::fracops::{pucci_time_with, QuadratureSpec, Sign, TimeStencil};
use crate::grid::{oscillation, Cylinder, SpaceTimeGridFunction, SpatialTail, TimeGridFunction};
use crate::kernels::{SpaceKernelFamily, TimeKernel, TimeModulation};
use crate::ode::{solve_discrete, OdeProblem, TimeFn};
use crate::parabolic::{solve_parabolic, ParabolicProblem, SpaceTimeFn};
use rayon::prelude::*;

const EXHAUSTIVE_NODES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorm {
    pub value: f64,
    /// 1 when every pair was examined.
    pub stride: usize,
    pub nodes: usize,
}

/// `max |u(t) − u(s)| / |t − s|^β` over node pairs in `[a, b]`.
pub fn holder_seminorm(u: &TimeGridFunction, beta: f64, interval: (f64, f64)) -> Result<Seminorm> {
    if !(beta > 0.0 && beta <= 1.0) {
        return invalid(format!("Hölder exponent β = {beta} must lie in (0, 1]"));
    }
    let (a, b) = interval;
    if !(b > a) {
        return invalid(format!("degenerate interval [{a}, {b}]"));
    }
    let tol = 1e-9 * u.step();
    if a < u.t_start() - tol || b > u.t_end() + tol {
        return invalid(format!("interval [{a}, {b}] leaves the grid [{}, {}]", u.t_start(), u.t_end()));
    }
    let idx: Vec<usize> = (0..u.len()).filter(|&j| u.time(j) >= a - tol && u.time(j) <= b + tol).collect();
    if idx.len() < 2 {
        return invalid(format!("interval [{a}, {b}] holds fewer than two nodes"));
    }
    let stride = idx.len().div_ceil(EXHAUSTIVE_NODES);
    let sub: Vec<usize> = idx.iter().copied().step_by(stride).collect();
    let value = sub
        .par_iter()
        .enumerate()
        .map(|(p, &i)| {
            let mut m = 0.0f64;
            for &k in &sub[p + 1..] {
                let d = (u.time(k) - u.time(i)).abs().powf(beta);
                m = m.max((u.value(k) - u.value(i)).abs() / d);
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(Seminorm { value, stride, nodes: sub.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub constant: f64,
    /// Max deviation of the log-log data from the fitted line.
    pub residual: f64,
    pub radii_used: Vec<f64>,
    pub oscillations: Vec<f64>,
}

/// Least-squares line through `(log r, log osc)`. Radii must be a strictly
/// decreasing geometric sequence; zero oscillations are dropped.
pub fn fit_power_law(radii: &[f64], oscillations: &[f64]) -> Result<HolderEstimate> {
    if radii.len() != oscillations.len() {
        return invalid("radii and oscillations differ in length");
    }
    check_geometric(radii)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut used = Vec::new();
    let mut oscs = Vec::new();
    for (&r, &o) in radii.iter().zip(oscillations) {
        if o > 0.0 && o.is_finite() {
            xs.push(r.ln());
            ys.push(o.ln());
            used.push(r);
            oscs.push(o);
        } else {
            log::info!("radius {r}: oscillation {o} dropped from the fit");
        }
    }
    if xs.len() < 4 {
        return Err(Error::Invalid(format!("only {} usable radii; at least 4 are needed", xs.len())));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - (intercept + slope * x)).abs()).fold(0.0, f64::max);
    Ok(HolderEstimate { exponent: slope, constant: intercept.exp(), residual, radii_used: used, oscillations: oscs })
}

fn check_geometric(radii: &[f64]) -> Result<()> {
    if radii.len() < 4 {
        return invalid(format!("{} radii given; at least 4 are needed", radii.len()));
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return invalid("radii must be positive and finite");
    }
    let q = radii[1] / radii[0];
    if !(q < 1.0) {
        return invalid("radii must be strictly decreasing");
    }
    for w in radii.windows(2) {
        if ((w[1] / w[0]) / q - 1.0).abs() > 1e-9 {
            return invalid("radii must form a geometric sequence");
        }
    }
    Ok(())
}

/// `(slope, intercept)` of the least-squares line.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Oscillation decay over the cylinders `Q_r(x₀, t₀) = B_r(x₀) × (t₀ − r^{2σ/α}, t₀]`.
pub fn fit_holder_exponent(u: &SpaceTimeGridFunction, x0: f64, t0: f64, radii: &[f64], sigma: f64, alpha: f64) -> Result<HolderEstimate> {
    check_geometric(radii)?;
    let h = u.h();
    let smallest = radii[radii.len() - 1];
    if smallest < 4.0 * h * (1.0 - 1e-12) {
        return precondition(format!("smallest radius {smallest} is below 4 grid cells ({})", 4.0 * h));
    }
    let t_end = u.t(u.nt() - 1);
    let mut osc = Vec::with_capacity(radii.len());
    for &r in radii {
        let q = Cylinder::new(x0, t0, r, sigma, alpha)?;
        if x0 - r < -u.x_half_width() - 1e-12 || x0 + r > u.x_half_width() + 1e-12 {
            return precondition(format!("ball of radius {r} around {x0} leaves the spatial grid"));
        }
        if t0 - q.depth() < u.t_start() - 1e-12 || t0 > t_end + 1e-12 {
            return precondition(format!("cylinder of radius {r} leaves the time grid"));
        }
        if q.depth() < u.step() * (1.0 - 1e-12) {
            return precondition(format!("cylinder of radius {r} has depth {} below one time step", q.depth()));
        }
        osc.push(oscillation(u, &q)?);
    }
    fit_power_law(radii, &osc)
}

/// Oscillation of `u(x₀, ·)` over `(t₀ − s, t₀]` against `s = r^{2σ/α}`; the
/// fitted exponent is the time-direction Hölder exponent.
pub fn fit_time_exponent(u: &SpaceTimeGridFunction, x0: f64, t0: f64, radii: &[f64], sigma: f64, alpha: f64) -> Result<HolderEstimate> {
    check_geometric(radii)?;
    let i = u.x_index(x0).ok_or_else(|| Error::Invalid(format!("x₀ = {x0} is not a grid node")))?;
    let col = u.column(i);
    let spans: Vec<f64> = radii.iter().map(|r| r.powf(2.0 * sigma / alpha)).collect();
    if spans[spans.len() - 1] < 2.0 * u.step() * (1.0 - 1e-12) {
        return precondition("shortest time window is below two steps");
    }
    let osc: Vec<f64> = spans.iter().map(|&s| window_oscillation(&col, t0 - s, t0)).collect();
    fit_power_law(&spans, &osc)
}

fn window_oscillation(u: &TimeGridFunction, a: f64, b: f64) -> f64 {
    let tol = 1e-9 * u.step();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..u.len() {
        let t = u.time(j);
        if t > a + tol && t <= b + tol {
            lo = lo.min(u.value(j));
            hi = hi.max(u.value(j));
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Modulus of continuity `ω(r) = max{|u(t) − u(s)| : t, s ∈ I, |t − s| ≤ r}`
/// fitted against `r`; radii must be at least 4 steps.
pub fn fit_modulus_exponent(u: &TimeGridFunction, interval: (f64, f64), radii: &[f64]) -> Result<HolderEstimate> {
    check_geometric(radii)?;
    let eps = u.step();
    if radii[radii.len() - 1] < 4.0 * eps * (1.0 - 1e-12) {
        return precondition("smallest radius is below 4 grid steps");
    }
    let (a, b) = interval;
    let tol = 1e-9 * eps;
    if !(b > a) || a < u.t_start() - tol || b > u.t_end() + tol {
        return invalid(format!("interval [{a}, {b}] is degenerate or leaves the grid"));
    }
    let idx: Vec<usize> = (0..u.len()).filter(|&j| u.time(j) >= a - tol && u.time(j) <= b + tol).collect();
    let osc: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let reach = (r / eps + 1e-9).floor() as usize;
            let mut m = 0.0f64;
            for (p, &i) in idx.iter().enumerate() {
                for &k in idx[p + 1..].iter().take(reach) {
                    m = m.max((u.value(k) - u.value(i)).abs());
                }
            }
            m
        })
        .collect();
    fit_power_law(radii, &osc)
}

// ---------------------------------------------------------------- sweeps ----

#[derive(Debug, Clone)]
pub enum KernelForm {
    Caputo,
    Modulated { lambda: f64, big_lambda: f64, rho: TimeModulation },
}

impl KernelForm {
    pub fn build(&self, alpha: f64) -> Result<TimeKernel> {
        match self {
            KernelForm::Caputo => TimeKernel::caputo(alpha),
            KernelForm::Modulated { lambda, big_lambda, rho } => TimeKernel::modulated(alpha, *lambda, *big_lambda, rho.clone()),
        }
    }
}

/// `D v = f` on `[t_start, t_end]` from rest, measured on `interval`.
#[derive(Clone)]
pub struct OdeSweepFamily {
    pub kernel: KernelForm,
    pub rhs: TimeFn,
    pub rhs_sup: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub interval: (f64, f64),
    pub radii: Vec<f64>,
}

/// Space–time problem measured by cylinder oscillations at `(x0, t0)`.
#[derive(Clone)]
pub struct ParabolicSweepFamily {
    pub kernel: KernelForm,
    pub family: SpaceKernelFamily,
    pub rhs: SpaceTimeFn,
    pub rhs_sup: f64,
    pub x_half_width: f64,
    pub nx: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub tail: SpatialTail,
    pub x0: f64,
    pub t0: f64,
    pub radii: Vec<f64>,
}

#[derive(Clone)]
pub enum SweepFamily {
    Ode(OdeSweepFamily),
    Parabolic(ParabolicSweepFamily),
}

impl SweepFamily {
    pub fn describe(&self) -> String {
        match self {
            SweepFamily::Ode(p) => format!("ode on [{}, {}], ε = {}, kernel {:?}, ‖f‖ = {}", p.t_start, p.t_end, p.step, p.kernel, p.rhs_sup),
            SweepFamily::Parabolic(p) => format!(
                "parabolic on [−{0}, {0}] × [{1}, {2}], nx = {3}, ε = {4}, kernel {5:?}, ‖f‖ = {6}",
                p.x_half_width, p.t_start, p.t_end, p.nx, p.step, p.kernel, p.rhs_sup
            ),
        }
    }

    fn rhs_sup(&self) -> f64 {
        match self {
            SweepFamily::Ode(p) => p.rhs_sup,
            SweepFamily::Parabolic(p) => p.rhs_sup,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub kappa: f64,
    pub constant: f64,
    pub residual: f64,
    /// Largest scheme residual of the solve.
    pub solver_residual: f64,
    /// Seminorm at the sweep's smallest exponent (ODE mode), or `Ĉ`.
    pub seminorm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub family: String,
    pub rows: Vec<SweepRow>,
    pub kappa_min: f64,
    /// `−d log Ĉ / d log(1 − α)` over the last three rows.
    pub blowup_exponent: f64,
    pub pass: bool,
}

impl SweepResult {
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        use crate::grid::fmt17;
        writeln!(w, "alpha,kappa,constant,residual")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", fmt17(r.alpha), fmt17(r.kappa), fmt17(r.constant), fmt17(r.residual))?;
        }
        Ok(())
    }
}

struct Measured {
    row: SweepRow,
    ode: Option<TimeGridFunction>,
}

fn measure(family: &SweepFamily, alpha: f64, spec: &QuadratureSpec) -> Result<Measured> {
    match family {
        SweepFamily::Ode(p) => {
            let kernel = p.kernel.build(alpha)?;
            let prob = OdeProblem::new(kernel, p.rhs.clone(), p.t_start, p.t_end, p.step);
            let sol = solve_discrete(&prob, spec)?;
            let solver_residual = sol.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            let u = sol.solution;
            let row = if u.sup_abs() == 0.0 {
                SweepRow { alpha, kappa: 1.0, constant: 0.0, residual: 0.0, solver_residual, seminorm: 0.0 }
            } else {
                let est = fit_modulus_exponent(&u, p.interval, &p.radii)?;
                SweepRow { alpha, kappa: est.exponent, constant: est.constant, residual: est.residual, solver_residual, seminorm: f64::NAN }
            };
            Ok(Measured { row, ode: Some(u) })
        }
        SweepFamily::Parabolic(p) => {
            let kernel = p.kernel.build(alpha)?;
            let prob = ParabolicProblem::new(kernel, p.family.clone(), p.rhs.clone(), p.x_half_width, p.nx, p.t_start, p.t_end, p.step).with_tail(p.tail);
            let sol = solve_parabolic(&prob, spec)?;
            let solver_residual = sol.max_abs_residual();
            let u = sol.u;
            let row = if u.values().iter().all(|v| *v == 0.0) {
                SweepRow { alpha, kappa: 1.0, constant: 0.0, residual: 0.0, solver_residual, seminorm: 0.0 }
            } else {
                let est = fit_holder_exponent(&u, p.x0, p.t0, &p.radii, p.family.sigma(), alpha)?;
                SweepRow { alpha, kappa: est.exponent, constant: est.constant, residual: est.residual, solver_residual, seminorm: est.constant }
            };
            Ok(Measured { row, ode: None })
        }
    }
}

/// Solves and fits at every `α` (in parallel). On a solver or fit failure the
/// rows measured before the failing `α` are returned inside the error text.
pub fn alpha_sweep(family: &SweepFamily, alphas: &[f64], spec: &QuadratureSpec) -> Result<SweepResult> {
    if alphas.is_empty() {
        return invalid("empty α list");
    }
    for w in alphas.windows(2) {
        if !(w[1] > w[0]) {
            return invalid("α values must be strictly increasing");
        }
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 0.995)) {
        return invalid(format!("α = {a} outside (0, 0.995]"));
    }
    let results: Vec<Result<Measured>> = alphas.par_iter().map(|&a| measure(family, a, spec)).collect();
    let mut measured = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => measured.push(m),
            Err(e) => {
                let partial: Vec<String> = measured.iter().map(|m: &Measured| format!("{:?}", m.row)).collect();
                return Err(Error::Invalid(format!("sweep failed at α = {}: {e}; partial table: [{}]", alphas[k], partial.join("; "))));
            }
        }
    }
    let kappa_min = measured.iter().map(|m| m.row.kappa).fold(f64::INFINITY, f64::min);
    if let SweepFamily::Ode(p) = family {
        let beta = kappa_min.clamp(1e-6, 1.0);
        for m in &mut measured {
            if m.row.seminorm.is_nan() {
                m.row.seminorm = holder_seminorm(m.ode.as_ref().expect("ode mode"), beta, p.interval)?.value;
            }
        }
    }
    let rows: Vec<SweepRow> = measured.into_iter().map(|m| m.row).collect();
    let blowup_exponent = blowup(&rows);
    let pass = rows.iter().all(|r| r.kappa > 0.0 && r.kappa.is_finite()) && blowup_exponent < 0.5 && family.rhs_sup() >= 0.0;
    Ok(SweepResult { family: family.describe(), rows, kappa_min, blowup_exponent, pass })
}

/// Slope of `log Ĉ` against `−log(1 − α)` over the last three rows (0 when
/// fewer rows or a vanishing constant).
fn blowup(rows: &[SweepRow]) -> f64 {
    if rows.len() < 3 {
        return 0.0;
    }
    let tail = &rows[rows.len() - 3..];
    if tail.iter().any(|r| !(r.constant > 0.0)) {
        return 0.0;
    }
    let xs: Vec<f64> = tail.iter().map(|r| -(1.0 - r.alpha).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.constant.ln()).collect();
    least_squares(&xs, &ys).0
}

// ------------------------------------------------------- level-set probes ----

#[derive(Debug, Clone, PartialEq)]
pub struct RingRow {
    pub k: usize,
    pub radius: f64,
    /// Counting measure of `{u < u(t₀) − M r_k}` in the ring.
    pub sublevel: f64,
    /// Counting measure of the ring.
    pub ring: f64,
    /// Smallest `C₀` with `sublevel ≤ C₀ f(t₀)/M · ring`.
    pub c0_needed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub t0: f64,
    pub rings: Vec<RingRow>,
    /// First ring satisfying the bound with the supplied `C₀`.
    pub first_k: Option<usize>,
    pub min_c0: f64,
}

/// Sub-level measure on the dyadic rings `R_k = [t₀ − r_k, t₀ − r_{k+1}]`,
/// `r_k = 2^{−1/(1−α)} 2^{−k}`, for a function attaining its running max at
/// `t₀` with `M^−_α u(t₀) ≤ f(t₀)`.
#[allow(clippy::too_many_arguments)]
pub fn measure_estimate_probe(
    u: &TimeGridFunction,
    t0: f64,
    f_t0: f64,
    lambda: f64,
    big_lambda: f64,
    big_m: f64,
    c0: f64,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<MeasureReport> {
    if !(big_m > 0.0) {
        return invalid(format!("M = {big_m} must be positive"));
    }
    let j0 = u.index_of(t0).ok_or_else(|| Error::Invalid(format!("t₀ = {t0} is not on the grid")))?;
    let u0 = u.value(j0);
    let tol = 1e-12 * (1.0 + u0.abs());
    if let Some(j) = (0..j0).find(|&j| u.value(j) > u0 + tol) {
        return precondition(format!("running max not attained at t₀: u({}) = {} > u(t₀) = {u0}", u.time(j), u.value(j)));
    }
    match u.history().sup_bound() {
        Some(s) if s <= u0 + tol => {}
        _ => return precondition("history exceeds u(t₀) or is unbounded"),
    }
    let stencil = TimeStencil::for_grid(&TimeKernel::caputo(alpha)?, u, spec)?;
    let mm = pucci_time_with(&stencil, u, lambda, big_lambda, Sign::Minus, j0)?;
    if j0 > 0 && mm > f_t0 + 1e-8 * (1.0 + f_t0.abs()) {
        return precondition(format!("M⁻u(t₀) = {mm} exceeds f(t₀) = {f_t0}"));
    }
    let eps = u.step();
    let r0 = 2f64.powf(-1.0 / (1.0 - alpha));
    let mut rings = Vec::new();
    let mut k = 0;
    loop {
        let rk = r0 * 0.5f64.powi(k as i32);
        let rk1 = 0.5 * rk;
        if rk1 < 2.0 * eps || t0 - rk < u.t_start() - 1e-12 {
            break;
        }
        let level = u0 - big_m * rk;
        let (mut sub, mut ring) = (0usize, 0usize);
        for j in 0..=j0 {
            let s = u.time(j);
            if s >= t0 - rk - 1e-12 && s <= t0 - rk1 + 1e-12 {
                ring += 1;
                if u.value(j) < level {
                    sub += 1;
                }
            }
        }
        let (sub, ring) = (sub as f64 * eps, ring as f64 * eps);
        let c0_needed = if sub == 0.0 {
            0.0
        } else if f_t0 > 0.0 {
            sub * big_m / (f_t0 * ring)
        } else {
            f64::INFINITY
        };
        rings.push(RingRow { k, radius: rk, sublevel: sub, ring, c0_needed });
        k += 1;
    }
    let first_k = rings.iter().find(|r| r.c0_needed <= c0).map(|r| r.k);
    let min_c0 = rings.iter().map(|r| r.c0_needed).fold(f64::INFINITY, f64::min);
    Ok(MeasureReport { t0, rings, first_k, min_c0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LEpsilonReport {
    /// `(t, |{u > t} ∩ [t_end − r, t_end]|)`.
    pub curve: Vec<(f64, f64)>,
    pub d: f64,
    pub epsilon: f64,
    /// `max measure/bound − 1` at the reported `(d, ε)`.
    pub violation: f64,
    pub pass: bool,
}

/// Super-level measure curve on `[t_end − r, t_end]` against the bound
/// `d r A^ε t^{−ε}`, `A = 2u(t_end) + C₀ r^α/ε₀`.
#[allow(clippy::too_many_arguments)]
pub fn lepsilon_probe(
    u: &TimeGridFunction,
    c0: f64,
    r: f64,
    eps0: f64,
    lambda: f64,
    big_lambda: f64,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<LEpsilonReport> {
    if !(r > 0.0) || !(eps0 > 0.0) || !(c0 >= 0.0) {
        return invalid("lepsilon probe needs r > 0, ε₀ > 0, C₀ ≥ 0");
    }
    if u.values().iter().any(|v| *v < 0.0) || u.history().inf_bound() < 0.0 {
        return precondition("u must be nonnegative on its grid and history");
    }
    let t_end = u.t_end();
    let eps = u.step();
    let stencil = TimeStencil::for_grid(&TimeKernel::caputo(alpha)?, u, spec)?;
    for j in 1..u.len() {
        if u.time(j) >= t_end - 2.0 * r - 1e-12 {
            let mp = pucci_time_with(&stencil, u, lambda, big_lambda, Sign::Plus, j)?;
            if mp < -c0 - 1e-8 * (1.0 + c0) {
                return Err(Error::HypothesesNotMet(format!("M⁺u({}) = {mp} < −C₀", u.time(j))));
            }
        }
    }
    let window: Vec<f64> = (0..u.len()).filter(|&j| u.time(j) >= t_end - r - 1e-12).map(|j| u.value(j)).collect();
    let big_a = 2.0 * u.value(u.len() - 1) + c0 * r.powf(alpha) / eps0;
    let top = window.iter().cloned().fold(0.0, f64::max);
    let bottom = window.iter().cloned().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if top == 0.0 {
        return Ok(LEpsilonReport { curve: vec![], d: 0.0, epsilon: 1.0, violation: -1.0, pass: true });
    }
    let levels = 64;
    let lo = (0.5 * bottom).max(top * 1e-6);
    let curve: Vec<(f64, f64)> = (0..levels)
        .map(|k| {
            let t = lo * (top / lo).powf(k as f64 / (levels - 1) as f64) * (1.0 - 1e-12);
            (t, window.iter().filter(|&&v| v > t).count() as f64 * eps)
        })
        .collect();
    let pts: Vec<(f64, f64)> = curve.iter().filter(|(_, m)| *m > 0.0).map(|&(t, m)| (t.ln(), m.ln())).collect();
    if !(big_a > 0.0) {
        return Ok(LEpsilonReport { curve, d: f64::INFINITY, epsilon: 0.0, violation: f64::INFINITY, pass: false });
    }
    let epsilon = if pts.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
        (-least_squares(&xs, &ys).0).max(1e-3)
    } else {
        1.0
    };
    let bound = |t: f64| r * big_a.powf(epsilon) * t.powf(-epsilon);
    let d = curve.iter().map(|&(t, m)| m / bound(t)).fold(0.0, f64::max);
    let violation = curve.iter().map(|&(t, m)| if m > 0.0 { m / (d * bound(t)) - 1.0 } else { -1.0 }).fold(-1.0, f64::max);
    Ok(LEpsilonReport { curve, d, epsilon, violation, pass: epsilon > 0.0 && d.is_finite() && violation <= 0.05 })
}
