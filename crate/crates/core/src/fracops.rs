//! Discrete nonlocal operators.
//!
//! Time: product integration of `∫ (u(t) − u(s)) K(t, s) ds` against the
//! piecewise-linear interpolant of the samples (optionally with a `x^α`
//! shape on the first cell), closed by an integral over the history.
//! Space: hats in `y` for `g = δ(u, x, y)/y²` in `∫ δ K(y) dy`, a quadratic
//! model for `δ` on `|y| < h` and a change of variables for the far field.
//!
//! Every modulated weight is computed with the same quadrature points as the
//! reference weight it is compared with, so `λ·ref ≤ K ≤ Λ·ref` holds weight
//! by weight and the Pucci sandwich is exact at the discrete level.

use crate::error::{invalid, Error, Result};
use crate::grid::{HistoryKind, HistorySpec, SpaceTimeGridFunction, SpatialTail, TimeGridFunction};
use crate::kernels::{SpaceKernelFamily, SpaceModulation, TimeKernel};
use crate::quad::{adaptive, AdaptiveOptions, GaussLegendre, Grading};
use crate::special::{gamma, inv_gamma_one_minus};

/// Shape of the interpolant on the first cell `[t_0, t_1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartBasis {
    /// Hat functions throughout (the classical L1 scheme).
    Linear,
    /// Node 1 carries `((s − t_0)/ε)^α` on the first cell, matching the
    /// `(t − t_0)^α` onset of solutions started from rest.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute error admitted when truncating bounded history integrals.
    pub tail_cutoff_error: f64,
    /// Relative tolerance of the adaptive history quadrature.
    pub history_rel_tol: f64,
    pub start_basis: StartBasis,
    /// Gauss–Legendre points per panel.
    pub gauss_points: usize,
    /// Geometric levels used on panels with endpoint singularities.
    pub grading_levels: usize,
    /// Panels of the mapped spatial far-field rule.
    pub far_field_panels: usize,
    pub max_intervals: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tail_cutoff_error: 1e-8,
            history_rel_tol: 1e-10,
            start_basis: StartBasis::Power,
            gauss_points: 10,
            grading_levels: 30,
            far_field_panels: 24,
            max_intervals: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_cutoff_error > 0.0) || !(self.history_rel_tol > 0.0) {
            return invalid("quadrature tolerances must be positive");
        }
        if self.gauss_points < 2 || self.far_field_panels == 0 || self.max_intervals < 10 {
            return invalid("quadrature needs ≥ 2 Gauss points, ≥ 1 far-field panel and ≥ 10 adaptive panels");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `Λ d_+ − λ d_−` (plus) or `λ d_+ − Λ d_−` (minus).
#[inline]
pub fn pucci_weight(d: f64, lambda: f64, big_lambda: f64, sign: Sign) -> f64 {
    let (up, down) = match sign {
        Sign::Plus => (big_lambda, lambda),
        Sign::Minus => (lambda, big_lambda),
    };
    if d >= 0.0 {
        up * d
    } else {
        down * d
    }
}

/// One row of the time discretisation at node `j`: `weights[i]` multiplies
/// `u_j − u_i` (`i < j`) and `history` is `∫_{−∞}^{t_0} K(t_j, s) ds`.
#[derive(Debug, Clone)]
pub struct StencilRow {
    pub weights: Vec<f64>,
    pub history: f64,
}

impl StencilRow {
    /// Coefficient of `u_j`.
    pub fn diagonal(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.history
    }
}

#[derive(Debug, Clone)]
struct LagCache {
    /// Left half of a hat at lag `d` (index `d`, `d ≥ 1`).
    left: Vec<f64>,
    /// Right half of a hat at lag `d`; `right[1]` is the singular cell.
    right: Vec<f64>,
    node1_left: Vec<f64>,
    node0: Vec<f64>,
    history: Vec<f64>,
}

/// Product-integration weights of a time kernel on a uniform grid.
#[derive(Debug, Clone)]
pub struct TimeStencil {
    kernel: TimeKernel,
    t_start: f64,
    step: f64,
    n: usize,
    spec: QuadratureSpec,
    gl: GaussLegendre,
    cache: Option<LagCache>,
}

impl TimeStencil {
    pub fn new(kernel: &TimeKernel, t_start: f64, step: f64, n: usize, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        if !(step > 0.0) || n == 0 {
            return invalid(format!("bad time grid for stencil: step {step}, {n} nodes"));
        }
        let mut me = Self {
            kernel: kernel.clone(),
            t_start,
            step,
            n,
            spec: *spec,
            gl: GaussLegendre::new(spec.gauss_points),
            cache: None,
        };
        if kernel.is_translation_invariant() {
            me.cache = Some(me.build_cache()?);
        }
        Ok(me)
    }

    pub fn for_grid(kernel: &TimeKernel, u: &TimeGridFunction, spec: &QuadratureSpec) -> Result<Self> {
        Self::new(kernel, u.t_start(), u.step(), u.len(), spec)
    }

    pub fn kernel(&self) -> &TimeKernel {
        &self.kernel
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    fn time(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.step
    }

    fn build_cache(&self) -> Result<LagCache> {
        let n = self.n;
        // Lags are measured from a virtual evaluation node; only differences
        // of times enter, so any reference time works.
        let tj = self.time(n.saturating_sub(1));
        let mut left = vec![0.0; n + 1];
        let mut right = vec![0.0; n + 1];
        for d in 1..=n {
            left[d] = self.left_half(tj, d);
            right[d] = self.right_half(tj, d);
        }
        let mut node1_left = vec![0.0; n];
        let mut node0 = vec![0.0; n];
        let mut history = vec![0.0; n];
        for j in 1..n {
            // Shift the reference so that node j sits at tj.
            let t0 = tj - j as f64 * self.step;
            node1_left[j] = match self.spec.start_basis {
                StartBasis::Linear => left[j - 1],
                StartBasis::Power => self.power_left(tj, t0),
            };
            node0[j] = match self.spec.start_basis {
                StartBasis::Linear => right[j],
                StartBasis::Power => self.power_node0(tj, t0, j),
            };
            history[j] = self.history_weight(tj, t0)?;
        }
        Ok(LagCache { left, right, node1_left, node0, history })
    }

    /// `A ∫ basis(s) ρ(t_j, s) (t_j − s)^{−1−α} ds` over a cell away from `t_j`.
    fn cell<B: Fn(f64) -> f64>(&self, tj: f64, lo: f64, hi: f64, grading: Grading, basis: B) -> f64 {
        let k = &self.kernel;
        let a = k.prefactor();
        let p = -1.0 - k.alpha();
        self.gl
            .graded(lo, hi, grading, self.spec.grading_levels, |s| basis(s) * k.rho(tj, s) * a * (tj - s).powf(p))
    }

    /// Cell `[t_j − ε, t_j]` where the basis vanishes linearly at `t_j`:
    /// `basis(τ) = (τ/ε)·β(τ/ε)`. Uses `τ = ε z^{1/(1−α)}`, which absorbs
    /// the singularity exactly.
    fn singular_cell<B: Fn(f64) -> f64>(&self, tj: f64, grading: Grading, beta: B) -> f64 {
        let k = &self.kernel;
        let al = k.alpha();
        let p = 1.0 / (1.0 - al);
        let eps = self.step;
        let scale = k.prefactor() * eps.powf(-al) / (1.0 - al);
        scale
            * self.gl.graded(0.0, 1.0, grading, self.spec.grading_levels, |z| {
                let x = z.powf(p);
                beta(x) * k.rho(tj, tj - eps * x)
            })
    }

    fn left_half(&self, tj: f64, d: usize) -> f64 {
        let eps = self.step;
        let lo = tj - (d + 1) as f64 * eps;
        let hi = tj - d as f64 * eps;
        self.cell(tj, lo, hi, Grading::None, |s| (s - lo) / eps)
    }

    fn right_half(&self, tj: f64, d: usize) -> f64 {
        let eps = self.step;
        if d == 1 {
            return self.singular_cell(tj, Grading::None, |_| 1.0);
        }
        let lo = tj - d as f64 * eps;
        let hi = tj - (d - 1) as f64 * eps;
        self.cell(tj, lo, hi, Grading::None, |s| (hi - s) / eps)
    }

    /// Node 1 on the first cell with the `x^α` shape (`j ≥ 2`).
    fn power_left(&self, tj: f64, t0: f64) -> f64 {
        let eps = self.step;
        let al = self.kernel.alpha();
        self.cell(tj, t0, t0 + eps, Grading::Low, |s| ((s - t0) / eps).max(0.0).powf(al))
    }

    /// Node 0 on the first cell: basis `1 − ((s − t_0)/ε)^α`.
    fn power_node0(&self, tj: f64, t0: f64, j: usize) -> f64 {
        let eps = self.step;
        let al = self.kernel.alpha();
        if j == 1 {
            // β(x) = (1 − (1 − x)^α)/x, with x = (t_1 − s)/ε.
            return self.singular_cell(tj, Grading::High, |x| {
                if x <= 0.0 {
                    al
                } else {
                    -(al * (-x).ln_1p()).exp_m1() / x
                }
            });
        }
        self.cell(tj, t0, t0 + eps, Grading::Low, |s| {
            let x = ((s - t0) / eps).max(0.0);
            1.0 - x.powf(al)
        })
    }

    /// `∫_{−∞}^{t_0} K(t_j, s) ds`.
    fn history_weight(&self, tj: f64, t0: f64) -> Result<f64> {
        let k = &self.kernel;
        let al = k.alpha();
        let dist = tj - t0;
        let reference = inv_gamma_one_minus(al) * dist.powf(-al);
        if let Some(c) = k.modulation().as_constant() {
            return Ok(c * reference);
        }
        self.history_integral(tj, t0, &|_| 1.0, Some(1.0), 0.0, f64::INFINITY, |s| k.rho(tj, s))
    }

    /// `∫_{−∞}^{t_0} g(s) ρ(s) (t_j − s)^{−1−α} α/Γ(1−α) ds` in the variable
    /// `u = (t_j − s)^{−α}`, i.e. `(1/Γ(1−α)) ∫_0^{D^{−α}} g ρ du`.
    ///
    /// Bounded integrands (`sup` given) are truncated where the neglected
    /// part is below `tail_cutoff_error`; growing ones (`growth = ν < α`) are
    /// regularised by `u = U w^m`.
    ///
    /// Oscillating modulations (`ρ = mean + amp·cos(ωx − φ)` in the lag `x`)
    /// cannot be truncated at that budget, so beyond a cut `x_c` (at least
    /// twenty periods, and past the last kink of `g`) the mean is handled as
    /// above and the cosine part is summed over half-periods with repeated
    /// averaging of the alternating partial sums.
    #[allow(clippy::too_many_arguments)]
    fn history_integral<R: Fn(f64) -> f64>(
        &self,
        tj: f64,
        t0: f64,
        g: &dyn Fn(f64) -> f64,
        sup: Option<f64>,
        growth: f64,
        smooth_before: f64,
        rho: R,
    ) -> Result<f64> {
        let k = &self.kernel;
        let Some(hm) = k.modulation().harmonic(tj) else {
            return self.history_tail(tj, t0, g, sup, growth, rho);
        };
        if sup == Some(0.0) {
            return Ok(0.0);
        }
        let al = k.alpha();
        let ig = inv_gamma_one_minus(al);
        let dist = tj - t0;
        let x_c = dist.max(tj - smooth_before.min(t0)).max(40.0 * std::f64::consts::PI / hm.omega);
        // [t_j − x_c, t_0] with the full modulation, in u = (t_j − s)^{−α}.
        let near = if x_c > dist {
            let s_of = |u: f64| tj - u.powf(-1.0 / al);
            let opts = AdaptiveOptions {
                abs_tol: 1e-2 * self.spec.tail_cutoff_error / ig,
                rel_tol: self.spec.history_rel_tol,
                max_intervals: self.spec.max_intervals,
                oscillation_bound: None,
            };
            ig * adaptive(|u| g(s_of(u)) * rho(s_of(u)), x_c.powf(-al), dist.powf(-al), opts)?.value
        } else {
            0.0
        };
        let mean = self.history_tail(tj, tj - x_c, g, sup, growth, |_| hm.mean)?;
        // ∫_{x_c}^∞ g(t_j − x) cos(ωx − φ) x^{−1−α} dx.
        let f = |x: f64| g(tj - x) * (hm.omega * x - hm.phase).cos() * x.powf(-1.0 - al);
        let half = std::f64::consts::PI / hm.omega;
        let zero = |n: f64| (hm.phase + 0.5 * std::f64::consts::PI + n * std::f64::consts::PI) / hm.omega;
        let n0 = ((hm.omega * x_c - hm.phase - 0.5 * std::f64::consts::PI) / std::f64::consts::PI).ceil();
        let mut x = zero(n0);
        let mut partial = self.gl.integrate(x_c, x, f);
        const TERMS: usize = 48;
        let mut sums = Vec::with_capacity(TERMS);
        for _ in 0..TERMS {
            partial += self.gl.integrate(x, x + half, f);
            sums.push(partial);
            x += half;
        }
        // Euler-style repeated averaging of the last partial sums.
        let mut level: Vec<f64> = sums[TERMS / 2..].to_vec();
        while level.len() > 1 {
            level = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        }
        Ok(near + mean + k.prefactor() * hm.amp * level[0])
    }

    fn history_tail<R: Fn(f64) -> f64>(
        &self,
        tj: f64,
        t0: f64,
        g: &dyn Fn(f64) -> f64,
        sup: Option<f64>,
        growth: f64,
        rho: R,
    ) -> Result<f64> {
        let k = &self.kernel;
        let al = k.alpha();
        let big = k.big_lambda();
        let ig = inv_gamma_one_minus(al);
        let dist = tj - t0;
        let u_max = dist.powf(-al);
        let s_of = |u: f64| tj - u.powf(-1.0 / al);
        let value = match sup {
            Some(m) => {
                if m == 0.0 {
                    return Ok(0.0);
                }
                let u_min = self.spec.tail_cutoff_error / (ig * big * m);
                if u_min >= u_max {
                    return Ok(0.0);
                }
                let opts = AdaptiveOptions {
                    abs_tol: self.spec.history_rel_tol * big * m * u_max,
                    rel_tol: self.spec.history_rel_tol,
                    max_intervals: self.spec.max_intervals,
                    oscillation_bound: Some(2.0 * big * m),
                };
                adaptive(|u| g(s_of(u)) * rho(s_of(u)), u_min, u_max, opts)?.value
            }
            None => {
                if !(growth < al) {
                    return Err(Error::Precondition(format!(
                        "history growth exponent {growth} must be below the time order {al}"
                    )));
                }
                let m = 1.0 / (1.0 - growth / al) + 1.0;
                let opts = AdaptiveOptions {
                    abs_tol: 1e-300,
                    rel_tol: self.spec.history_rel_tol,
                    max_intervals: self.spec.max_intervals,
                    oscillation_bound: None,
                };
                adaptive(
                    |w| {
                        if w <= 0.0 {
                            return 0.0;
                        }
                        let u = u_max * w.powf(m);
                        let s = s_of(u);
                        g(s) * rho(s) * u_max * m * w.powf(m - 1.0)
                    },
                    0.0,
                    1.0,
                    opts,
                )?
                .value
            }
        };
        Ok(ig * value)
    }

    /// Weights of row `j ≥ 1`.
    pub fn row(&self, j: usize) -> StencilRow {
        assert!(j >= 1 && j < self.n, "row index {j} outside 1..{}", self.n);
        let mut weights = vec![0.0; j];
        if let Some(c) = &self.cache {
            weights[0] = c.node0[j];
            if j >= 2 {
                weights[1] = c.node1_left[j] + c.right[j - 1];
            }
            for (i, w) in weights.iter_mut().enumerate().skip(2) {
                *w = c.left[j - i] + c.right[j - i];
            }
            return StencilRow { weights, history: c.history[j] };
        }
        let tj = self.time(j);
        let t0 = self.t_start;
        weights[0] = match self.spec.start_basis {
            StartBasis::Linear => self.right_half(tj, j),
            StartBasis::Power => self.power_node0(tj, t0, j),
        };
        if j >= 2 {
            let l = match self.spec.start_basis {
                StartBasis::Linear => self.left_half(tj, j - 1),
                StartBasis::Power => self.power_left(tj, t0),
            };
            weights[1] = l + self.right_half(tj, j - 1);
        }
        for (i, w) in weights.iter_mut().enumerate().skip(2) {
            *w = self.left_half(tj, j - i) + self.right_half(tj, j - i);
        }
        let history = self.history_weight(tj, t0).expect("bounded modulation integrates");
        StencilRow { weights, history }
    }

    /// `∫_{−∞}^{t_0} φ(s) K(t_j, s) ds`.
    pub fn history_coupling(&self, j: usize, history: &HistorySpec, row: &StencilRow) -> Result<f64> {
        match history.kind() {
            HistoryKind::Zero => Ok(0.0),
            HistoryKind::Constant(c) => Ok(c * row.history),
            _ => {
                let tj = self.time(j);
                let k = &self.kernel;
                self.history_integral(tj, self.t_start, &|s| history.eval(s), history.sup_bound(), history.growth_exponent(), history.smooth_before(), |s| {
                    k.rho(tj, s)
                })
            }
        }
    }

    /// `∫_{−∞}^{t_0} G(u_j − φ(s)) K(t_j, s) ds` for a Lipschitz `G` with
    /// `G(0) = 0` and slopes in `[λ, Λ]`.
    pub fn history_nonlinear(&self, j: usize, uj: f64, history: &HistorySpec, big: f64, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        let tj = self.time(j);
        let k = &self.kernel;
        match history.kind() {
            HistoryKind::Zero | HistoryKind::Constant(_) => {
                let c = history.eval(self.t_start - 1.0);
                let w = self.history_weight(tj, self.t_start)?;
                Ok(g(uj - c) * w)
            }
            _ => {
                let sup = history.sup_bound().map(|m| big * (m + uj.abs()));
                self.history_integral(tj, self.t_start, &|s| g(uj - history.eval(s)), sup, history.growth_exponent(), history.smooth_before(), |s| {
                    k.rho(tj, s)
                })
            }
        }
    }

    /// `D u(t_j)` using precomputed row `row`.
    pub fn apply_row(&self, u: &[f64], j: usize, row: &StencilRow, history_coupling: f64) -> f64 {
        let uj = u[j];
        let mut acc = 0.0;
        for (i, w) in row.weights.iter().enumerate() {
            acc += w * (uj - u[i]);
        }
        acc + row.history * uj - history_coupling
    }
}

fn check_same_grid(stencil: &TimeStencil, u: &TimeGridFunction, j: usize) -> Result<()> {
    if stencil.len() <= j.min(u.len().saturating_sub(1))
        || (stencil.step() - u.step()).abs() > 1e-12 * u.step()
        || (stencil.t_start() - u.t_start()).abs() > 1e-12 * (1.0 + u.t_start().abs())
    {
        return invalid("stencil and grid function live on different time grids");
    }
    Ok(())
}

/// Generalized Marchaud derivative `∫_{−∞}^{t_j} (u(t_j) − u(s)) K(t_j, s) ds`
/// at node `j` (for `j = 0` only the history contributes).
pub fn marchaud_eval(u: &TimeGridFunction, kernel: &TimeKernel, j: usize, spec: &QuadratureSpec) -> Result<f64> {
    let stencil = TimeStencil::new(kernel, u.t_start(), u.step(), j.max(1) + 1, spec)?;
    marchaud_with(&stencil, u, j)
}

pub fn marchaud_with(stencil: &TimeStencil, u: &TimeGridFunction, j: usize) -> Result<f64> {
    check_same_grid(stencil, u, j)?;
    if j >= u.len() {
        return invalid(format!("time index {j} outside the grid"));
    }
    if j == 0 {
        let g = |d: f64| d;
        return stencil.history_nonlinear_at_start(u.value(0), u.history(), &g);
    }
    let row = stencil.row(j);
    let hc = stencil.history_coupling(j, u.history(), &row)?;
    Ok(stencil.apply_row(u.values(), j, &row, hc))
}

impl TimeStencil {
    /// `∫_{−∞}^{t_0} G(u_0 − φ(s)) K(t_0, s) ds`; needs `φ` to vanish
    /// to first order at `t_0` only through the kernel, so it is evaluated
    /// by the mapped rule on `[t_0 − ε, t_0]` plus the shifted history.
    fn history_nonlinear_at_start(&self, u0: f64, history: &HistorySpec, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        let k = &self.kernel;
        let t0 = self.t_start;
        // Split off one cell: on [t_0 − ε, t_0] integrate G(u0 − φ(s)) with
        // the singular mapping, which needs G(u0 − φ(s)) = O(t_0 − s).
        let eps = self.step;
        let near = self.singular_cell(t0, Grading::None, |x| {
            if x <= 0.0 {
                return 0.0;
            }
            g(u0 - history.eval(t0 - eps * x)) / x
        });
        let sup = history.sup_bound().map(|m| k.big_lambda() * (m + u0.abs()));
        let far = self.history_integral(t0, t0 - eps, &|s| g(u0 - history.eval(s)), sup, history.growth_exponent(), history.smooth_before(), |s| {
            k.rho(t0, s)
        })?;
        Ok(near + far)
    }
}

/// Extremal time operator `M_α^± u(t_j)` with ellipticity band `[λ, Λ]`.
pub fn pucci_time(u: &TimeGridFunction, alpha: f64, lambda: f64, big_lambda: f64, sign: Sign, j: usize, spec: &QuadratureSpec) -> Result<f64> {
    let stencil = TimeStencil::new(&TimeKernel::caputo(alpha)?, u.t_start(), u.step(), j.max(1) + 1, spec)?;
    pucci_time_with(&stencil, u, lambda, big_lambda, sign, j)
}

/// As [`pucci_time`] with a prebuilt reference (Caputo) stencil.
pub fn pucci_time_with(stencil: &TimeStencil, u: &TimeGridFunction, lambda: f64, big_lambda: f64, sign: Sign, j: usize) -> Result<f64> {
    check_same_grid(stencil, u, j)?;
    if !(lambda > 0.0 && lambda <= big_lambda) {
        return invalid(format!("need 0 < λ ≤ Λ, got {lambda}, {big_lambda}"));
    }
    if stencil.kernel().modulation().as_constant() != Some(1.0) {
        return invalid("Pucci operators use the reference kernel stencil");
    }
    let g = |d: f64| pucci_weight(d, lambda, big_lambda, sign);
    if j == 0 {
        return stencil.history_nonlinear_at_start(u.value(0), u.history(), &g);
    }
    let row = stencil.row(j);
    let uj = u.value(j);
    let mut acc = 0.0;
    for (i, w) in row.weights.iter().enumerate() {
        acc += w * g(uj - u.value(i));
    }
    Ok(acc + stencil.history_nonlinear(j, uj, u.history(), big_lambda, &g)?)
}

// ---------------------------------------------------------------- space ----

/// Values around a centre `x` on the lattice `x + k h`, and beyond it.
pub trait SliceValues {
    fn center(&self) -> f64;
    /// `u(x + k h)`.
    fn offset(&self, k: i64) -> f64;
    /// `u(x + y)` for `|y|` beyond the lattice part of the stencil.
    fn far(&self, y: f64) -> f64;
}

/// A grid slice `u(·, t_j)` centred at node `i`.
pub struct GridSlice<'a> {
    u: &'a SpaceTimeGridFunction,
    i: usize,
    j: usize,
}

impl<'a> GridSlice<'a> {
    pub fn new(u: &'a SpaceTimeGridFunction, i: usize, j: usize) -> Self {
        Self { u, i, j }
    }
}

impl SliceValues for GridSlice<'_> {
    fn center(&self) -> f64 {
        self.u.value(self.i, self.j)
    }
    fn offset(&self, k: i64) -> f64 {
        let idx = self.i as i64 + k;
        if idx >= 0 && (idx as usize) < self.u.nx() {
            self.u.value(idx as usize, self.j)
        } else {
            self.far(k as f64 * self.u.h())
        }
    }
    fn far(&self, y: f64) -> f64 {
        self.u.value_at(self.u.x(self.i) + y, self.j)
    }
}

/// An analytic profile sampled on demand.
pub struct FnSlice<F: Fn(f64) -> f64> {
    pub f: F,
    pub x: f64,
    pub h: f64,
}

impl<F: Fn(f64) -> f64> SliceValues for FnSlice<F> {
    fn center(&self) -> f64 {
        (self.f)(self.x)
    }
    fn offset(&self, k: i64) -> f64 {
        (self.f)(self.x + k as f64 * self.h)
    }
    fn far(&self, y: f64) -> f64 {
        (self.f)(self.x + y)
    }
}

/// Quadrature points `(y, q)` of the spatial stencil: `q` already contains
/// the basis value, the reference density and the factor 2 for `±y`.
#[derive(Debug, Clone)]
pub struct SpaceStencil {
    sigma: f64,
    h: f64,
    n_near: usize,
    near: Vec<Vec<(f64, f64)>>,
    far: Vec<(f64, f64)>,
    reference_near: Vec<f64>,
}

impl SpaceStencil {
    /// Lattice part on `0 < y ≤ n_near·h`, mapped far field beyond. The far
    /// rule is exact for constant exterior data and regularised for data
    /// growing like `|y|^growth` (`growth < 2σ`).
    pub fn new(sigma: f64, h: f64, n_near: usize, growth: f64, spec: &QuadratureSpec) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) || !(h > 0.0) || n_near < 2 {
            return invalid(format!("bad spatial stencil: σ = {sigma}, h = {h}, {n_near} lattice nodes"));
        }
        if !(growth >= 0.0 && growth < 2.0 * sigma) {
            return Err(Error::Precondition(format!("tail growth {growth} must be below 2σ = {}", 2.0 * sigma)));
        }
        let gl = GaussLegendre::new(spec.gauss_points);
        // δ(y) = y² g(y) with g even and smooth for C² data: g is interpolated
        // by hats at the lattice nodes, so the weight against the hat of node
        // k is 2 y^{1−2σ}/(k h)², which is integrable at the origin.
        let reduced = |y: f64, yk: f64| 2.0 * y.powf(1.0 - 2.0 * sigma) / (yk * yk);
        let mut near = vec![Vec::new(); n_near + 1];
        // Inner window: g ≡ g(h), i.e. δ(y) ≈ δ(h)(y/h)², y = h z^{1/(2−2σ)}.
        let q = 1.0 / (2.0 - 2.0 * sigma);
        for (z, w) in gl.mapped(0.0, 1.0) {
            near[1].push((h * z.powf(q), 2.0 * w * h.powf(-2.0 * sigma) * q));
        }
        for k in 1..=n_near {
            let yk = k as f64 * h;
            if k >= 2 {
                for (y, w) in gl.mapped(yk - h, yk) {
                    near[k].push((y, w * (y - (yk - h)) / h * reduced(y, yk)));
                }
            }
            if k < n_near {
                for (y, w) in gl.mapped(yk, yk + h) {
                    near[k].push((y, w * ((yk + h) - y) / h * reduced(y, yk)));
                }
            }
        }
        let far = far_rule(sigma, n_near as f64 * h, growth, &gl, spec.far_field_panels);
        let reference_near = near.iter().map(|pts| pts.iter().map(|(_, q)| q).sum()).collect();
        Ok(Self { sigma, h, n_near, near, far, reference_near })
    }

    /// Stencil for a grid function: the lattice part covers the whole grid.
    pub fn for_grid(u: &SpaceTimeGridFunction, sigma: f64, spec: &QuadratureSpec) -> Result<Self> {
        Self::new(sigma, u.h(), u.nx(), u.tail().growth_exponent(), spec)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn n_near(&self) -> usize {
        self.n_near
    }
    pub fn far_points(&self) -> &[(f64, f64)] {
        &self.far
    }
    /// Lattice weights of the reference kernel (index `k = 1..=n_near`).
    pub fn reference_near(&self) -> &[f64] {
        &self.reference_near
    }

    /// Lattice and far weights for the modulation `ρ(y)`.
    pub fn modulated(&self, rho: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let near = self.near.iter().map(|pts| pts.iter().map(|&(y, q)| q * rho(y)).sum()).collect();
        let far = self.far.iter().map(|&(y, q)| q * rho(y)).collect();
        (near, far)
    }

    /// Reference far weights (the `q` of each far point).
    pub fn reference_far(&self) -> Vec<f64> {
        self.far.iter().map(|&(_, q)| q).collect()
    }

    /// `Σ_k c_k δ_k + Σ_q c_q δ_q` with per-point weights `near`, `far`.
    pub fn apply_linear(&self, s: &impl SliceValues, near: &[f64], far: &[f64]) -> f64 {
        let c = s.center();
        let mut acc = 0.0;
        for k in 1..=self.n_near {
            let d = s.offset(k as i64) + s.offset(-(k as i64)) - 2.0 * c;
            acc += near[k] * d;
        }
        for (n, &(y, _)) in self.far.iter().enumerate() {
            let d = s.far(y) + s.far(-y) - 2.0 * c;
            acc += far[n] * d;
        }
        acc
    }

    /// `M_σ^± u(x) = ∫ (Λ δ_+ − λ δ_−) |y|^{−1−2σ} dy` (or its mirror).
    pub fn apply_pucci(&self, s: &impl SliceValues, lambda: f64, big_lambda: f64, sign: Sign) -> f64 {
        let c = s.center();
        let mut acc = 0.0;
        for k in 1..=self.n_near {
            let d = s.offset(k as i64) + s.offset(-(k as i64)) - 2.0 * c;
            acc += self.reference_near[k] * pucci_weight(d, lambda, big_lambda, sign);
        }
        for &(y, q) in &self.far {
            let d = s.far(y) + s.far(-y) - 2.0 * c;
            acc += q * pucci_weight(d, lambda, big_lambda, sign);
        }
        acc
    }
}

/// Points `(y, q)` for `∫_Y^∞ φ(y) 2y^{−1−2σ} dy` after `y = Y w^{−1/(2σ)}`,
/// `w = z^m`; `m > 1` flattens data growing like `|y|^growth` near `z = 0`.
fn far_rule(sigma: f64, big_y: f64, growth: f64, gl: &GaussLegendre, panels: usize) -> Vec<(f64, f64)> {
    let m = 1.0 / (1.0 - growth / (2.0 * sigma)) + if growth > 0.0 { 1.0 } else { 0.0 };
    let scale = 2.0 * big_y.powf(-2.0 * sigma) / (2.0 * sigma);
    let mut far = Vec::new();
    for pnl in 0..panels {
        let (a, b) = (pnl as f64 / panels as f64, (pnl + 1) as f64 / panels as f64);
        for (z, w) in gl.mapped(a, b) {
            let y = big_y * z.powf(-m / (2.0 * sigma));
            far.push((y, scale * m * z.powf(m - 1.0) * w));
        }
    }
    far
}

/// `M_σ^± f(x)` for an analytic profile: the explicit integrand is
/// integrated adaptively on `[y₀, reach]` (geometric panels, `y₀ = 10^{−3}`),
/// the window below `y₀` uses the quadratic model, and beyond `reach` the
/// values `f(x ± y)` are replaced by the exterior model `beyond`.
#[allow(clippy::too_many_arguments)]
pub fn pucci_space_fn(
    f: &dyn Fn(f64) -> f64,
    x: f64,
    sigma: f64,
    lambda: f64,
    big_lambda: f64,
    sign: Sign,
    reach: f64,
    beyond: SpatialTail,
    spec: &QuadratureSpec,
) -> Result<f64> {
    const Y0: f64 = 1e-3;
    if !(sigma > 0.0 && sigma < 1.0) || !(reach > 2.0 * Y0) {
        return invalid(format!("bad profile evaluation: σ = {sigma}, reach = {reach}"));
    }
    let growth = beyond.growth_exponent();
    if growth >= 2.0 * sigma {
        return Err(Error::Precondition(format!("exterior growth {growth} must be below 2σ = {}", 2.0 * sigma)));
    }
    let fx = f(x);
    let delta = |y: f64| f(x + y) + f(x - y) - 2.0 * fx;
    let g = |d: f64| pucci_weight(d, lambda, big_lambda, sign);
    let mut total = g(delta(Y0)) * 2.0 * Y0.powf(-2.0 * sigma) / (2.0 - 2.0 * sigma);
    let opts = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: spec.max_intervals.max(50_000), oscillation_bound: None };
    let mut a = Y0;
    while a < reach {
        let b = (2.0 * a).min(reach);
        total += adaptive(|y| g(delta(y)) * 2.0 * y.powf(-1.0 - 2.0 * sigma), a, b, opts)?.value;
        a = b;
    }
    let bounds = (f(x - reach), f(x + reach));
    let gl = GaussLegendre::new(spec.gauss_points);
    for (y, q) in far_rule(sigma, reach, growth, &gl, spec.far_field_panels) {
        total += q * g(beyond.eval(x + y, bounds) + beyond.eval(x - y, bounds) - 2.0 * fx);
    }
    Ok(total)
}

/// `δ(u, x, y) = u(x+y) + u(x−y) − 2u(x)` at spatial node `i`, time node `j`.
pub fn second_difference(u: &SpaceTimeGridFunction, i: usize, y: f64, j: usize) -> Result<f64> {
    if i >= u.nx() || j >= u.nt() {
        return invalid(format!("node ({i}, {j}) outside the grid"));
    }
    let x = u.x(i);
    Ok(u.value_at(x + y, j) + u.value_at(x - y, j) - 2.0 * u.value(i, j))
}

/// `M_σ^± u(x_i, t_j)`.
pub fn pucci_space(
    u: &SpaceTimeGridFunction,
    sigma: f64,
    lambda: f64,
    big_lambda: f64,
    sign: Sign,
    i: usize,
    j: usize,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if i >= u.nx() || j >= u.nt() {
        return invalid(format!("node ({i}, {j}) outside the grid"));
    }
    let st = SpaceStencil::for_grid(u, sigma, spec)?;
    Ok(st.apply_pucci(&GridSlice::new(u, i, j), lambda, big_lambda, sign))
}

/// Linear weights of member `(a, b)` at `(x, t)`.
pub fn member_weights(st: &SpaceStencil, fam: &SpaceKernelFamily, a: usize, b: usize, x: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
    let m: &SpaceModulation = &fam.member(a, b).modulation;
    if let SpaceModulation::Constant(c) = m {
        let (near, far) = (st.reference_near().to_vec(), st.reference_far());
        return (near.iter().map(|w| w * c).collect(), far.iter().map(|w| w * c).collect());
    }
    st.modulated(|y| fam.rho(a, b, x, y, t))
}

/// Isaacs operator `sup_a inf_b L_{ab} u(x_i, t_j)`.
pub fn isaacs_eval(u: &SpaceTimeGridFunction, fam: &SpaceKernelFamily, i: usize, j: usize, spec: &QuadratureSpec) -> Result<f64> {
    if i >= u.nx() || j >= u.nt() {
        return invalid(format!("node ({i}, {j}) outside the grid"));
    }
    let st = SpaceStencil::for_grid(u, fam.sigma(), spec)?;
    let slice = GridSlice::new(u, i, j);
    let (x, t) = (u.x(i), u.t(j));
    let mut best = f64::NEG_INFINITY;
    for a in 0..fam.outer_len() {
        let mut worst = f64::INFINITY;
        for b in 0..fam.inner_len() {
            let (near, far) = member_weights(&st, fam, a, b, x, t);
            worst = worst.min(st.apply_linear(&slice, &near, &far));
        }
        best = best.max(worst);
    }
    Ok(best)
}

/// `Γ`-free check used in tests: exact reference weight of a hat at lag `d ≥ 2`
/// for the Caputo kernel (closed form of the classical L1 scheme).
pub fn caputo_hat_weight(alpha: f64, step: f64, d: usize) -> f64 {
    let b = |k: f64| (k + 1.0).powf(1.0 - alpha) - k.powf(1.0 - alpha);
    let d = d as f64;
    step.powf(-alpha) / gamma(2.0 - alpha) * (b(d - 1.0) - b(d))
}
