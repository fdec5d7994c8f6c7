//! Grid functions on uniform time and space–time grids, together with the
//! data they carry outside the grid (temporal history, spatial tails).

use crate::error::{invalid, precondition, Error, Result};
use std::io::Write;
use std::path::Path;

/// Relative tolerance (in units of the step) for recognising grid nodes.
const NODE_SNAP: f64 = 1e-9;

/// Values of a function for `t < t_start`.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryKind {
    Zero,
    Constant(f64),
    /// Piecewise-linear through `(times, values)`; `before` holds for
    /// `t < times[0]`, the last value continues up to `t_start`.
    Sampled { times: Vec<f64>, values: Vec<f64>, before: f64 },
    /// `max(scale·|rate·t|^exponent − offset, 0)`: a polynomial growth envelope.
    Power { scale: f64, rate: f64, exponent: f64, offset: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistorySpec {
    kind: HistoryKind,
}

impl HistorySpec {
    pub fn zero() -> Self {
        Self { kind: HistoryKind::Zero }
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return invalid(format!("history constant {c} is not finite"));
        }
        Ok(Self { kind: HistoryKind::Constant(c) })
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>, before: f64) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return invalid("sampled history needs equally many (≥1) times and values");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("sampled history times must be strictly increasing");
        }
        if values.iter().chain(std::iter::once(&before)).any(|v| !v.is_finite()) {
            return precondition("sampled history must be bounded (all values finite)");
        }
        Ok(Self { kind: HistoryKind::Sampled { times, values, before } })
    }

    /// Growth envelope `max(scale·|rate·t|^exponent − offset, 0)`.
    pub fn power(scale: f64, rate: f64, exponent: f64, offset: f64) -> Result<Self> {
        if !(scale.is_finite() && rate.is_finite() && offset.is_finite()) || !(exponent > 0.0 && exponent.is_finite()) {
            return invalid("power history needs finite parameters and a positive exponent");
        }
        Ok(Self { kind: HistoryKind::Power { scale, rate, exponent, offset } })
    }

    pub fn kind(&self) -> &HistoryKind {
        &self.kind
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            HistoryKind::Zero => 0.0,
            HistoryKind::Constant(c) => *c,
            HistoryKind::Sampled { times, values, before } => {
                if t < times[0] {
                    return *before;
                }
                let k = times.partition_point(|&s| s <= t);
                if k >= times.len() {
                    return values[values.len() - 1];
                }
                let (t0, t1) = (times[k - 1], times[k]);
                let w = (t - t0) / (t1 - t0);
                values[k - 1] + w * (values[k] - values[k - 1])
            }
            HistoryKind::Power { scale, rate, exponent, offset } => (scale * (rate * t).abs().powf(*exponent) - offset).max(0.0),
        }
    }

    /// Finite bound on `|φ|`, or `None` for growth envelopes.
    pub fn sup_bound(&self) -> Option<f64> {
        match &self.kind {
            HistoryKind::Zero => Some(0.0),
            HistoryKind::Constant(c) => Some(c.abs()),
            HistoryKind::Sampled { values, before, .. } => Some(values.iter().fold(before.abs(), |m, v| m.max(v.abs()))),
            HistoryKind::Power { scale, rate, .. } if *scale == 0.0 || *rate == 0.0 => Some(self.eval(0.0).abs()),
            HistoryKind::Power { .. } => None,
        }
    }

    /// Lower bound on `φ` (−∞ if unknown).
    pub fn inf_bound(&self) -> f64 {
        match &self.kind {
            HistoryKind::Zero => 0.0,
            HistoryKind::Constant(c) => *c,
            HistoryKind::Sampled { values, before, .. } => values.iter().fold(*before, |m, v| m.min(*v)),
            HistoryKind::Power { .. } => 0.0,
        }
    }

    /// Growth exponent of `|φ(t)|` as `t → −∞` (zero when bounded).
    pub fn growth_exponent(&self) -> f64 {
        match &self.kind {
            HistoryKind::Power { exponent, .. } if self.sup_bound().is_none() => *exponent,
            _ => 0.0,
        }
    }

    /// `φ` is smooth on `(−∞, smooth_before)` (`+∞` for constant histories).
    pub fn smooth_before(&self) -> f64 {
        match &self.kind {
            HistoryKind::Zero | HistoryKind::Constant(_) => f64::INFINITY,
            HistoryKind::Sampled { times, .. } => times[0],
            HistoryKind::Power { scale, rate, .. } if *scale == 0.0 || *rate == 0.0 => f64::INFINITY,
            HistoryKind::Power { scale, rate, exponent, offset } => {
                // Kinks at t = 0 and where the envelope leaves zero.
                let q = offset / scale;
                if q > 0.0 {
                    -q.powf(1.0 / exponent) / rate.abs()
                } else {
                    0.0
                }
            }
        }
    }

    /// History of `t ↦ φ(τ t)`.
    pub fn time_rescaled(&self, tau: f64) -> Self {
        let kind = match &self.kind {
            HistoryKind::Sampled { times, values, before } => HistoryKind::Sampled {
                times: times.iter().map(|t| t / tau).collect(),
                values: values.clone(),
                before: *before,
            },
            HistoryKind::Power { scale, rate, exponent, offset } => HistoryKind::Power {
                scale: *scale,
                rate: rate * tau,
                exponent: *exponent,
                offset: *offset,
            },
            k => k.clone(),
        };
        Self { kind }
    }
}

/// Samples on the uniform grid `t_j = t_start + j·step`, `j = 0..n`, plus the
/// history for `t < t_start`.
#[derive(Debug, Clone)]
pub struct TimeGridFunction {
    t_start: f64,
    step: f64,
    values: Vec<f64>,
    history: HistorySpec,
}

/// Number of nodes of the uniform grid from `t_start` to `t_end`.
pub fn node_count(t_start: f64, t_end: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() || !t_start.is_finite() || !t_end.is_finite() {
        return invalid(format!("bad time grid: start {t_start}, end {t_end}, step {step}"));
    }
    if t_end <= t_start {
        return invalid(format!("time grid end {t_end} must exceed start {t_start}"));
    }
    let cells = (t_end - t_start) / step;
    let n = cells.round();
    if (cells - n).abs() > 1e-6 {
        return invalid(format!("step {step} does not divide [{t_start}, {t_end}]"));
    }
    Ok(n as usize + 1)
}

impl TimeGridFunction {
    pub fn new(t_start: f64, step: f64, values: Vec<f64>, history: HistorySpec) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !t_start.is_finite() {
            return invalid(format!("bad time grid: start {t_start}, step {step}"));
        }
        if values.is_empty() {
            return invalid("time grid function needs at least one node");
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at time node {j}"));
        }
        Ok(Self { t_start, step, values, history })
    }

    pub fn from_fn(t_start: f64, t_end: f64, step: f64, history: HistorySpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = node_count(t_start, t_end, step)?;
        let values = (0..n).map(|j| f(t_start + j as f64 * step)).collect();
        Self::new(t_start, step, values, history)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }
    pub fn time(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.step
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn history(&self) -> &HistorySpec {
        &self.history
    }
    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Index of the node nearest to `t` (nodes within `step/2`), if `t` is in range.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t_start) / self.step;
        let j = x.round();
        if j < 0.0 || j as usize >= self.len() || (x - j).abs() > 0.5 + NODE_SNAP {
            return None;
        }
        Some(j as usize)
    }

    /// Value at any `t ≤ t_end`: history before the grid, linear
    /// interpolation on it (exact at nodes).
    pub fn eval_with_history(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return invalid("evaluation time is not finite");
        }
        let x = (t - self.t_start) / self.step;
        let last = (self.len() - 1) as f64;
        if x > last + NODE_SNAP {
            return invalid(format!("time {t} beyond grid end {}", self.t_end()));
        }
        if x < -NODE_SNAP {
            return Ok(self.history.eval(t));
        }
        let j = x.round();
        if (x - j).abs() <= NODE_SNAP {
            return Ok(self.values[j.max(0.0).min(last) as usize]);
        }
        let j0 = x.floor() as usize;
        let w = x - j0 as f64;
        Ok((1.0 - w) * self.values[j0] + w * self.values[j0 + 1])
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "t,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", fmt17(self.time(j)), fmt17(*v))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// 17 significant digits: enough to round-trip an `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Values of a space–time function for `|x| > X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialTail {
    Constant(f64),
    /// `2|rate·x|^exponent − 1`.
    Growth { rate: f64, exponent: f64 },
    /// Constant continuation of the nearest boundary value.
    Extension,
}

impl SpatialTail {
    /// Tail value at `x` when the boundary values at time `t` are `(left, right)`.
    pub fn eval(&self, x: f64, boundary: (f64, f64)) -> f64 {
        match *self {
            SpatialTail::Constant(c) => c,
            SpatialTail::Growth { rate, exponent } => 2.0 * (rate * x).abs().powf(exponent) - 1.0,
            SpatialTail::Extension => {
                if x < 0.0 {
                    boundary.0
                } else {
                    boundary.1
                }
            }
        }
    }

    pub fn growth_exponent(&self) -> f64 {
        match *self {
            SpatialTail::Growth { exponent, .. } => exponent,
            _ => 0.0,
        }
    }

    pub fn rescaled(&self, r: f64) -> Self {
        match *self {
            SpatialTail::Growth { rate, exponent } => SpatialTail::Growth { rate: rate * r, exponent },
            t => t,
        }
    }
}

/// Samples on `x_i = −X + i·h` (i = 0..nx, h = 2X/(nx−1)) × the uniform time
/// grid; stored row-major in time (`values[j·nx + i]`).
#[derive(Debug, Clone)]
pub struct SpaceTimeGridFunction {
    x_half_width: f64,
    nx: usize,
    t_start: f64,
    step: f64,
    nt: usize,
    values: Vec<f64>,
    tail: SpatialTail,
    history: HistorySpec,
}

impl SpaceTimeGridFunction {
    pub fn new(
        x_half_width: f64,
        nx: usize,
        t_start: f64,
        step: f64,
        values: Vec<f64>,
        tail: SpatialTail,
        history: HistorySpec,
    ) -> Result<Self> {
        if !(x_half_width > 0.0) || !x_half_width.is_finite() || nx < 3 {
            return invalid(format!("bad spatial grid: X = {x_half_width}, nx = {nx}"));
        }
        if !(step > 0.0) || !step.is_finite() || !t_start.is_finite() {
            return invalid(format!("bad time grid: start {t_start}, step {step}"));
        }
        if values.is_empty() || values.len() % nx != 0 {
            return invalid(format!("{} values do not fill rows of {nx} spatial nodes", values.len()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at node ({}, {})", k % nx, k / nx));
        }
        if let SpatialTail::Growth { rate, exponent } = tail {
            if !(rate.is_finite() && exponent > 0.0 && exponent.is_finite()) {
                return invalid("growth tail needs finite rate and positive exponent");
            }
        }
        let nt = values.len() / nx;
        let me = Self { x_half_width, nx, t_start, step, nt, values, tail, history };
        me.check_tail_domination()?;
        Ok(me)
    }

    pub fn from_fn(
        x_half_width: f64,
        nx: usize,
        t_start: f64,
        t_end: f64,
        step: f64,
        tail: SpatialTail,
        history: HistorySpec,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let nt = node_count(t_start, t_end, step)?;
        let h = 2.0 * x_half_width / (nx as f64 - 1.0);
        let mut values = Vec::with_capacity(nt * nx);
        for j in 0..nt {
            let t = t_start + j as f64 * step;
            for i in 0..nx {
                values.push(f(-x_half_width + i as f64 * h, t));
            }
        }
        Self::new(x_half_width, nx, t_start, step, values, tail, history)
    }

    /// For growth tails the tail must dominate `|u|` on the boundary nodes.
    fn check_tail_domination(&self) -> Result<()> {
        if let SpatialTail::Growth { .. } = self.tail {
            for j in 0..self.nt {
                for i in [0, self.nx - 1] {
                    let x = self.x(i);
                    let bound = self.tail.eval(x, (0.0, 0.0));
                    let v = self.value(i, j);
                    if v.abs() > bound.abs().max(1.0) * (1.0 + 1e-12) + 1e-12 {
                        return precondition(format!(
                            "growth tail {bound} does not dominate |u| = {} at boundary node ({x}, {})",
                            v.abs(),
                            self.t(j)
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn x_half_width(&self) -> f64 {
        self.x_half_width
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn h(&self) -> f64 {
        2.0 * self.x_half_width / (self.nx as f64 - 1.0)
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            return self.x_half_width;
        }
        -self.x_half_width + i as f64 * self.h()
    }
    pub fn t(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.step
    }
    pub fn tail(&self) -> SpatialTail {
        self.tail
    }
    pub fn history(&self) -> &HistorySpec {
        &self.history
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }
    pub fn slice(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    /// Index of the spatial node at `x`, if `x` is (numerically) a node.
    pub fn x_index(&self, x: f64) -> Option<usize> {
        let s = (x + self.x_half_width) / self.h();
        let i = s.round();
        if i < 0.0 || i as usize >= self.nx || (s - i).abs() > NODE_SNAP {
            return None;
        }
        Some(i as usize)
    }

    /// Index of the time node at `t`, if `t` is (numerically) a node.
    pub fn t_index(&self, t: f64) -> Option<usize> {
        let s = (t - self.t_start) / self.step;
        let j = s.round();
        if j < 0.0 || j as usize >= self.nt || (s - j).abs() > NODE_SNAP {
            return None;
        }
        Some(j as usize)
    }

    /// `u(x, t_j)` for any real `x`: tail outside `[−X, X]`, linear
    /// interpolation inside.
    pub fn value_at(&self, x: f64, j: usize) -> f64 {
        let row = self.slice(j);
        let h = self.h();
        let s = (x + self.x_half_width) / h;
        let last = (self.nx - 1) as f64;
        if s < -NODE_SNAP || s > last + NODE_SNAP {
            return self.tail.eval(x, (row[0], row[self.nx - 1]));
        }
        let i = s.round();
        if (s - i).abs() <= NODE_SNAP {
            return row[i as usize];
        }
        let i0 = s.floor() as usize;
        let w = s - i0 as f64;
        (1.0 - w) * row[i0] + w * row[i0 + 1]
    }

    /// The time series at spatial node `i`, with this function's history.
    pub fn column(&self, i: usize) -> TimeGridFunction {
        let values = (0..self.nt).map(|j| self.value(i, j)).collect();
        TimeGridFunction { t_start: self.t_start, step: self.step, values, history: self.history.clone() }
    }

    /// Same grids and exterior data, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.x_half_width, self.nx, self.t_start, self.step, values, self.tail, self.history.clone())
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "x,t,value")?;
        for j in 0..self.nt {
            for i in 0..self.nx {
                writeln!(w, "{},{},{}", fmt17(self.x(i)), fmt17(self.t(j)), fmt17(self.value(i, j)))?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Parabolic cylinder `[x0 − r, x0 + r] × (t0 − r^{2σ/α}, t0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub x0: f64,
    pub t0: f64,
    pub radius: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl Cylinder {
    pub fn new(x0: f64, t0: f64, radius: f64, sigma: f64, alpha: f64) -> Result<Self> {
        if !(radius > 0.0) || !(sigma > 0.0 && sigma < 1.0) || !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("bad cylinder: r = {radius}, σ = {sigma}, α = {alpha}"));
        }
        Ok(Self { x0, t0, radius, sigma, alpha })
    }

    pub fn depth(&self) -> f64 {
        self.radius.powf(2.0 * self.sigma / self.alpha)
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.radius);
        (x - self.x0).abs() <= self.radius + slack && t <= self.t0 + slack && t > self.t0 - self.depth() + slack
    }
}

/// `sup − inf` of `u` over the grid nodes inside `q`.
pub fn oscillation(u: &SpaceTimeGridFunction, q: &Cylinder) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..u.nt() {
        let t = u.t(j);
        if t > q.t0 + 1e-12 || t < q.t0 - q.depth() - 1e-12 {
            continue;
        }
        for i in 0..u.nx() {
            if q.contains(u.x(i), t) {
                let v = u.value(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if lo > hi {
        return Err(Error::Invalid(format!(
            "cylinder around ({}, {}) with radius {} contains no grid node",
            q.x0, q.t0, q.radius
        )));
    }
    Ok(hi - lo)
}
