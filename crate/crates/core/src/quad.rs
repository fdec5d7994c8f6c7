//! Quadrature rules: Gauss–Legendre, graded composites for endpoint
//! singularities and an adaptive Gauss–Kronrod (7/15) integrator.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule with panels shrinking geometrically (ratio 1/2) towards
    /// the chosen endpoints; tames algebraic endpoint singularities.
    pub fn graded<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, grading: Grading, levels: usize, mut f: F) -> f64 {
        match grading {
            Grading::None => self.integrate(a, b, f),
            Grading::Both => {
                let m = 0.5 * (a + b);
                self.one_sided(a, m, true, levels, &mut f) + self.one_sided(m, b, false, levels, &mut f)
            }
            Grading::Low => self.one_sided(a, b, true, levels, &mut f),
            Grading::High => self.one_sided(a, b, false, levels, &mut f),
        }
    }

    fn one_sided(&self, a: f64, b: f64, low: bool, levels: usize, f: &mut dyn FnMut(f64) -> f64) -> f64 {
        if levels == 0 {
            return self.integrate(a, b, &mut *f);
        }
        let mut total = 0.0;
        let mut width = b - a;
        for _ in 0..levels {
            let half = 0.5 * width;
            let (lo, hi) = if low { (a + half, a + width) } else { (b - width, b - half) };
            total += self.integrate(lo, hi, &mut *f);
            width = half;
        }
        let (lo, hi) = if low { (a, a + width) } else { (b - width, b) };
        total + self.integrate(lo, hi, &mut *f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    None,
    Low,
    High,
    Both,
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

// Kronrod 15-point extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// If set, a panel whose width times this bound on the integrand's
    /// oscillation is below its share of the tolerance is accepted as is.
    pub oscillation_bound: Option<f64>,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_intervals: 4000,
            oscillation_bound: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(PartialEq)]
struct Panel {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}

impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod integration on `[a, b]`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: AdaptiveOptions) -> Result<AdaptiveResult> {
    if a == b {
        return Ok(AdaptiveResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let width = (b - a).abs();
    let mut heap = BinaryHeap::new();
    let mut total = v;
    let mut err_total = panel_error(e, width, width, opts);
    heap.push(Panel { err: err_total, a, b, val: v });
    let mut intervals = 1;
    while err_total > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if intervals >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "adaptive quadrature on [{a}, {b}] stopped at {intervals} panels with error estimate {err_total:e}"
            )));
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        let e1 = panel_error(e1, (m - p.a).abs(), width, opts);
        let e2 = panel_error(e2, (p.b - m).abs(), width, opts);
        total += v1 + v2 - p.val;
        err_total += e1 + e2 - p.err;
        heap.push(Panel { err: e1, a: p.a, b: m, val: v1 });
        heap.push(Panel { err: e2, a: m, b: p.b, val: v2 });
        intervals += 1;
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value: f64 = heap.iter().map(|p| p.val).sum();
    let error: f64 = heap.iter().map(|p| p.err).sum();
    Ok(AdaptiveResult { value, error, intervals })
}

fn panel_error(estimate: f64, panel_width: f64, total_width: f64, opts: AdaptiveOptions) -> f64 {
    match opts.oscillation_bound {
        Some(bound) => {
            let cap = bound * panel_width;
            // A panel that cannot contribute more than its share is settled.
            if cap <= opts.abs_tol * panel_width / total_width {
                0.0
            } else {
                estimate.min(cap)
            }
        }
        None => estimate,
    }
}
