//! Time kernels `K(t,s) = ρ(t,s)·α/Γ(1−α)·(t−s)^{−1−α}` and families of
//! spatial kernels `K(x,y,t) = ρ(x,|y|,t)·|y|^{−1−2σ}`.

use crate::error::{invalid, Error, Result};
use crate::special::caputo_prefactor;
use std::fmt;
use std::sync::Arc;

/// Sandwich tolerance: `λ(1−tol) ≤ ρ ≤ Λ(1+tol)`.
const SANDWICH_TOL: f64 = 1e-12;

pub type TimeModulationFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceModulationFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// The modulation `ρ(t, s)` of a time kernel.
#[derive(Clone)]
pub enum TimeModulation {
    Constant(f64),
    /// `a + b·cos(freq·(t+s))`.
    CosSum { a: f64, b: f64, freq: f64 },
    /// `a + b·cos(freq·(t−s))`.
    CosLag { a: f64, b: f64, freq: f64 },
    /// `near` for `t − s < split`, `far` otherwise.
    Piecewise { near: f64, far: f64, split: f64 },
    Custom { f: TimeModulationFn, lag_only: bool },
    /// `ρ(τt, τs)`.
    Rescaled { inner: Box<TimeModulation>, tau: f64 },
}

impl fmt::Debug for TimeModulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::CosSum { a, b, freq } => write!(f, "CosSum {{ a: {a}, b: {b}, freq: {freq} }}"),
            Self::CosLag { a, b, freq } => write!(f, "CosLag {{ a: {a}, b: {b}, freq: {freq} }}"),
            Self::Piecewise { near, far, split } => write!(f, "Piecewise {{ near: {near}, far: {far}, split: {split} }}"),
            Self::Custom { lag_only, .. } => write!(f, "Custom {{ lag_only: {lag_only} }}"),
            Self::Rescaled { inner, tau } => write!(f, "Rescaled {{ inner: {inner:?}, tau: {tau} }}"),
        }
    }
}

impl TimeModulation {
    pub fn value(&self, t: f64, s: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::CosSum { a, b, freq } => a + b * (freq * (t + s)).cos(),
            Self::CosLag { a, b, freq } => a + b * (freq * (t - s)).cos(),
            Self::Piecewise { near, far, split } => {
                if t - s < *split {
                    *near
                } else {
                    *far
                }
            }
            Self::Custom { f, .. } => f(t, s),
            Self::Rescaled { inner, tau } => inner.value(tau * t, tau * s),
        }
    }

    /// Depends on `t − s` only (translation invariant).
    pub fn is_lag_only(&self) -> bool {
        match self {
            Self::Constant(_) | Self::CosLag { .. } | Self::Piecewise { .. } => true,
            Self::CosSum { b, freq, .. } => *b == 0.0 || *freq == 0.0,
            Self::Custom { lag_only, .. } => *lag_only,
            Self::Rescaled { inner, .. } => inner.is_lag_only(),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            Self::Rescaled { inner, .. } => inner.as_constant(),
            _ => None,
        }
    }
}

/// `ρ(t, t − x) = mean + amp·cos(omega·x − phase)` for fixed `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub mean: f64,
    pub amp: f64,
    pub omega: f64,
    pub phase: f64,
}

impl TimeModulation {
    /// Harmonic structure in the lag at fixed `t`, for the oscillating
    /// built-ins; `None` otherwise.
    pub fn harmonic(&self, t: f64) -> Option<Harmonic> {
        let h = match self {
            // cos(ω(t + t − x)) = cos(ωx − 2ωt).
            Self::CosSum { a, b, freq } => Harmonic { mean: *a, amp: *b, omega: freq.abs(), phase: 2.0 * freq.abs() * t },
            Self::CosLag { a, b, freq } => Harmonic { mean: *a, amp: *b, omega: freq.abs(), phase: 0.0 },
            Self::Rescaled { inner, tau } => {
                let h = inner.harmonic(tau * t)?;
                Harmonic { omega: h.omega * tau, ..h }
            }
            _ => return None,
        };
        (h.amp != 0.0 && h.omega > 0.0).then_some(h)
    }
}

/// Lattice on which modulations are validated: `t ∈ [−4, 4]` (100 points)
/// and lags `s ∈ [10⁻³, 8]` (100 geometric points).
pub fn validation_lattice() -> (Vec<f64>, Vec<f64>) {
    let ts = (0..100).map(|i| -4.0 + 8.0 * i as f64 / 99.0).collect();
    let lags = (0..100).map(|i| 1e-3 * (8e3f64).powf(i as f64 / 99.0)).collect();
    (ts, lags)
}

#[derive(Debug, Clone)]
pub struct TimeKernel {
    alpha: f64,
    lambda: f64,
    big_lambda: f64,
    modulation: TimeModulation,
    symmetric: bool,
    prefactor: f64,
}

impl TimeKernel {
    /// `α/Γ(1−α)·(t−s)^{−1−α}`.
    pub fn caputo(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            lambda: 1.0,
            big_lambda: 1.0,
            modulation: TimeModulation::Constant(1.0),
            symmetric: true,
            prefactor: caputo_prefactor(alpha),
        })
    }

    /// Modulated kernel; `ρ` is validated against `[λ, Λ]` on the lattice and
    /// the symmetry `K(t, t−s) = K(t+s, t)` is recorded.
    pub fn modulated(alpha: f64, lambda: f64, big_lambda: f64, rho: TimeModulation) -> Result<Self> {
        let k = Self::modulated_unchecked(alpha, lambda, big_lambda, rho)?;
        let (ts, lags) = validation_lattice();
        for &t in &ts {
            for &s in &lags {
                let v = k.modulation.value(t, t - s);
                if !in_band(v, lambda, big_lambda) {
                    return Err(Error::Sandwich { location: format!("(t, s) = ({t}, {})", t - s), value: v, lower: lambda, upper: big_lambda });
                }
            }
        }
        Ok(k)
    }

    /// As [`TimeKernel::modulated`] but without sampling `ρ`; intended for
    /// building deliberately ill-posed kernels to exercise the validators.
    pub fn modulated_unchecked(alpha: f64, lambda: f64, big_lambda: f64, rho: TimeModulation) -> Result<Self> {
        check_alpha(alpha)?;
        if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
            return invalid(format!("ellipticity constants need 0 < λ ≤ Λ < ∞, got λ = {lambda}, Λ = {big_lambda}"));
        }
        let symmetric = symmetry_on_lattice(&rho);
        Ok(Self { alpha, lambda, big_lambda, modulation: rho, symmetric, prefactor: caputo_prefactor(alpha) })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }
    pub fn modulation(&self) -> &TimeModulation {
        &self.modulation
    }
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    pub fn is_translation_invariant(&self) -> bool {
        self.modulation.is_lag_only()
    }
    /// `α/Γ(1−α)`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn rho(&self, t: f64, s: f64) -> f64 {
        let v = self.modulation.value(t, s);
        debug_assert!(
            in_band(v, self.lambda, self.big_lambda),
            "kernel modulation {v} outside [{}, {}] at ({t}, {s})",
            self.lambda,
            self.big_lambda
        );
        v
    }

    /// `K(t, s)` for `s < t`.
    pub fn density(&self, t: f64, s: f64) -> f64 {
        self.rho(t, s) * self.prefactor * (t - s).powf(-1.0 - self.alpha)
    }

    /// The Caputo kernel with the same order.
    pub fn reference(&self) -> Self {
        Self::caputo(self.alpha).expect("alpha already validated")
    }

    /// `K̃(t, s) = τ^{1+α} K(τt, τs)`: the kernel seen by `v(t) = u(τt)`.
    pub fn time_rescaled(&self, tau: f64) -> Self {
        let modulation = match &self.modulation {
            TimeModulation::Constant(c) => TimeModulation::Constant(*c),
            m => TimeModulation::Rescaled { inner: Box::new(m.clone()), tau },
        };
        Self { modulation, ..self.clone() }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("time order α = {alpha} must lie in (0, 1)"));
    }
    Ok(())
}

fn in_band(v: f64, lo: f64, hi: f64) -> bool {
    v.is_finite() && v >= lo * (1.0 - SANDWICH_TOL) && v <= hi * (1.0 + SANDWICH_TOL)
}

/// `|ρ(t, t−s) − ρ(t+s, t)| ≤ 10⁻¹² ρ(t, t−s)` on the validation lattice.
pub fn symmetry_on_lattice(rho: &TimeModulation) -> bool {
    let (ts, lags) = validation_lattice();
    ts.iter().all(|&t| {
        lags.iter().all(|&s| {
            let a = rho.value(t, t - s);
            let b = rho.value(t + s, t);
            (a - b).abs() <= 1e-12 * a.abs()
        })
    })
}

/// Modulation `ρ(x, |y|, t)` of a spatial kernel.
#[derive(Clone)]
pub enum SpaceModulation {
    Constant(f64),
    /// `near` for `|y| < split`, `far` otherwise.
    Piecewise { near: f64, far: f64, split: f64 },
    /// `a + b·cos(freq·x)`.
    CosX { a: f64, b: f64, freq: f64 },
    Custom(SpaceModulationFn),
    /// `ρ(r x, r y, τ t)`.
    Rescaled { inner: Box<SpaceModulation>, r: f64, tau: f64 },
}

impl fmt::Debug for SpaceModulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Piecewise { near, far, split } => write!(f, "Piecewise {{ near: {near}, far: {far}, split: {split} }}"),
            Self::CosX { a, b, freq } => write!(f, "CosX {{ a: {a}, b: {b}, freq: {freq} }}"),
            Self::Custom(_) => write!(f, "Custom"),
            Self::Rescaled { inner, r, tau } => write!(f, "Rescaled {{ inner: {inner:?}, r: {r}, tau: {tau} }}"),
        }
    }
}

impl SpaceModulation {
    pub fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        let y = y.abs();
        match self {
            Self::Constant(c) => *c,
            Self::Piecewise { near, far, split } => {
                if y < *split {
                    *near
                } else {
                    *far
                }
            }
            Self::CosX { a, b, freq } => a + b * (freq * x).cos(),
            Self::Custom(f) => f(x, y, t),
            Self::Rescaled { inner, r, tau } => inner.value(r * x, r * y, tau * t),
        }
    }

    /// Independent of `x` and `t` (the stencil can be shared by all nodes).
    pub fn is_homogeneous(&self) -> bool {
        match self {
            Self::Constant(_) | Self::Piecewise { .. } => true,
            Self::CosX { b, freq, .. } => *b == 0.0 || *freq == 0.0,
            Self::Custom(_) => false,
            Self::Rescaled { inner, .. } => inner.is_homogeneous(),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        !matches!(self, Self::Custom(_)) && !matches!(self, Self::Rescaled { inner, .. } if !inner.is_time_independent())
    }
}

#[derive(Debug, Clone)]
pub struct SpaceKernel {
    pub modulation: SpaceModulation,
}

impl SpaceKernel {
    pub fn new(modulation: SpaceModulation) -> Self {
        Self { modulation }
    }
}

/// Indexed family `{K_ij}` sharing the order `σ` and the band `[λ, Λ]`.
#[derive(Debug, Clone)]
pub struct SpaceKernelFamily {
    sigma: f64,
    lambda: f64,
    big_lambda: f64,
    members: Vec<Vec<SpaceKernel>>,
}

/// Default cap on each index set of a kernel family.
pub const MAX_FAMILY_INDEX: usize = 8;

impl SpaceKernelFamily {
    pub fn new(sigma: f64, lambda: f64, big_lambda: f64, members: Vec<Vec<SpaceKernel>>) -> Result<Self> {
        Self::with_max_index(sigma, lambda, big_lambda, members, MAX_FAMILY_INDEX)
    }

    pub fn with_max_index(
        sigma: f64,
        lambda: f64,
        big_lambda: f64,
        members: Vec<Vec<SpaceKernel>>,
        max_index: usize,
    ) -> Result<Self> {
        let fam = Self::unchecked(sigma, lambda, big_lambda, members, max_index)?;
        let xs: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
        let ys: Vec<f64> = (0..41).map(|i| 1e-3 * (1e4f64).powf(i as f64 / 40.0)).collect();
        for (a, row) in fam.members.iter().enumerate() {
            for (b, k) in row.iter().enumerate() {
                for &x in &xs {
                    for &y in &ys {
                        for t in [-2.0, -1.0, 0.0] {
                            let v = k.modulation.value(x, y, t);
                            if !in_band(v, lambda, big_lambda) {
                                return Err(Error::Sandwich {
                                    location: format!("member ({a}, {b}) at (x, y, t) = ({x}, {y}, {t})"),
                                    value: v,
                                    lower: lambda,
                                    upper: big_lambda,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(fam)
    }

    /// Skips the band check; for exercising the validators.
    pub fn unchecked(sigma: f64, lambda: f64, big_lambda: f64, members: Vec<Vec<SpaceKernel>>, max_index: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return invalid(format!("space order σ = {sigma} must lie in (0, 1)"));
        }
        if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
            return invalid(format!("ellipticity constants need 0 < λ ≤ Λ < ∞, got λ = {lambda}, Λ = {big_lambda}"));
        }
        if members.is_empty() || members[0].is_empty() || members.iter().any(|r| r.len() != members[0].len()) {
            return invalid("kernel family must be a non-empty rectangular array");
        }
        if members.len() > max_index || members[0].len() > max_index {
            return invalid(format!(
                "kernel family of size {}×{} exceeds the index cap {max_index}",
                members.len(),
                members[0].len()
            ));
        }
        Ok(Self { sigma, lambda, big_lambda, members })
    }

    /// A single kernel.
    pub fn singleton(sigma: f64, lambda: f64, big_lambda: f64, kernel: SpaceKernel) -> Result<Self> {
        Self::new(sigma, lambda, big_lambda, vec![vec![kernel]])
    }

    /// The unnormalised fractional Laplacian `|y|^{−1−2σ}` with `λ = Λ = 1`.
    pub fn fractional_laplacian(sigma: f64) -> Result<Self> {
        Self::singleton(sigma, 1.0, 1.0, SpaceKernel::new(SpaceModulation::Constant(1.0)))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }
    pub fn outer_len(&self) -> usize {
        self.members.len()
    }
    pub fn inner_len(&self) -> usize {
        self.members[0].len()
    }
    pub fn member(&self, a: usize, b: usize) -> &SpaceKernel {
        &self.members[a][b]
    }
    pub fn members(&self) -> &[Vec<SpaceKernel>] {
        &self.members
    }

    pub fn rho(&self, a: usize, b: usize, x: f64, y: f64, t: f64) -> f64 {
        let v = self.members[a][b].modulation.value(x, y, t);
        debug_assert!(
            in_band(v, self.lambda, self.big_lambda),
            "space modulation {v} outside [{}, {}]",
            self.lambda,
            self.big_lambda
        );
        v
    }

    pub fn density(&self, a: usize, b: usize, x: f64, y: f64, t: f64) -> f64 {
        self.rho(a, b, x, y, t) * y.abs().powf(-1.0 - 2.0 * self.sigma)
    }

    pub fn is_time_independent(&self) -> bool {
        self.members.iter().flatten().all(|k| k.modulation.is_time_independent())
    }

    /// Family seen by `v(x, t) = u(r x, τ t)`.
    pub fn rescaled(&self, r: f64, tau: f64) -> Self {
        let members = self
            .members
            .iter()
            .map(|row| {
                row.iter()
                    .map(|k| match &k.modulation {
                        SpaceModulation::Constant(c) => SpaceKernel::new(SpaceModulation::Constant(*c)),
                        m => SpaceKernel::new(SpaceModulation::Rescaled { inner: Box::new(m.clone()), r, tau }),
                    })
                    .collect()
            })
            .collect();
        Self { members, ..self.clone() }
    }
}

/// Worst-case ratios of a kernel against its reference envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    /// `min K/(λ·ref)` over the samples; `≥ 1` when the lower bound holds.
    pub worst_lower_ratio: f64,
    /// `min (Λ·ref)/K` over the samples; `≥ 1` when the upper bound holds.
    pub worst_upper_ratio: f64,
    /// Indices of samples that violate either bound.
    pub violations: Vec<usize>,
    pub pass: bool,
}

/// Kernels that can be compared against their reference density.
pub trait Sandwiched {
    type Sample;
    fn bounds(&self) -> (f64, f64);
    /// `K / ref` at each member of the kernel (one entry per member).
    fn modulation_at(&self, sample: &Self::Sample) -> Vec<f64>;
}

impl Sandwiched for TimeKernel {
    /// `(t, s)` with `s < t`.
    type Sample = (f64, f64);
    fn bounds(&self) -> (f64, f64) {
        (self.lambda, self.big_lambda)
    }
    fn modulation_at(&self, &(t, s): &(f64, f64)) -> Vec<f64> {
        vec![self.modulation.value(t, s)]
    }
}

impl Sandwiched for SpaceKernelFamily {
    /// `(x, y, t)`.
    type Sample = (f64, f64, f64);
    fn bounds(&self) -> (f64, f64) {
        (self.lambda, self.big_lambda)
    }
    fn modulation_at(&self, &(x, y, t): &(f64, f64, f64)) -> Vec<f64> {
        self.members.iter().flatten().map(|k| k.modulation.value(x, y, t)).collect()
    }
}

pub fn check_kernel_sandwich<K: Sandwiched>(kernel: &K, samples: &[K::Sample]) -> SandwichReport {
    let (lambda, big_lambda) = kernel.bounds();
    let mut worst_lower_ratio = f64::INFINITY;
    let mut worst_upper_ratio = f64::INFINITY;
    let mut violations = Vec::new();
    for (n, s) in samples.iter().enumerate() {
        let mut bad = false;
        for rho in kernel.modulation_at(s) {
            let lo = rho / lambda;
            let hi = big_lambda / rho;
            worst_lower_ratio = worst_lower_ratio.min(lo);
            worst_upper_ratio = worst_upper_ratio.min(hi);
            bad |= !(lo >= 1.0 - SANDWICH_TOL && hi >= 1.0 - SANDWICH_TOL);
        }
        if bad {
            violations.push(n);
        }
    }
    let pass = violations.is_empty();
    SandwichReport { worst_lower_ratio, worst_upper_ratio, violations, pass }
}
