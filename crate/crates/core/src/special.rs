//! Gamma-function helpers and the constants attached to the reference kernel.

use statrs::function::gamma::gamma as statrs_gamma;

pub fn gamma(x: f64) -> f64 {
    statrs_gamma(x)
}

/// `α/Γ(1−α)`, the normalisation of `(t−s)^{−1−α}` in the Caputo kernel.
///
/// Written as `α(1−α)/Γ(2−α)` so that α → 1 stays well conditioned.
pub fn caputo_prefactor(alpha: f64) -> f64 {
    alpha * (1.0 - alpha) / gamma(2.0 - alpha)
}

/// `1/Γ(1−α) = (1−α)/Γ(2−α)`.
pub fn inv_gamma_one_minus(alpha: f64) -> f64 {
    (1.0 - alpha) / gamma(2.0 - alpha)
}

/// `c_α = 1/Γ(1+α)`; `c_α (t−a)_+^α` has unit Caputo derivative on `(a, ∞)`.
pub fn power_barrier_constant(alpha: f64) -> f64 {
    1.0 / gamma(1.0 + alpha)
}

/// `∫_0^∞ (1 − cos y) y^{−1−2σ} dy = π / (2 Γ(1+2σ) sin(πσ))`.
pub fn cos_fractional_integral(sigma: f64) -> f64 {
    std::f64::consts::PI / (2.0 * gamma(1.0 + 2.0 * sigma) * (std::f64::consts::PI * sigma).sin())
}
