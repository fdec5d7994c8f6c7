//! Shared fixtures for the criterion benches.

use fracreg::ode::OdeProblem;
use fracreg::parabolic::ParabolicProblem;
use fracreg::{SpaceKernelFamily, TimeKernel, TimeModulation};
use std::sync::Arc;

/// `D v = 1 + sin 3t` on (−2, 0] with `n` nodes and a modulated kernel.
pub fn ode_problem(n: usize) -> OdeProblem {
    let k = TimeKernel::modulated(0.6, 1.0, 2.0, TimeModulation::CosLag { a: 1.5, b: 0.3, freq: 2.0 }).unwrap();
    OdeProblem::new(k, Arc::new(|t: f64| 1.0 + (3.0 * t).sin()), -2.0, 0.0, 2.0 / (n - 1) as f64)
}

/// Fractional heat equation with a smooth source on `nx` × `nt` nodes.
pub fn parabolic_problem(nx: usize, nt: usize) -> ParabolicProblem {
    let k = TimeKernel::caputo(0.5).unwrap();
    let lap = SpaceKernelFamily::fractional_laplacian(0.5).unwrap();
    ParabolicProblem::new(k, lap, Arc::new(|x, t| (2.0 * x).cos() * (1.0 + 0.5 * t.sin())), 1.0, nx, -1.0, 0.0, 1.0 / (nt - 1) as f64)
}
