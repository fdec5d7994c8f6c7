//! Numerical toolkit for parabolic equations with a generalized Marchaud
//! (Caputo-type) time derivative and a nonlocal space operator of Isaacs type.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] – time and space–time grid functions with their data outside the grid,
//! * [`kernels`] – time kernels and families of spatial kernels,
//! * [`fracops`] – discrete time derivative, Pucci extremal operators, Isaacs operator,
//! * [`ode`] – the time-only problem, sup/inf convolutions, comparison and energy checks,
//! * [`parabolic`] – the space–time solver, rescaling and barrier functions,
//! * [`regularity`] – Hölder exponent fitting, α-sweeps and the measure/L^ε probes.

pub mod error;
pub mod fracops;
pub mod grid;
pub mod kernels;
pub mod ode;
pub mod parabolic;
pub mod quad;
pub mod regularity;
pub mod special;

pub use error::{Error, Result};
pub use fracops::{QuadratureSpec, Sign, StartBasis};
pub use grid::{Cylinder, HistoryKind, HistorySpec, SpaceTimeGridFunction, SpatialTail, TimeGridFunction};
pub use kernels::{SpaceKernel, SpaceKernelFamily, SpaceModulation, TimeKernel, TimeModulation};
