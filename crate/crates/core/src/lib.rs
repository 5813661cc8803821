//! Age- and telomere-length-structured model of a proliferating tumour cell
//! population.
//!
//! Cells carry an age `a ∈ [0, a_max]` and a telomere length `l ∈ [0, l_max]`.
//! They age at unit speed, die at rate `μ(a, l)`, and divide at rate
//! `β(a, l)` into two newborns whose lengths are drawn from the kernel
//! `r(l, l̂)`. An optional crowding law `F(P)` adds mortality depending on the
//! total population `P`.
//!
//! The crate is organised around that model:
//!
//! - [`model`]: grids, coefficient fields, division kernels, crowding laws,
//!   densities, scenarios (including the three reference examples and the JSON
//!   scenario document).
//! - [`spectral`]: the discretised renewal operator, its Perron root and
//!   eigenvector, the two-sided radius estimates, irreducibility, and the
//!   characteristic root `λ*`.
//! - [`solver`]: time stepping along characteristics with the nonlocal
//!   renewal boundary, traces, band populations, and the explicit
//!   linear-crowding oracle.
//! - [`steady`]: positive equilibria of the crowding model and their
//!   stability indicators.
//! - [`bounds`]: checks of the telomere-class decay bounds and the
//!   self-renewal lower bound against simulated traces.
//! - [`cli`] and [`output`]: the command-line front end and its artifacts.

pub mod bounds;
pub mod cli;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod steady;

pub use model::{
    CoefficientField, CrowdingLaw, DensityField, DivisionKernel, Grid, ModelError, Scenario,
};
pub use solver::{simulate, SimulationTrace, SolverError};
pub use spectral::{growth_rate, spectral_radius, SpectralError};
pub use steady::{find_equilibrium, SteadyStateReport};
