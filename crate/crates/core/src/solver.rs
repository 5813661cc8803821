//! Time stepping along characteristics.
//!
//! With `dt = da` every age row moves up one node per step. Along the way
//! the density decays by `exp(−∫(β+μ) − F(P)dt)`, the hazard integrated by
//! the trapezoid rule over the step, and the oldest row leaves the domain.
//! The newborn row is the renewal integral of the updated density; its own
//! contribution (through `β` at age 0) is solved for exactly, so the
//! discrete characteristic equation of the stepper is the one whose root
//! [`crate::spectral::growth_rate`] computes. `P` in the crowding term is
//! taken at the start of each step.

use nalgebra::DMatrix;
use ndarray::Array2;
use thiserror::Error;

use crate::model::{Band, CoefficientField, CrowdingLaw, DensityField, DivisionKernel, Grid, ModelError, Scenario};
use crate::quadrature::{cumulative_trapezoid, linear_interpolant_integral};
use crate::spectral::perron;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("density has a negative entry {value} at {index:?}")]
    NegativeDensity { index: (usize, usize), value: f64 },
    #[error("population became non-finite at t = {time} (max density {max_density})")]
    NonFinite { time: f64, max_density: f64 },
    #[error("newborn self-renewal through age-0 division has radius {radius} >= 1")]
    UnstableBoundary { radius: f64 },
    #[error("kernel has {kernel} length nodes but the grid has {grid}")]
    ShapeMismatch { kernel: usize, grid: usize },
    #[error("the explicit oracle needs a linear crowding law")]
    NonlinearCrowding,
    #[error("the explicit oracle needs a trace simulated without crowding")]
    CrowdedTrace,
}

/// `p(0, l) = 2 ∫ r(l, l̂) ∫ β p da dl̂` for a given density.
pub fn renewal_boundary(
    density: &DensityField,
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
) -> Vec<f64> {
    let grid = coefficients.grid();
    let wa = grid.age_weights();
    let g = division_flux(density.values(), coefficients.beta(), &wa, 0);
    let r = kernel.values();
    let w = kernel.weights();
    (0..grid.n_len)
        .map(|i| (0..grid.n_len).map(|j| 2.0 * r[[i, j]] * w[j] * g[j]).sum())
        .collect()
}

/// `Σ_{k ≥ from} wa_k β_kj p_kj` per telomere node.
fn division_flux(p: &Array2<f64>, beta: &Array2<f64>, wa: &[f64], from: usize) -> Vec<f64> {
    let mut g = vec![0.0; p.ncols()];
    for k in from..p.nrows() {
        for (j, gj) in g.iter_mut().enumerate() {
            *gj += wa[k] * beta[[k, j]] * p[[k, j]];
        }
    }
    g
}

fn check_nonnegative(values: &Array2<f64>) -> Result<(), SolverError> {
    match values.indexed_iter().find(|(_, &v)| v.is_nan() || v < 0.0) {
        Some((index, &value)) => Err(SolverError::NegativeDensity { index, value }),
        None => Ok(()),
    }
}

/// Precomputed one-step map for a scenario.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    beta: Array2<f64>,
    /// `exp(−dt (c_{k−1} + c_k)/2)` for rows `k ≥ 1`; row 0 unused.
    decay: Array2<f64>,
    /// Newborn row from the interior flux: `(I − A D₀)⁻¹ A`.
    boundary: Array2<f64>,
    age_weights: Vec<f64>,
    crowding: Option<CrowdingLaw>,
}

impl Stepper {
    pub fn new(scenario: &Scenario) -> Result<Self, SolverError> {
        Self::from_parts(&scenario.coefficients, &scenario.kernel, scenario.crowding.clone())
    }

    pub fn from_parts(
        coefficients: &CoefficientField,
        kernel: &DivisionKernel,
        crowding: Option<CrowdingLaw>,
    ) -> Result<Self, SolverError> {
        let grid = *coefficients.grid();
        let n = grid.n_len;
        if kernel.n_len() != n {
            return Err(SolverError::ShapeMismatch {
                kernel: kernel.n_len(),
                grid: n,
            });
        }
        let (beta, mu) = (coefficients.beta(), coefficients.mu());
        let dt = grid.dt();
        let mut decay = Array2::zeros(grid.shape());
        for k in 1..grid.n_age {
            for j in 0..n {
                let c = beta[[k - 1, j]] + mu[[k - 1, j]] + beta[[k, j]] + mu[[k, j]];
                decay[[k, j]] = (-0.5 * c * dt).exp();
            }
        }

        let age_weights = grid.age_weights();
        let r = kernel.values();
        let w = kernel.weights();
        let a = Array2::from_shape_fn((n, n), |(i, j)| 2.0 * r[[i, j]] * w[j]);
        let boundary = if beta.row(0).iter().all(|&b| b == 0.0) {
            a
        } else {
            let self_renewal =
                Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] * age_weights[0] * beta[[0, j]]);
            let radius = perron(&self_renewal).radius;
            if radius >= 1.0 {
                return Err(SolverError::UnstableBoundary { radius });
            }
            let lhs = DMatrix::from_fn(n, n, |i, j| {
                f64::from(u8::from(i == j)) - self_renewal[[i, j]]
            });
            let rhs = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
            let solved = lhs
                .lu()
                .solve(&rhs)
                .ok_or(SolverError::UnstableBoundary { radius })?;
            // (I − A D₀)⁻¹ A is a convergent Neumann series of nonnegative
            // terms; clamp the round-off.
            Array2::from_shape_fn((n, n), |(i, j)| solved[(i, j)].max(0.0))
        };

        Ok(Self {
            grid,
            beta: beta.clone(),
            decay,
            boundary,
            age_weights,
            crowding,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Advance one `dt`; `total` is the population of `p`.
    pub fn advance(&self, p: &Array2<f64>, total: f64) -> Array2<f64> {
        let crowd = self
            .crowding
            .as_ref()
            .map_or(1.0, |f| (-f.evaluate(total) * self.grid.dt()).exp());
        let mut next = Array2::zeros(p.raw_dim());
        for k in (1..self.grid.n_age).rev() {
            for j in 0..self.grid.n_len {
                next[[k, j]] = p[[k - 1, j]] * self.decay[[k, j]] * crowd;
            }
        }
        let g = division_flux(&next, &self.beta, &self.age_weights, 1);
        for i in 0..self.grid.n_len {
            next[[0, i]] = (0..self.grid.n_len)
                .map(|j| self.boundary[[i, j]] * g[j])
                .sum();
        }
        next
    }

    pub fn step(&self, density: &DensityField) -> Result<DensityField, SolverError> {
        let next = self.step_values(density.values())?;
        Ok(DensityField::from_raw(self.grid, next))
    }

    /// One step on raw node values, rejecting negative or NaN entries.
    pub fn step_values(&self, p: &Array2<f64>) -> Result<Array2<f64>, SolverError> {
        check_nonnegative(p)?;
        Ok(self.advance(p, self.grid.integrate(p)))
    }
}

/// One step of the scenario's dynamics.
pub fn step(density: &DensityField, scenario: &Scenario) -> Result<DensityField, SolverError> {
    Stepper::new(scenario)?.step(density)
}

/// `∫_band ∫ p da dl`, partial cells at the band edges split linearly.
pub fn class_population(density: &DensityField, band: &Band) -> f64 {
    let grid = density.grid();
    let marginal = grid.age_marginal(density.values());
    linear_interpolant_integral(&marginal, grid.dl(), band.lo, band.hi)
}

#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub totals: Vec<f64>,
    pub bands: Vec<Band>,
    /// `class_totals[b][n]` is the population of `bands[b]` at `times[n]`.
    pub class_totals: Vec<Vec<f64>>,
    pub snapshots: Vec<(f64, DensityField)>,
    pub last: DensityField,
    /// Whether a crowding law was active.
    pub crowded: bool,
}

impl SimulationTrace {
    pub fn snapshot_at(&self, time: f64) -> Option<&DensityField> {
        let tol = 1e-9 * (1.0 + time.abs());
        self.snapshots
            .iter()
            .find(|(t, _)| (t - time).abs() < tol)
            .map(|(_, d)| d)
    }

    /// Index of the stored time closest to `time`.
    pub fn index_of(&self, time: f64) -> usize {
        let dt = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 1.0 };
        ((time - self.times[0]) / dt)
            .round()
            .clamp(0.0, (self.times.len() - 1) as f64) as usize
    }
}

/// Steps `scenario` to its horizon, recording totals and band populations
/// at every step and snapshots every `cadence`.
pub fn simulate(scenario: &Scenario) -> Result<SimulationTrace, SolverError> {
    let stepper = Stepper::new(scenario)?;
    let grid = scenario.grid;
    check_nonnegative(scenario.initial.values())?;
    let steps = grid.steps_for(scenario.horizon);
    let every = grid.steps_for(scenario.cadence).max(1);

    let mut p = scenario.initial.values().clone();
    let mut trace = SimulationTrace {
        times: Vec::with_capacity(steps + 1),
        totals: Vec::with_capacity(steps + 1),
        bands: scenario.bands.clone(),
        class_totals: vec![Vec::with_capacity(steps + 1); scenario.bands.len()],
        snapshots: Vec::new(),
        last: scenario.initial.clone(),
        crowded: scenario.crowding.is_some(),
    };
    for n in 0..=steps {
        let time = n as f64 * grid.dt();
        let density = DensityField::from_raw(grid, p);
        let total = density.total();
        if !total.is_finite() {
            let max_density = density.values().iter().copied().fold(f64::NAN, f64::max);
            return Err(SolverError::NonFinite { time, max_density });
        }
        trace.times.push(time);
        trace.totals.push(total);
        for (series, band) in trace.class_totals.iter_mut().zip(&scenario.bands) {
            series.push(class_population(&density, band));
        }
        if n % every == 0 || n == steps {
            trace.snapshots.push((time, density.clone()));
        }
        if n == steps {
            trace.last = density;
            break;
        }
        p = stepper.advance(density.values(), total);
    }
    Ok(trace)
}

/// Total population at `t = a_max + dt` with `β = μ = 0`: the transport
/// semigroup alone empties the domain in finite time.
pub fn nilpotency_check(grid: &Grid, p0: &DensityField) -> Result<f64, SolverError> {
    let coefficients = CoefficientField::constant(*grid, 0.0, 0.0)?;
    let scenario = Scenario::new(coefficients, DivisionKernel::zeros(grid), p0.clone())?
        .with_horizon(grid.a_max + grid.dt())?;
    Ok(*simulate(&scenario)?.totals.last().expect("at least one time"))
}

/// Totals of the crowded model predicted from a linear trace,
/// `P_lin(t) / (1 + γ ∫₀ᵗ P_lin)`, the time integral by the trapezoid rule
/// over the stored steps.
pub fn explicit_crowding_oracle(
    linear: &SimulationTrace,
    crowding: &CrowdingLaw,
) -> Result<Vec<f64>, SolverError> {
    let gamma = crowding
        .linear_coefficient()
        .ok_or(SolverError::NonlinearCrowding)?;
    if linear.crowded {
        return Err(SolverError::CrowdedTrace);
    }
    let dt = if linear.times.len() > 1 { linear.times[1] - linear.times[0] } else { 0.0 };
    let integral = cumulative_trapezoid(linear.totals.iter().copied(), dt);
    Ok(linear
        .totals
        .iter()
        .zip(integral)
        .map(|(&p, i)| p / (1.0 + gamma * i))
        .collect())
}
