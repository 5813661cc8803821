//! Constructors for the reference initial density, division modulus and
//! Gaussian kernels, and the three reference scenarios.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{
    Band, CoefficientField, CrowdingLaw, DensityField, DivisionKernel, Grid, ModelError, Scenario,
};

/// `p(a, l, 0) = 1000 · l · max{a(1 − a), 0}`.
pub fn build_initial_density(grid: &Grid) -> DensityField {
    DensityField::from_raw(
        *grid,
        Array2::from_shape_fn(grid.shape(), |(k, i)| {
            let a = grid.age(k);
            1000.0 * grid.length(i) * (a * (1.0 - a)).max(0.0)
        }),
    )
}

/// How the division modulus depends on telomere length.
///
/// `Centered` is the smooth step `(arctan(100(l − 0.5)) + π/2)/π`, which goes
/// from ≈0 for short telomeres to ≈1 for long ones and is positive everywhere.
/// `Literal` evaluates `arctan(100(l − 0.5) + π/2)/π` as printed, clamped at
/// zero (it is negative below l ≈ 0.484 and saturates at 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TelomereGate {
    #[default]
    Centered,
    Literal,
}

impl TelomereGate {
    pub fn evaluate(self, l: f64) -> f64 {
        match self {
            Self::Centered => ((100.0 * (l - 0.5)).atan() + PI / 2.0) / PI,
            Self::Literal => ((100.0 * (l - 0.5) + PI / 2.0).atan() / PI).max(0.0),
        }
    }
}

/// Reference division modulus at a single point (no zeroing at `a_max`).
pub fn example_beta(a: f64, l: f64, beta0: f64, gate: TelomereGate) -> f64 {
    if a < 1.0 {
        return 0.0;
    }
    let age_part = (beta0 * (a - 1.0) * (-6.0 * (a - 1.0)).exp()).max(0.0);
    age_part * gate.evaluate(l)
}

/// Reference `β` sampled on the grid, last age row zeroed.
#[derive(Debug, Clone)]
pub struct SampledBeta {
    pub values: Array2<f64>,
    /// Largest formula value at `a = a_max` before it was zeroed.
    pub clipped: f64,
}

pub fn build_beta(grid: &Grid, beta0: f64, gate: TelomereGate) -> Result<SampledBeta, ModelError> {
    if !(beta0.is_finite() && beta0 > 0.0) {
        return Err(ModelError::Config(format!("beta0 must be > 0, got {beta0}")));
    }
    let mut values = Array2::from_shape_fn(grid.shape(), |(k, i)| {
        example_beta(grid.age(k), grid.length(i), beta0, gate)
    });
    let last = grid.n_age - 1;
    let clipped = values.row(last).iter().copied().fold(0.0, f64::max);
    values.row_mut(last).fill(0.0);
    Ok(SampledBeta { values, clipped })
}

fn gaussian_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// `r(l, l̂) = G(l; mean(l̂), sd) / divisor`, sampled at the length nodes.
/// With `renormalize` each mother column is rescaled to unit daughter mass.
pub fn build_gaussian_kernel(
    grid: &Grid,
    mean: impl Fn(f64) -> f64,
    sd: f64,
    divisor: f64,
    renormalize: bool,
) -> Result<DivisionKernel, ModelError> {
    if !(sd.is_finite() && sd > 0.0 && divisor.is_finite() && divisor > 0.0) {
        return Err(ModelError::Config(format!(
            "gaussian kernel needs sd > 0 and divisor > 0, got sd={sd}, divisor={divisor}"
        )));
    }
    let kernel = DivisionKernel::from_fn(grid, |l, lhat| gaussian_pdf(l, mean(lhat), sd) / divisor)?;
    Ok(if renormalize {
        kernel.renormalized_columns()
    } else {
        kernel
    })
}

struct ExampleParams {
    beta0: f64,
    mu0: f64,
    horizon: f64,
    bands: usize,
}

fn example_params(which: u8) -> Result<ExampleParams, ModelError> {
    match which {
        1 => Ok(ExampleParams {
            beta0: 13.0,
            mu0: 0.05,
            horizon: 14.0,
            bands: 5,
        }),
        2 => Ok(ExampleParams {
            beta0: 180.0,
            mu0: 0.3,
            horizon: 20.0,
            bands: 4,
        }),
        3 => Ok(ExampleParams {
            beta0: 180.0,
            mu0: 0.3,
            horizon: 50.0,
            bands: 4,
        }),
        other => Err(ModelError::Config(format!(
            "unknown example id {other}; expected 1, 2 or 3"
        ))),
    }
}

pub(crate) const EXAMPLE_SD: f64 = 0.05;
pub(crate) const EXAMPLE_GAMMA: f64 = 1e-5;

pub(crate) fn example_kernel(which: u8, grid: &Grid) -> Result<DivisionKernel, ModelError> {
    match which {
        1 => build_gaussian_kernel(grid, |lhat| lhat - 0.2, EXAMPLE_SD, 0.8, false),
        // 1 + 2(l̂ − 0.9), written as the affine map the scenario document uses
        _ => build_gaussian_kernel(grid, |lhat| -0.8 + 2.0 * lhat, EXAMPLE_SD, 0.5, false),
    }
}

pub(crate) fn check_example_grid(grid: &Grid) -> Result<(), ModelError> {
    if (grid.a_max - 6.0).abs() > 1e-12 || (grid.l_max - 1.0).abs() > 1e-12 {
        return Err(ModelError::Config(format!(
            "reference examples need a_max = 6 and l_max = 1, got a_max={}, l_max={}",
            grid.a_max, grid.l_max
        )));
    }
    Ok(())
}

/// Reference scenario 1 (no telomere restoration), 2 (restoration, linear) or
/// 3 (restoration with linear crowding `F(P) = 10⁻⁵ P`).
pub fn example_scenario(which: u8, grid: &Grid) -> Result<Scenario, ModelError> {
    let params = example_params(which)?;
    check_example_grid(grid)?;
    let beta = build_beta(grid, params.beta0, TelomereGate::default())?;
    let coefficients = CoefficientField::new(
        *grid,
        beta.values,
        Array2::from_elem(grid.shape(), params.mu0),
    )?;
    let kernel = example_kernel(which, grid)?;
    let mut scenario = Scenario::new(coefficients, kernel, build_initial_density(grid))?
        .with_horizon(params.horizon)?
        .with_bands(Band::partition(grid.l_max, params.bands));
    if which == 3 {
        scenario = scenario.with_crowding(CrowdingLaw::linear(EXAMPLE_GAMMA)?);
    }
    Ok(scenario)
}
