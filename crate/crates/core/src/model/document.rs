//! JSON scenario documents.
//!
//! Table fields are inline row-major arrays: age-major for `β`, `μ` and the
//! initial density (`n_age × n_len`), daughter-major for the kernel
//! (`r[i * n_len + j] = r(l_i, l̂_j)`).

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::scenarios::{
    build_beta, build_gaussian_kernel, build_initial_density, check_example_grid, TelomereGate,
    EXAMPLE_GAMMA, EXAMPLE_SD,
};
use super::{
    Band, CoefficientField, CrowdingLaw, DensityField, DivisionKernel, Grid, ModelError, Scenario,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_age: usize,
    pub n_len: usize,
    pub a_max: f64,
    pub l_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BetaSpec {
    Example {
        beta0: f64,
        #[serde(default)]
        gate: TelomereGate,
    },
    Constant {
        value: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MuSpec {
    Constant { value: f64 },
    Table { values: Vec<f64> },
}

/// Mean of the Gaussian daughter-length distribution as a function of the
/// mother length: `l̂ + shift` or `intercept + slope · l̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMean {
    Shift,
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian {
        mean: KernelMean,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intercept: Option<f64>,
        sd: f64,
        divisor: f64,
        #[serde(default)]
        renormalize: bool,
    },
    Table {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CrowdingSpec {
    None,
    Linear { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialSpec {
    /// `1000 · l · max{a(1 − a), 0}`
    Example,
    Table { values: Vec<f64> },
}

fn default_crowding() -> CrowdingSpec {
    CrowdingSpec::None
}

fn default_initial() -> InitialSpec {
    InitialSpec::Example
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub grid: GridSpec,
    pub beta: BetaSpec,
    pub mu: MuSpec,
    pub kernel: KernelSpec,
    #[serde(default = "default_crowding")]
    pub crowding: CrowdingSpec,
    pub horizon: f64,
    #[serde(default = "default_one")]
    pub cadence: f64,
    #[serde(default = "default_initial")]
    pub initial: InitialSpec,
    /// Tracked telomere bands as `[lo, hi]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bands: Vec<[f64; 2]>,
}

fn table(what: &'static str, grid: &Grid, values: &[f64]) -> Result<Array2<f64>, ModelError> {
    let shape = grid.shape();
    Array2::from_shape_vec(shape, values.to_vec()).map_err(|_| ModelError::Shape {
        what,
        expected: shape,
        found: (values.len(), 1),
    })
}

fn square_table(what: &'static str, n: usize, values: &[f64]) -> Result<Array2<f64>, ModelError> {
    Array2::from_shape_vec((n, n), values.to_vec()).map_err(|_| ModelError::Shape {
        what,
        expected: (n, n),
        found: (values.len(), 1),
    })
}

impl ScenarioDocument {
    /// Document describing reference example `which` on an `n_age × n_len`
    /// grid over `[0, 6] × [0, 1]`.
    pub fn example(which: u8, n_age: usize, n_len: usize) -> Result<Self, ModelError> {
        let (beta0, mu, horizon, bands) = match which {
            1 => (13.0, 0.05, 14.0, 5),
            2 => (180.0, 0.3, 20.0, 4),
            3 => (180.0, 0.3, 50.0, 4),
            other => {
                return Err(ModelError::Config(format!(
                    "unknown example id {other}; expected 1, 2 or 3"
                )))
            }
        };
        let kernel = if which == 1 {
            KernelSpec::Gaussian {
                mean: KernelMean::Shift,
                shift: Some(-0.2),
                slope: None,
                intercept: None,
                sd: EXAMPLE_SD,
                divisor: 0.8,
                renormalize: false,
            }
        } else {
            KernelSpec::Gaussian {
                mean: KernelMean::Affine,
                shift: None,
                slope: Some(2.0),
                intercept: Some(-0.8),
                sd: EXAMPLE_SD,
                divisor: 0.5,
                renormalize: false,
            }
        };
        Ok(Self {
            grid: GridSpec {
                n_age,
                n_len,
                a_max: 6.0,
                l_max: 1.0,
            },
            beta: BetaSpec::Example {
                beta0,
                gate: TelomereGate::default(),
            },
            mu: MuSpec::Constant { value: mu },
            kernel,
            crowding: if which == 3 {
                CrowdingSpec::Linear {
                    gamma: EXAMPLE_GAMMA,
                }
            } else {
                CrowdingSpec::None
            },
            horizon,
            cadence: 1.0,
            initial: InitialSpec::Example,
            bands: Band::partition(1.0, bands)
                .into_iter()
                .map(|b| [b.lo, b.hi])
                .collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Config(format!("scenario JSON: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents always serialize")
    }

    pub fn build(&self) -> Result<Scenario, ModelError> {
        let g = &self.grid;
        let grid = Grid::new(g.n_age, g.n_len, g.a_max, g.l_max)?;

        let beta = match &self.beta {
            BetaSpec::Example { beta0, gate } => {
                check_example_grid(&grid)?;
                build_beta(&grid, *beta0, *gate)?.values
            }
            BetaSpec::Constant { value } => Array2::from_elem(grid.shape(), *value),
            BetaSpec::Table { values } => table("beta table", &grid, values)?,
        };
        let mu = match &self.mu {
            MuSpec::Constant { value } => Array2::from_elem(grid.shape(), *value),
            MuSpec::Table { values } => table("mu table", &grid, values)?,
        };
        let coefficients = CoefficientField::new(grid, beta, mu)?;

        let kernel = match &self.kernel {
            KernelSpec::Gaussian {
                mean,
                shift,
                slope,
                intercept,
                sd,
                divisor,
                renormalize,
            } => match mean {
                KernelMean::Shift => {
                    let s = shift.ok_or_else(|| {
                        ModelError::Config("shift mean needs a `shift` parameter".into())
                    })?;
                    build_gaussian_kernel(&grid, |lhat| lhat + s, *sd, *divisor, *renormalize)?
                }
                KernelMean::Affine => {
                    let (m, c) = slope.zip(*intercept).ok_or_else(|| {
                        ModelError::Config(
                            "affine mean needs `slope` and `intercept` parameters".into(),
                        )
                    })?;
                    build_gaussian_kernel(&grid, |lhat| c + m * lhat, *sd, *divisor, *renormalize)?
                }
            },
            KernelSpec::Table { values } => {
                DivisionKernel::new(&grid, square_table("kernel table", grid.n_len, values)?)?
            }
        };

        let initial = match &self.initial {
            InitialSpec::Example => build_initial_density(&grid),
            InitialSpec::Table { values } => {
                DensityField::new(grid, table("initial table", &grid, values)?)?
            }
        };

        let bands = self
            .bands
            .iter()
            .map(|&[lo, hi]| Band::new(lo, hi, grid.l_max))
            .collect::<Result<Vec<_>, _>>()?;

        let mut scenario = Scenario::new(coefficients, kernel, initial)?
            .with_horizon(self.horizon)?
            .with_cadence(self.cadence)?
            .with_bands(bands);
        if let CrowdingSpec::Linear { gamma } = self.crowding {
            scenario = scenario.with_crowding(CrowdingLaw::linear(gamma)?);
        }
        Ok(scenario)
    }
}
