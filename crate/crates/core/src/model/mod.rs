//! Model ingredients: the grid, coefficient fields, the division kernel, the
//! crowding law, densities and complete scenarios.

mod document;
mod scenarios;

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{dot, trapezoid_weights};

pub use document::{
    BetaSpec, CrowdingSpec, GridSpec, InitialSpec, KernelMean, KernelSpec, MuSpec, ScenarioDocument,
};
pub use scenarios::{
    build_beta, build_gaussian_kernel, build_initial_density, example_beta, example_scenario,
    SampledBeta, TelomereGate,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{what}: expected shape {expected:?}, found {found:?}")]
    Shape {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{what} has a negative entry {value} at {index:?}")]
    Negative {
        what: &'static str,
        index: (usize, usize),
        value: f64,
    },
    #[error("{what} has a non-finite entry at {index:?}")]
    NonFinite {
        what: &'static str,
        index: (usize, usize),
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Uniform age × telomere-length grid. Both endpoints are nodes and the time
/// step equals the age step, so transport along characteristics is an exact
/// shift by one age node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_age: usize,
    pub n_len: usize,
    pub a_max: f64,
    pub l_max: f64,
}

impl Grid {
    pub fn new(n_age: usize, n_len: usize, a_max: f64, l_max: f64) -> Result<Self, ModelError> {
        if n_age < 3 || n_len < 3 {
            return Err(ModelError::InvalidGrid(format!(
                "need at least 3 nodes per axis, got n_age={n_age}, n_len={n_len}"
            )));
        }
        if !(a_max.is_finite() && a_max > 0.0 && l_max.is_finite() && l_max > 0.0) {
            return Err(ModelError::InvalidGrid(format!(
                "extents must be positive and finite, got a_max={a_max}, l_max={l_max}"
            )));
        }
        Ok(Self {
            n_age,
            n_len,
            a_max,
            l_max,
        })
    }

    pub fn da(&self) -> f64 {
        self.a_max / (self.n_age - 1) as f64
    }

    pub fn dl(&self) -> f64 {
        self.l_max / (self.n_len - 1) as f64
    }

    /// Time step; identical to [`Grid::da`].
    pub fn dt(&self) -> f64 {
        self.da()
    }

    pub fn age(&self, k: usize) -> f64 {
        if k + 1 == self.n_age {
            self.a_max
        } else {
            k as f64 * self.da()
        }
    }

    pub fn length(&self, i: usize) -> f64 {
        if i + 1 == self.n_len {
            self.l_max
        } else {
            i as f64 * self.dl()
        }
    }

    pub fn ages(&self) -> Vec<f64> {
        (0..self.n_age).map(|k| self.age(k)).collect()
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.n_len).map(|i| self.length(i)).collect()
    }

    pub fn age_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_age, self.da())
    }

    pub fn length_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_len, self.dl())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_age, self.n_len)
    }

    /// Number of whole time steps covering `duration` (rounded to nearest).
    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.dt()).round().max(0.0) as usize
    }

    /// Trapezoid double integral of an `n_age × n_len` field.
    pub fn integrate(&self, field: &Array2<f64>) -> f64 {
        let wa = self.age_weights();
        let wl = self.length_weights();
        let mut total = 0.0;
        for (k, row) in field.outer_iter().enumerate() {
            total += wa[k] * dot(&wl, row.iter().copied());
        }
        total
    }

    /// Age-integrated profile `∫ f(a, l) da` at every length node.
    pub fn age_marginal(&self, field: &Array2<f64>) -> Vec<f64> {
        let wa = self.age_weights();
        let mut out = vec![0.0; self.n_len];
        for (k, row) in field.outer_iter().enumerate() {
            for (o, v) in out.iter_mut().zip(row.iter()) {
                *o += wa[k] * v;
            }
        }
        out
    }
}

fn check_field(
    what: &'static str,
    field: &Array2<f64>,
    expected: (usize, usize),
) -> Result<(), ModelError> {
    if field.dim() != expected {
        return Err(ModelError::Shape {
            what,
            expected,
            found: field.dim(),
        });
    }
    for (index, &v) in field.indexed_iter() {
        if !v.is_finite() {
            return Err(ModelError::NonFinite { what, index });
        }
        if v < 0.0 {
            return Err(ModelError::Negative {
                what,
                index,
                value: v,
            });
        }
    }
    Ok(())
}

/// Sampled division modulus `β(a, l)` and mortality `μ(a, l)`.
///
/// The last age row of `β` is forced to zero (cells of maximal age do not
/// divide); the largest value removed that way is kept in
/// [`CoefficientField::clipped_beta`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    grid: Grid,
    beta: Array2<f64>,
    mu: Array2<f64>,
    clipped_beta: f64,
}

impl CoefficientField {
    pub fn new(grid: Grid, mut beta: Array2<f64>, mu: Array2<f64>) -> Result<Self, ModelError> {
        check_field("beta", &beta, grid.shape())?;
        check_field("mu", &mu, grid.shape())?;
        let last = grid.n_age - 1;
        let mut clipped_beta: f64 = 0.0;
        for v in beta.row_mut(last).iter_mut() {
            clipped_beta = clipped_beta.max(*v);
            *v = 0.0;
        }
        Ok(Self {
            grid,
            beta,
            mu,
            clipped_beta,
        })
    }

    pub fn constant(grid: Grid, beta: f64, mu: f64) -> Result<Self, ModelError> {
        Self::new(
            grid,
            Array2::from_elem(grid.shape(), beta),
            Array2::from_elem(grid.shape(), mu),
        )
    }

    /// Samples `β` and `μ` from closures of `(a, l)`.
    pub fn from_fn(
        grid: Grid,
        beta: impl Fn(f64, f64) -> f64,
        mu: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, ModelError> {
        let b = Array2::from_shape_fn(grid.shape(), |(k, i)| beta(grid.age(k), grid.length(i)));
        let m = Array2::from_shape_fn(grid.shape(), |(k, i)| mu(grid.age(k), grid.length(i)));
        Self::new(grid, b, m)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn beta(&self) -> &Array2<f64> {
        &self.beta
    }

    pub fn mu(&self) -> &Array2<f64> {
        &self.mu
    }

    /// Largest `β(a_max, ·)` sample that was zeroed at construction.
    pub fn clipped_beta(&self) -> f64 {
        self.clipped_beta
    }

    /// `true` when `β(0, ·)` vanishes, so newborns cannot divide immediately.
    pub fn newborns_sterile(&self) -> bool {
        self.beta.row(0).iter().all(|&b| b == 0.0)
    }
}

/// Daughter-length distribution `r(l, l̂)` sampled on the length nodes:
/// entry `(i, j)` is `r(l_i, l̂_j)` for a mother of length `l̂_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisionKernel {
    r: Array2<f64>,
    weights: Vec<f64>,
}

impl DivisionKernel {
    pub fn new(grid: &Grid, r: Array2<f64>) -> Result<Self, ModelError> {
        check_field("kernel", &r, (grid.n_len, grid.n_len))?;
        Ok(Self {
            r,
            weights: grid.length_weights(),
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self, ModelError> {
        let r = Array2::from_shape_fn((grid.n_len, grid.n_len), |(i, j)| {
            f(grid.length(i), grid.length(j))
        });
        Self::new(grid, r)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            r: Array2::zeros((grid.n_len, grid.n_len)),
            weights: grid.length_weights(),
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_len(&self) -> usize {
        self.weights.len()
    }

    /// `∫ r(l, l̂_j) dl`: daughter mass produced by a mother at node `j`.
    pub fn column_mass(&self, j: usize) -> f64 {
        dot(&self.weights, self.r.column(j).iter().copied())
    }

    /// `∫∫ r(l, l̂) dl̂ dl`.
    pub fn double_integral(&self) -> f64 {
        (0..self.n_len())
            .map(|j| self.weights[j] * self.column_mass(j))
            .sum()
    }

    pub fn max_entry(&self) -> f64 {
        self.r.iter().copied().fold(0.0, f64::max)
    }

    /// Checks the double-integral normalisation `∫∫ r = 1` to within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<(), ModelError> {
        let m = self.double_integral();
        if (m - 1.0).abs() <= tol {
            Ok(())
        } else {
            Err(ModelError::Config(format!(
                "kernel double integral is {m}, not 1 within {tol}"
            )))
        }
    }

    /// Rescales every mother column to unit daughter mass. Zero columns stay zero.
    pub fn renormalized_columns(mut self) -> Self {
        for j in 0..self.n_len() {
            let m = self.column_mass(j);
            if m > 0.0 {
                self.r.column_mut(j).mapv_inplace(|v| v / m);
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    None,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum CrowdingKind {
    Linear { gamma: f64 },
    Custom { label: String, f: ScalarFn, df: ScalarFn },
}

/// Density-dependent extra mortality `F(P)` acting uniformly on all cells.
#[derive(Clone)]
pub struct CrowdingLaw {
    kind: CrowdingKind,
    monotonicity: Monotonicity,
}

impl fmt::Debug for CrowdingLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CrowdingKind::Linear { gamma } => write!(f, "CrowdingLaw::Linear(γ={gamma})"),
            CrowdingKind::Custom { label, .. } => {
                write!(f, "CrowdingLaw::Custom({label}, {:?})", self.monotonicity)
            }
        }
    }
}

impl CrowdingLaw {
    /// `F(P) = γ P`.
    pub fn linear(gamma: f64) -> Result<Self, ModelError> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(ModelError::Config(format!(
                "crowding coefficient must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self {
            kind: CrowdingKind::Linear { gamma },
            monotonicity: Monotonicity::Increasing,
        })
    }

    /// An arbitrary law given by `F` and `F′`. Nonnegativity and the declared
    /// monotonicity are spot-checked on a log-spaced sample of `P`.
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        monotonicity: Monotonicity,
    ) -> Result<Self, ModelError> {
        let law = Self {
            kind: CrowdingKind::Custom {
                label: label.into(),
                f: Arc::new(f),
                df: Arc::new(df),
            },
            monotonicity,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn evaluate(&self, p: f64) -> f64 {
        match &self.kind {
            CrowdingKind::Linear { gamma } => gamma * p,
            CrowdingKind::Custom { f, .. } => f(p),
        }
    }

    pub fn derivative(&self, p: f64) -> f64 {
        match &self.kind {
            CrowdingKind::Linear { gamma } => *gamma,
            CrowdingKind::Custom { df, .. } => df(p),
        }
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    /// `Some(γ)` when the law is `F(P) = γ P`.
    pub fn linear_coefficient(&self) -> Option<f64> {
        match self.kind {
            CrowdingKind::Linear { gamma } => Some(gamma),
            CrowdingKind::Custom { .. } => None,
        }
    }

    /// Sample points `0` and `10^-3 … 10^9` used by the invariant checks.
    pub fn sample_points() -> Vec<f64> {
        std::iter::once(0.0)
            .chain((-6..=18).map(|e| 10f64.powf(e as f64 / 2.0)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let pts = Self::sample_points();
        let vals: Vec<f64> = pts.iter().map(|&p| self.evaluate(p)).collect();
        for (p, v) in pts.iter().zip(&vals) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(ModelError::Config(format!(
                    "crowding law F({p}) = {v} is not a finite nonnegative rate"
                )));
            }
        }
        let ok = match self.monotonicity {
            Monotonicity::Increasing => vals.windows(2).all(|w| w[1] >= w[0]),
            Monotonicity::Decreasing => vals.windows(2).all(|w| w[1] <= w[0]),
            Monotonicity::None => true,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::Config(format!(
                "crowding law is not {:?} on the sample points",
                self.monotonicity
            )))
        }
    }
}

/// Population density `p(a, l)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid,
    values: Array2<f64>,
}

impl DensityField {
    pub fn new(grid: Grid, values: Array2<f64>) -> Result<Self, ModelError> {
        check_field("density", &values, grid.shape())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self, ModelError> {
        let values = Array2::from_shape_fn(grid.shape(), |(k, i)| f(grid.age(k), grid.length(i)));
        Self::new(grid, values)
    }

    /// Wraps values the caller already knows to be nonnegative and finite.
    pub(crate) fn from_raw(grid: Grid, values: Array2<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Total population `P = ∫∫ p da dl`.
    pub fn total(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn scaled(&self, c: f64) -> Result<Self, ModelError> {
        Self::new(self.grid, self.values.mapv(|v| v * c))
    }

    /// Density divided by its total; `None` for the zero density.
    pub fn normalized(&self) -> Option<Self> {
        let t = self.total();
        (t > 0.0).then(|| Self::from_raw(self.grid, self.values.mapv(|v| v / t)))
    }

    /// `∫∫ |p − q|` by the trapezoid rule.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let diff = (&self.values - &other.values).mapv(f64::abs);
        self.grid.integrate(&diff)
    }
}

/// Telomere-length band `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64, l_max: f64) -> Result<Self, ModelError> {
        let eps = 1e-12 * l_max;
        if !(lo >= -eps && lo < hi && hi <= l_max + eps) {
            return Err(ModelError::Config(format!(
                "band [{lo}, {hi}] must satisfy 0 <= lo < hi <= {l_max}"
            )));
        }
        Ok(Self {
            lo: lo.max(0.0),
            hi: hi.min(l_max),
        })
    }

    /// `n` equal bands covering `[0, l_max]`, longest telomeres first.
    pub fn partition(l_max: f64, n: usize) -> Vec<Self> {
        (0..n)
            .map(|j| Self {
                lo: l_max * (n - 1 - j) as f64 / n as f64,
                hi: l_max * (n - j) as f64 / n as f64,
            })
            .collect()
    }
}

/// A complete problem: grid, coefficients, kernel, initial density, optional
/// crowding law, horizon and snapshot cadence. `bands` lists the telomere
/// classes whose populations are tracked during simulation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Grid,
    pub coefficients: CoefficientField,
    pub kernel: DivisionKernel,
    pub initial: DensityField,
    pub crowding: Option<CrowdingLaw>,
    pub horizon: f64,
    pub cadence: f64,
    pub bands: Vec<Band>,
}

impl Scenario {
    /// Linear scenario with horizon and cadence 1 and no tracked bands.
    pub fn new(
        coefficients: CoefficientField,
        kernel: DivisionKernel,
        initial: DensityField,
    ) -> Result<Self, ModelError> {
        let grid = *coefficients.grid();
        if *initial.grid() != grid {
            return Err(ModelError::Config(
                "initial density and coefficients live on different grids".into(),
            ));
        }
        if kernel.n_len() != grid.n_len {
            return Err(ModelError::Shape {
                what: "kernel",
                expected: (grid.n_len, grid.n_len),
                found: kernel.values().dim(),
            });
        }
        Ok(Self {
            grid,
            coefficients,
            kernel,
            initial,
            crowding: None,
            horizon: 1.0,
            cadence: 1.0,
            bands: Vec::new(),
        })
    }

    pub fn with_crowding(mut self, law: CrowdingLaw) -> Self {
        self.crowding = Some(law);
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self, ModelError> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(ModelError::Config(format!("horizon must be >= 0, got {horizon}")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_cadence(mut self, cadence: f64) -> Result<Self, ModelError> {
        if !(cadence.is_finite() && cadence > 0.0) {
            return Err(ModelError::Config(format!("cadence must be > 0, got {cadence}")));
        }
        self.cadence = cadence;
        Ok(self)
    }

    pub fn with_bands(mut self, bands: Vec<Band>) -> Self {
        self.bands = bands;
        self
    }

    pub fn with_initial(mut self, initial: DensityField) -> Result<Self, ModelError> {
        if *initial.grid() != self.grid {
            return Err(ModelError::Config("initial density grid mismatch".into()));
        }
        self.initial = initial;
        Ok(self)
    }
}
