//! The discretised renewal operator `𝒪_λ` and its Perron analysis.
//!
//! A newborn of length `l̂` that survives to age `a` and divides there
//! produces two daughters distributed by `r(·, l̂)`. Integrating over age
//! gives `K(l̂, λ) = ∫ β e^{−∫₀^a (β+μ+λ)} da` and the operator
//! `(𝒪_λ x)(l) = 2 ∫ r(l, l̂) K(l̂, λ) x(l̂) dl̂`, discretised with
//! trapezoid weights as `M_ij = 2 r_ij K_j w_j`.

use ndarray::{Array1, Array2};
use serde::Serialize;
use thiserror::Error;

use crate::model::{CoefficientField, DensityField, DivisionKernel, Grid};
use crate::quadrature::cumulative_trapezoid;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("no characteristic root in [{lo}, {hi}]: radius - 1 does not change sign")]
    NoRoot { lo: f64, hi: f64 },
    #[error("kernel has {kernel} length nodes but the grid has {grid}")]
    ShapeMismatch { kernel: usize, grid: usize },
    #[error("boundary vector must have {expected} nonnegative finite entries")]
    InvalidBoundary { expected: usize },
}

/// `e^{−∫₀^{a_k} (β+μ+λ)}` at every node, the inner integral by cumulative
/// trapezoid sums along each telomere column.
pub fn survival_factors(coefficients: &CoefficientField, lambda: f64) -> Array2<f64> {
    let grid = coefficients.grid();
    let (beta, mu) = (coefficients.beta(), coefficients.mu());
    let mut out = Array2::zeros(grid.shape());
    for j in 0..grid.n_len {
        let hazard = (0..grid.n_age).map(|k| beta[[k, j]] + mu[[k, j]] + lambda);
        let cumulative = cumulative_trapezoid(hazard, grid.da());
        for (k, s) in cumulative.into_iter().enumerate() {
            out[[k, j]] = (-s).exp();
        }
    }
    out
}

/// `K(l̂_j, λ)` for every telomere node.
pub fn survival_kernel(coefficients: &CoefficientField, lambda: f64) -> Vec<f64> {
    let grid = coefficients.grid();
    let wa = grid.age_weights();
    let beta = coefficients.beta();
    let surv = survival_factors(coefficients, lambda);
    (0..grid.n_len)
        .map(|j| {
            (0..grid.n_age)
                .map(|k| wa[k] * beta[[k, j]] * surv[[k, j]])
                .sum()
        })
        .collect()
}

/// `𝒪_λ` on the telomere grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRenewalOperator {
    pub lambda: f64,
    pub m: Array2<f64>,
}

impl DiscreteRenewalOperator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.m.dot(&Array1::from(x.to_vec())).to_vec()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.m.rows().into_iter().map(|r| r.sum()).collect()
    }
}

fn check_shapes(coefficients: &CoefficientField, kernel: &DivisionKernel) -> Result<(), SpectralError> {
    let n = coefficients.grid().n_len;
    if kernel.n_len() != n {
        return Err(SpectralError::ShapeMismatch {
            kernel: kernel.n_len(),
            grid: n,
        });
    }
    Ok(())
}

fn assemble_with(kernel: &DivisionKernel, survival: &[f64], lambda: f64) -> DiscreteRenewalOperator {
    let r = kernel.values();
    let w = kernel.weights();
    let n = kernel.n_len();
    let m = Array2::from_shape_fn((n, n), |(i, j)| 2.0 * r[[i, j]] * survival[j] * w[j]);
    DiscreteRenewalOperator { lambda, m }
}

pub fn assemble(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
    lambda: f64,
) -> Result<DiscreteRenewalOperator, SpectralError> {
    check_shapes(coefficients, kernel)?;
    Ok(assemble_with(
        kernel,
        &survival_kernel(coefficients, lambda),
        lambda,
    ))
}

/// Perron root and eigenvector of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronPair {
    pub radius: f64,
    /// Nonnegative, max-norm 1.
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_TOLERANCE: f64 = 1e-10;
/// Largest componentwise change of the normalised iterate at convergence.
pub const VECTOR_TOLERANCE: f64 = 1e-9;
pub const POWER_MAX_ITERATIONS: usize = 100_000;

/// Power iteration on `m + εI`, `ε = 10⁻⁸ · max entry`, from the all-ones
/// vector, until both the estimate and the iterate settle. The shift makes every eigenvalue of a cyclic matrix except the
/// Perron root strictly smaller in modulus; it is subtracted at the end.
pub fn perron(m: &Array2<f64>) -> PerronPair {
    let n = m.nrows();
    let max_entry = m.iter().copied().fold(0.0, f64::max);
    if max_entry == 0.0 {
        return PerronPair {
            radius: 0.0,
            eigenvector: vec![1.0; n],
            iterations: 0,
            converged: true,
        };
    }
    let eps = 1e-8 * max_entry;
    let mut x = Array1::from_elem(n, 1.0);
    let mut estimate = f64::NAN;
    for iteration in 1..=POWER_MAX_ITERATIONS {
        let mut y = m.dot(&x);
        y.scaled_add(eps, &x);
        let next = y.iter().copied().fold(0.0, f64::max);
        y /= next;
        let moved = y
            .iter()
            .zip(x.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = y;
        let done = (next - estimate).abs() < POWER_TOLERANCE * next && moved < VECTOR_TOLERANCE;
        estimate = next;
        if done {
            return PerronPair {
                radius: (estimate - eps).max(0.0),
                eigenvector: x.to_vec(),
                iterations: iteration,
                converged: true,
            };
        }
    }
    PerronPair {
        radius: (estimate - eps).max(0.0),
        eigenvector: x.to_vec(),
        iterations: POWER_MAX_ITERATIONS,
        converged: false,
    }
}

pub fn spectral_radius(op: &DiscreteRenewalOperator) -> PerronPair {
    perron(&op.m)
}

/// Closed-form `r(𝒪₀) = 2 r₁ r₂ β (1 − e^{−(β+μ)}) / (β+μ)` for `r = r₁ r₂`
/// and constant `β`, `μ` on `[0,1]²`.
pub fn separable_radius(r1: f64, r2: f64, beta: f64, mu: f64) -> f64 {
    let s = beta + mu;
    assert!(s > 0.0, "separable_radius needs beta + mu > 0");
    2.0 * r1 * r2 * beta * (1.0 - (-s).exp()) / s
}

/// Mother-side and daughter-side radius curves.
///
/// `mother[j] = 2 K(l̂_j) ∫ r(l, l̂_j) dl` and `daughter[i] = 2 ∫ r(l_i, l̂) K(l̂) dl̂`.
/// Their extrema bracket the Perron root of the discrete operator exactly:
/// the former are the column sums of `D M D⁻¹` with `D` the weight
/// diagonal, the latter the row sums of `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurves {
    pub lengths: Vec<f64>,
    pub mother: Vec<f64>,
    pub daughter: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusBounds {
    pub mother_lower: f64,
    pub mother_upper: f64,
    pub daughter_lower: f64,
    pub daughter_upper: f64,
}

impl RadiusBounds {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.mother_lower,
            self.mother_upper,
            self.daughter_lower,
            self.daughter_upper,
        ]
    }

    pub fn lower(&self) -> f64 {
        self.mother_lower.max(self.daughter_lower)
    }

    pub fn upper(&self) -> f64 {
        self.mother_upper.min(self.daughter_upper)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

impl BoundCurves {
    pub fn bounds(&self) -> RadiusBounds {
        let (mother_lower, mother_upper) = min_max(&self.mother);
        let (daughter_lower, daughter_upper) = min_max(&self.daughter);
        RadiusBounds {
            mother_lower,
            mother_upper,
            daughter_lower,
            daughter_upper,
        }
    }
}

fn curves_with(kernel: &DivisionKernel, survival: &[f64], grid: &Grid) -> BoundCurves {
    let n = kernel.n_len();
    let mother = (0..n)
        .map(|j| 2.0 * survival[j] * kernel.column_mass(j))
        .collect();
    let daughter = assemble_with(kernel, survival, 0.0).row_sums();
    BoundCurves {
        lengths: grid.lengths(),
        mother,
        daughter,
    }
}

pub fn bound_curves(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
    lambda: f64,
) -> Result<BoundCurves, SpectralError> {
    check_shapes(coefficients, kernel)?;
    let survival = survival_kernel(coefficients, lambda);
    Ok(curves_with(kernel, &survival, coefficients.grid()))
}

/// The four estimates of `r(𝒪₀)`.
pub fn radius_bounds(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
) -> Result<RadiusBounds, SpectralError> {
    Ok(bound_curves(coefficients, kernel, 0.0)?.bounds())
}

/// Whether the graph with an edge `j → i` for every entry of `M₀` above
/// zero is strongly connected.
pub fn irreducible(kernel: &DivisionKernel, survival: &[f64]) -> bool {
    irreducible_with_threshold(kernel, survival, 0.0)
}

/// As [`irreducible`], keeping only entries above `relative · max entry`.
pub fn irreducible_with_threshold(kernel: &DivisionKernel, survival: &[f64], relative: f64) -> bool {
    let m = assemble_with(kernel, survival, 0.0).m;
    let max_entry = m.iter().copied().fold(0.0, f64::max);
    let cut = relative * max_entry;
    strongly_connected(m.nrows(), |i, j| m[[i, j]] > cut)
}

fn reaches_all(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(from) = stack.pop() {
        let fresh: Vec<usize> = (0..n).filter(|&to| !seen[to] && edge(from, to)).collect();
        for to in fresh {
            seen[to] = true;
            stack.push(to);
        }
    }
    seen.into_iter().all(|s| s)
}

/// `edge(i, j)` means `M_ij > cut`, i.e. mass flows from `j` to `i`.
fn strongly_connected(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    if n == 0 {
        return false;
    }
    reaches_all(n, |from, to| edge(to, from)) && reaches_all(n, &edge)
}

pub const BISECTION_TOLERANCE: f64 = 1e-8;
const INITIAL_BRACKET: f64 = 10.0;
const MAX_BRACKET: f64 = 50.0;

/// `r(𝒪_λ)` as a function of `λ`.
pub fn radius_at(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
    lambda: f64,
) -> Result<f64, SpectralError> {
    Ok(spectral_radius(&assemble(coefficients, kernel, lambda)?).radius)
}

/// The characteristic root `λ*` with `r(𝒪_{λ*}) = 1`, by bisection on the
/// decreasing map `λ ↦ r(𝒪_λ) − 1`.
pub fn growth_rate(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
) -> Result<f64, SpectralError> {
    let g = |lambda: f64| radius_at(coefficients, kernel, lambda).map(|r| r - 1.0);
    let mut half_width = INITIAL_BRACKET;
    let (mut lo, mut hi);
    loop {
        lo = -half_width;
        hi = half_width;
        if g(lo)? >= 0.0 && g(hi)? <= 0.0 {
            break;
        }
        if half_width >= MAX_BRACKET {
            return Err(SpectralError::NoRoot { lo, hi });
        }
        half_width = (half_width + INITIAL_BRACKET).min(MAX_BRACKET);
    }
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let v = g(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ψ(a, l) = ψ(0, l) e^{−∫₀^a (β+μ+λ)}`.
pub fn eigenfunction(
    coefficients: &CoefficientField,
    lambda: f64,
    boundary: &[f64],
) -> Result<DensityField, SpectralError> {
    let grid = coefficients.grid();
    if boundary.len() != grid.n_len || boundary.iter().any(|&b| !(b.is_finite() && b >= 0.0)) {
        return Err(SpectralError::InvalidBoundary {
            expected: grid.n_len,
        });
    }
    let mut field = survival_factors(coefficients, lambda);
    for mut row in field.rows_mut() {
        for (v, &b) in row.iter_mut().zip(boundary) {
            *v *= b;
        }
    }
    Ok(DensityField::from_raw(*grid, field))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Decay,
    Growth,
    SteadyFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub regime: Regime,
    pub radius: f64,
    pub irreducible: bool,
}

pub const CLASSIFY_TOLERANCE: f64 = 1e-6;

pub fn classify(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
) -> Result<Classification, SpectralError> {
    check_shapes(coefficients, kernel)?;
    let survival = survival_kernel(coefficients, 0.0);
    let radius = perron(&assemble_with(kernel, &survival, 0.0).m).radius;
    let regime = if radius < 1.0 - CLASSIFY_TOLERANCE {
        Regime::Decay
    } else if radius > 1.0 + CLASSIFY_TOLERANCE {
        Regime::Growth
    } else {
        Regime::SteadyFamily
    };
    Ok(Classification {
        regime,
        radius,
        irreducible: irreducible(kernel, &survival),
    })
}

/// Perron pair of `𝒪₀` with its estimates and irreducibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub radius: f64,
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub bounds: [f64; 4],
    pub irreducible: bool,
}

pub fn analyze(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
) -> Result<SpectralReport, SpectralError> {
    check_shapes(coefficients, kernel)?;
    let survival = survival_kernel(coefficients, 0.0);
    let pair = perron(&assemble_with(kernel, &survival, 0.0).m);
    let curves = curves_with(kernel, &survival, coefficients.grid());
    Ok(SpectralReport {
        radius: pair.radius,
        eigenvector: pair.eigenvector,
        iterations: pair.iterations,
        converged: pair.converged,
        bounds: curves.bounds().as_array(),
        irreducible: irreducible(kernel, &survival),
    })
}
