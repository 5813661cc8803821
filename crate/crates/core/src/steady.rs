//! Positive equilibria of the crowding model.
//!
//! With `F(P)` added to the mortality, a steady state needs
//! `r(𝒪_{F(P*)}) = 1`. Since `λ ↦ r(𝒪_λ)` is strictly decreasing this is
//! `F(P*) = λ*`, with `λ*` the characteristic root of the linear model.

use ndarray::Array2;
use serde::Serialize;
use thiserror::Error;

use crate::model::{CoefficientField, CrowdingLaw, DensityField, DivisionKernel, Monotonicity, Scenario};
use crate::spectral::{
    assemble, bound_curves, classify, eigenfunction, growth_rate, irreducible, spectral_radius,
    survival_kernel, Regime, SpectralError,
};

#[derive(Debug, Error)]
pub enum SteadyError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("Perron iteration at lambda = {lambda} did not converge")]
    NotConverged { lambda: f64 },
    #[error("equilibrium population must be finite and nonnegative, got {0}")]
    InvalidPopulation(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "populations")]
pub enum Equilibria {
    Unique(f64),
    /// Every sign change of `F(P) − λ*` found on a logarithmic scan.
    Multiple(Vec<f64>),
    /// `F ≡ 0` and `r(𝒪₀) = 1`: any multiple of the Perron profile.
    SteadyFamily,
    /// `F(P) = λ*` has no positive solution.
    ExtinctionOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyStateReport {
    pub lambda_star: f64,
    #[serde(rename = "P_star")]
    pub p_star: f64,
    pub c: f64,
    pub stability_margin: f64,
    pub extinction_stable: bool,
    pub instability_flag: bool,
    pub equilibria: Equilibria,
    #[serde(skip)]
    pub profile: Option<DensityField>,
    /// `LHS − RHS` of the stability condition at every node.
    #[serde(skip)]
    pub margin_curve: Array2<f64>,
}

/// Scan grid for non-monotone laws: `0` and `10^{e/8}`, `e = −48..=144`.
fn scan_points() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-48..=144).map(|e| 10f64.powf(e as f64 / 8.0)))
        .collect()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Positive solutions of `F(P) = lambda`.
pub fn solve_crowding(law: &CrowdingLaw, lambda: f64) -> Equilibria {
    if let Some(gamma) = law.linear_coefficient() {
        return if gamma == 0.0 {
            if lambda == 0.0 {
                Equilibria::SteadyFamily
            } else {
                Equilibria::ExtinctionOnly
            }
        } else if lambda > 0.0 {
            Equilibria::Unique(lambda / gamma)
        } else {
            Equilibria::ExtinctionOnly
        };
    }
    let h = |p: f64| law.evaluate(p) - lambda;
    let points = scan_points();
    let mut roots = Vec::new();
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ha, hb) = (h(a), h(b));
        if hb == 0.0 {
            roots.push(b);
        } else if ha != 0.0 && (ha > 0.0) != (hb > 0.0) {
            roots.push(bisect(h, a, b));
        }
    }
    match roots.len() {
        0 => Equilibria::ExtinctionOnly,
        1 if law.monotonicity() != Monotonicity::None => Equilibria::Unique(roots[0]),
        _ => Equilibria::Multiple(roots),
    }
}

/// `p*(a, l) = c · x(l) · e^{−∫₀^a (β+μ)} · e^{−a F(P*)}` with `x` the Perron
/// vector of `𝒪_{F(P*)}` and `c` fixing the total at `p_star`.
pub fn build_profile(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
    lambda: f64,
    p_star: f64,
) -> Result<(DensityField, f64), SteadyError> {
    if !(p_star.is_finite() && p_star >= 0.0) {
        return Err(SteadyError::InvalidPopulation(p_star));
    }
    let pair = spectral_radius(&assemble(coefficients, kernel, lambda)?);
    if !pair.converged {
        return Err(SteadyError::NotConverged { lambda });
    }
    let shape = eigenfunction(coefficients, lambda, &pair.eigenvector)?;
    let total = shape.total();
    let c = if total > 0.0 { p_star / total } else { 0.0 };
    let profile = shape.scaled(c).map_err(|_| SteadyError::InvalidPopulation(p_star))?;
    Ok((profile, c))
}

/// `μ + β + F(P*) − |F′(P*)| P* − 2β ∫ r(l̂, l) dl̂` at every node, and its
/// minimum. A positive minimum means the equilibrium is asymptotically
/// stable.
pub fn stability_condition(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
    crowding: Option<&CrowdingLaw>,
    p_star: f64,
) -> (f64, Array2<f64>) {
    let grid = coefficients.grid();
    let (f, df) = crowding.map_or((0.0, 0.0), |law| (law.evaluate(p_star), law.derivative(p_star)));
    let (beta, mu) = (coefficients.beta(), coefficients.mu());
    let mass: Vec<f64> = (0..grid.n_len).map(|j| kernel.column_mass(j)).collect();
    let curve = Array2::from_shape_fn(grid.shape(), |(k, j)| {
        let b = beta[[k, j]];
        mu[[k, j]] + b + f - df.abs() * p_star - 2.0 * b * mass[j]
    });
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    (min, curve)
}

/// Whether the zero state is stable: one of the radius upper estimates of
/// `𝒪_{F(0)}` lies below 1.
pub fn extinction_stable(
    coefficients: &CoefficientField,
    kernel: &DivisionKernel,
    crowding: Option<&CrowdingLaw>,
) -> Result<bool, SpectralError> {
    let f0 = crowding.map_or(0.0, |law| law.evaluate(0.0));
    let b = bound_curves(coefficients, kernel, f0)?.bounds();
    Ok(b.mother_upper < 1.0 || b.daughter_upper < 1.0)
}

/// `F′(P*) < 0` with an irreducible kernel makes the equilibrium unstable.
pub fn instability_check(crowding: Option<&CrowdingLaw>, p_star: f64, irreducible: bool) -> bool {
    crowding.is_some_and(|law| law.derivative(p_star) < 0.0) && irreducible
}

pub fn find_equilibrium(scenario: &Scenario) -> Result<SteadyStateReport, SteadyError> {
    let coefficients = &scenario.coefficients;
    let kernel = &scenario.kernel;
    let law = scenario.crowding.as_ref();
    let lambda_star = growth_rate(coefficients, kernel)?;

    let equilibria = match law {
        Some(law) => solve_crowding(law, lambda_star),
        None => match classify(coefficients, kernel)?.regime {
            Regime::SteadyFamily => Equilibria::SteadyFamily,
            _ => Equilibria::ExtinctionOnly,
        },
    };
    let p_star = match &equilibria {
        Equilibria::Unique(p) => *p,
        Equilibria::Multiple(ps) => ps[0],
        Equilibria::SteadyFamily | Equilibria::ExtinctionOnly => 0.0,
    };

    let profile = match equilibria {
        Equilibria::ExtinctionOnly => None,
        _ => {
            let lambda = law.map_or(lambda_star, |f| f.evaluate(p_star));
            Some(build_profile(coefficients, kernel, lambda, p_star)?)
        }
    };
    let (stability_margin, margin_curve) = stability_condition(coefficients, kernel, law, p_star);
    let irreducible = irreducible(kernel, &survival_kernel(coefficients, 0.0));
    Ok(SteadyStateReport {
        lambda_star,
        p_star,
        c: profile.as_ref().map_or(0.0, |(_, c)| *c),
        stability_margin,
        extinction_stable: extinction_stable(coefficients, kernel, law)?,
        instability_flag: instability_check(law, p_star, irreducible),
        equilibria,
        profile: profile.map(|(p, _)| p),
        margin_curve,
    })
}
