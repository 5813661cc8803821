//! Checks of the telomere-class bounds against simulated traces.
//!
//! Without self-renewal (no daughter lands within `δ` below its mother)
//! cells can only move down the bands `[l_max − (j+1)δ, l_max − jδ]`, so the
//! population of band `j` is bounded by a polynomial in `t` times `e^{−σt}`.
//! With enough self-renewal in the top band its population grows at least
//! like `e^{(2r₁β₁ − β₁ − μ₁)t}`.

use ndarray::Array2;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Band, CoefficientField, DensityField, DivisionKernel, Grid, ModelError, Scenario};
use crate::quadrature::linear_interpolant_integral;
use crate::solver::SimulationTrace;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("band width {delta} leaves no complete band below l_max = {l_max}")]
    InvalidDelta { delta: f64, l_max: f64 },
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("trace does not track band [{lo}, {hi}]")]
    MissingBand { lo: f64, hi: f64 },
    #[error("binomial coefficient C({n}, {k}) overflows")]
    Overflow { n: u64, k: u64 },
    #[error("fit window [{from}, {to}] holds fewer than two positive samples")]
    EmptyFit { from: f64, to: f64 },
}

/// Relative threshold below which a kernel entry counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ClassBoundConfig {
    pub delta: f64,
    /// Index of the last band `j` with `(j+1)δ < l_max`.
    pub n: usize,
    pub sigma: f64,
    pub omega: f64,
    pub l_max: f64,
    pub r_max: f64,
    pub beta_max: f64,
    pub beta_min: f64,
    pub mu_min: f64,
    /// Whether the kernel vanishes on `{l̂ − δ ≤ l ≤ l̂}`.
    pub no_self_renewal: bool,
}

fn extrema(a: &Array2<f64>) -> (f64, f64) {
    a.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

impl ClassBoundConfig {
    pub fn new(
        coefficients: &CoefficientField,
        kernel: &DivisionKernel,
        delta: f64,
    ) -> Result<Self, BoundsError> {
        let grid = coefficients.grid();
        let l_max = grid.l_max;
        if !(delta > 0.0 && 2.0 * delta < l_max) {
            return Err(BoundsError::InvalidDelta { delta, l_max });
        }
        let limit = l_max * (1.0 - 1e-12);
        let mut n = 0;
        while (n as f64 + 2.0) * delta < limit {
            n += 1;
        }
        let (beta_min, beta_max) = extrema(coefficients.beta());
        let (mu_min, _) = extrema(coefficients.mu());
        let r_max = kernel.max_entry();
        Ok(Self {
            delta,
            n,
            sigma: beta_min + mu_min,
            omega: 2.0 * delta * r_max * beta_max,
            l_max,
            r_max,
            beta_max,
            beta_min,
            mu_min,
            no_self_renewal: check_no_self_renewal(kernel, grid, delta),
        })
    }

    /// Band `j`, counted down from the longest telomeres.
    pub fn band(&self, j: usize) -> Band {
        Band {
            lo: (self.l_max - (j + 1) as f64 * self.delta).max(0.0),
            hi: self.l_max - j as f64 * self.delta,
        }
    }

    pub fn bands(&self) -> Vec<Band> {
        (0..=self.n).map(|j| self.band(j)).collect()
    }
}

/// True when every entry with `l̂ − δ ≤ l ≤ l̂` is below `10⁻¹²` of the
/// largest entry.
pub fn check_no_self_renewal(kernel: &DivisionKernel, grid: &Grid, delta: f64) -> bool {
    let cut = ZERO_THRESHOLD * kernel.max_entry();
    let eps = 1e-12 * grid.l_max;
    let r = kernel.values();
    (0..grid.n_len).all(|j| {
        let lhat = grid.length(j);
        (0..grid.n_len).all(|i| {
            let l = grid.length(i);
            let inside = l >= lhat - delta - eps && l <= lhat + eps;
            !inside || r[[i, j]] <= cut
        })
    })
}

/// `C(n, k)` in exact integer arithmetic.
pub fn binomial(n: u64, k: u64) -> Result<u64, BoundsError> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc · (n − i) / (i + 1) stays an integer at every step
        acc = acc
            .checked_mul(n - i)
            .ok_or(BoundsError::Overflow { n, k })?
            / (i + 1);
    }
    Ok(acc)
}

/// `e^{−σt} (P_j(0) + Σ_{k=1}^{j} (ωt)^k/k! Σ_{i=0}^{j−k} C(j−1−i, k−1) P_i(0))`.
pub fn class_bound_curve(
    config: &ClassBoundConfig,
    j: usize,
    initial: &[f64],
    t: f64,
) -> Result<f64, BoundsError> {
    let wt = config.omega * t;
    let mut sum = initial[j];
    let mut power = 1.0;
    for k in 1..=j {
        power *= wt / k as f64;
        let mut inner = 0.0;
        for (i, &p) in initial.iter().enumerate().take(j - k + 1) {
            inner += binomial((j - 1 - i) as u64, (k - 1) as u64)? as f64 * p;
        }
        sum += power * inner;
    }
    Ok((-config.sigma * t).exp() * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub time: f64,
    pub band: usize,
    pub simulated: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassBoundReport {
    pub config: ClassBoundConfig,
    /// Largest `simulated / bound` per band.
    pub worst_ratio: Vec<f64>,
    pub violations: usize,
    #[serde(skip)]
    pub rows: Vec<BoundRow>,
}

impl ClassBoundReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

fn find_band(trace: &SimulationTrace, band: &Band) -> Result<usize, BoundsError> {
    let tol = 1e-9;
    trace
        .bands
        .iter()
        .position(|b| (b.lo - band.lo).abs() < tol && (b.hi - band.hi).abs() < tol)
        .ok_or(BoundsError::MissingBand {
            lo: band.lo,
            hi: band.hi,
        })
}

/// Compares every tracked band `j ≤ N` with its bound at every stored time,
/// whether or not the kernel satisfies the hypothesis.
pub fn evaluate_class_bounds(
    trace: &SimulationTrace,
    config: &ClassBoundConfig,
) -> Result<ClassBoundReport, BoundsError> {
    let columns = config
        .bands()
        .iter()
        .map(|b| find_band(trace, b))
        .collect::<Result<Vec<_>, _>>()?;
    let initial: Vec<f64> = columns.iter().map(|&c| trace.class_totals[c][0]).collect();
    let mut rows = Vec::with_capacity(trace.times.len() * columns.len());
    let mut worst_ratio = vec![0.0f64; columns.len()];
    let mut violations = 0;
    for (n, &time) in trace.times.iter().enumerate() {
        for (j, &c) in columns.iter().enumerate() {
            let simulated = trace.class_totals[c][n];
            let bound = class_bound_curve(config, j, &initial, time)?;
            let ratio = if bound > 0.0 {
                simulated / bound
            } else if simulated > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if simulated > bound * (1.0 + 1e-6) + 1e-12 {
                violations += 1;
            }
            worst_ratio[j] = worst_ratio[j].max(ratio);
            rows.push(BoundRow {
                time,
                band: j,
                simulated,
                bound,
                ratio,
            });
        }
    }
    Ok(ClassBoundReport {
        config: config.clone(),
        worst_ratio,
        violations,
        rows,
    })
}

/// As [`evaluate_class_bounds`], refusing kernels that renew within `δ`.
pub fn verify_class_bounds(
    trace: &SimulationTrace,
    config: &ClassBoundConfig,
) -> Result<ClassBoundReport, BoundsError> {
    if !config.no_self_renewal {
        return Err(BoundsError::Hypothesis(format!(
            "kernel does not vanish on l̂ - {} <= l <= l̂",
            config.delta
        )));
    }
    evaluate_class_bounds(trace, config)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RenewalHypothesis {
    pub delta: f64,
    pub r1: f64,
    pub beta1: f64,
    pub mu1: f64,
}

impl RenewalHypothesis {
    pub fn rate(&self) -> f64 {
        2.0 * self.r1 * self.beta1 - self.beta1 - self.mu1
    }

    /// Checks `β ≡ β₁`, `μ ≡ μ₁` on the top band (below `a_max`),
    /// `∫_top r(l, l̂) dl ≥ r₁` for mothers in the band, and
    /// `(2r₁ − 1)β₁ ≥ μ₁`.
    pub fn check(&self, coefficients: &CoefficientField, kernel: &DivisionKernel) -> Result<(), BoundsError> {
        let grid = coefficients.grid();
        let lo = grid.l_max - self.delta;
        let top: Vec<usize> = (0..grid.n_len)
            .filter(|&j| grid.length(j) >= lo - 1e-12 * grid.l_max)
            .collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
        for &j in &top {
            for k in 0..grid.n_age - 1 {
                if !close(coefficients.beta()[[k, j]], self.beta1)
                    || !close(coefficients.mu()[[k, j]], self.mu1)
                {
                    return Err(BoundsError::Hypothesis(format!(
                        "beta, mu not constant ({}, {}) on the top band at node ({k}, {j})",
                        self.beta1, self.mu1
                    )));
                }
            }
            let column: Vec<f64> = kernel.values().column(j).to_vec();
            let mass = linear_interpolant_integral(&column, grid.dl(), lo, grid.l_max);
            if mass < self.r1 {
                return Err(BoundsError::Hypothesis(format!(
                    "top-band daughter mass {mass} < r1 = {} for mother node {j}",
                    self.r1
                )));
            }
        }
        if (2.0 * self.r1 - 1.0) * self.beta1 < self.mu1 {
            return Err(BoundsError::Hypothesis(format!(
                "(2 r1 - 1) beta1 = {} < mu1 = {}",
                (2.0 * self.r1 - 1.0) * self.beta1,
                self.mu1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RenewalReport {
    pub slope: f64,
    pub rate: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Least-squares slope of `ln y` against `t` over `from ≤ t ≤ to`.
pub fn log_slope(times: &[f64], values: &[f64], from: f64, to: f64) -> Result<f64, BoundsError> {
    let eps = 1e-9 * (1.0 + to.abs());
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= from - eps && t <= to + eps && v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(BoundsError::EmptyFit { from, to });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Fits the growth rate of the top band over `[a_max, T]` and compares it
/// with `2r₁β₁ − β₁ − μ₁`, allowing 2% of the rate.
pub fn verify_renewal_lower_bound(
    trace: &SimulationTrace,
    scenario: &Scenario,
    hypothesis: &RenewalHypothesis,
) -> Result<RenewalReport, BoundsError> {
    hypothesis.check(&scenario.coefficients, &scenario.kernel)?;
    let grid = scenario.grid;
    let band = Band {
        lo: grid.l_max - hypothesis.delta,
        hi: grid.l_max,
    };
    let column = find_band(trace, &band)?;
    let end = *trace.times.last().expect("trace has samples");
    let slope = log_slope(&trace.times, &trace.class_totals[column], grid.a_max, end)?;
    let rate = hypothesis.rate();
    let tolerance = 0.02 * rate.abs();
    Ok(RenewalReport {
        slope,
        rate,
        tolerance,
        holds: slope >= rate - tolerance,
    })
}

/// A scenario satisfying the renewal hypothesis: on the top band
/// `[1 − δ, 1]` cells divide at `β₁` and die at `μ₁`; below it they only die
/// at `μ₁`. Daughters land in the top band with total mass `r₁ + 0.01`,
/// uniformly, and uniformly below it with the remainder.
pub fn renewal_scenario(
    n_age: usize,
    n_len: usize,
    hypothesis: &RenewalHypothesis,
    horizon: f64,
) -> Result<Scenario, ModelError> {
    let grid = Grid::new(n_age, n_len, 2.0, 1.0)?;
    let RenewalHypothesis { delta, r1, beta1, mu1 } = *hypothesis;
    let lo = 1.0 - delta;
    let eps = 1e-12;
    let top = move |l: f64| l >= lo - eps;
    let coefficients =
        CoefficientField::from_fn(grid, |_, l| if top(l) { beta1 } else { 0.0 }, |_, _| mu1)?;
    let mass = r1 + 0.01;
    let kernel = DivisionKernel::from_fn(&grid, |l, _| {
        if top(l) {
            mass / delta
        } else {
            (1.0 - mass) / lo
        }
    })?;
    let initial = DensityField::from_fn(grid, |a, _| if a <= 1.0 { 1.0 + a } else { 0.0 })?;
    Ok(Scenario::new(coefficients, kernel, initial)?
        .with_horizon(horizon)?
        .with_bands(vec![Band::new(lo, 1.0, 1.0)?]))
}

/// A scenario whose kernel is exactly zero on `{l̂ − δ ≤ l ≤ l̂}`: daughters
/// are spread uniformly over `[0, l̂ − δ)`. Bands of width `δ` are tracked.
pub fn no_renewal_scenario(
    n_age: usize,
    n_len: usize,
    delta: f64,
    beta: f64,
    mu: f64,
    horizon: f64,
) -> Result<Scenario, ModelError> {
    let grid = Grid::new(n_age, n_len, 2.0, 1.0)?;
    let coefficients = CoefficientField::constant(grid, beta, mu)?;
    let eps = 1e-9;
    let kernel = DivisionKernel::from_fn(&grid, |l, lhat| {
        let top = lhat - delta;
        if l < top - eps {
            1.0 / top
        } else {
            0.0
        }
    })?;
    let initial = DensityField::from_fn(grid, |a, l| 100.0 * l * (a * (1.0 - a)).max(0.0))?;
    let mut bands = Vec::new();
    let mut hi = 1.0;
    while hi - delta > -1e-12 {
        bands.push(Band::new((hi - delta).max(0.0), hi, 1.0)?);
        hi -= delta;
    }
    Ok(Scenario::new(coefficients, kernel, initial)?
        .with_horizon(horizon)?
        .with_bands(bands))
}
