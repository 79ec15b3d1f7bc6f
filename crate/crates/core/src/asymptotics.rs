//! Large-diffusion expansion `theta = m_bar + lambda (C(m) + rho_m) + O(lambda^2)`
//! with `lambda = 1 / mu`, where
//!
//! ```text
//! rho_m'' + m_bar (m - m_bar) = 0,   rho_m'(0) = rho_m'(1) = 0,   int rho_m = 0
//! ```
//!
//! and `C(m)` is fixed by solvability of the second-order term:
//!
//! ```text
//! C(m) = int (rho_m')^2 / (m_bar^2 |Omega|) = int (m - m_bar) rho_m / (m_bar |Omega|)
//! ```
//!
//! Integrating `rho_m'' = -m_bar (m - m_bar)` against `rho_m` shows the two
//! forms agree with a plus sign; both are evaluated and compared. The domain
//! is the unit interval, so `|Omega| = 1` throughout.
//!
//! Whenever `C(m) + rho_m > 0` on the whole interval, `theta_mu < 0` at every
//! point for large `mu` and the minimum of `theta` decreases with diffusion.
//! For `m = c + A cos(pi x)` this happens exactly when `A > 2c`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::resource::ResourceProfile;
use crate::steady::{solve_with_continuation, ContinuationOptions};

const OMEGA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticData {
    pub m_bar: f64,
    pub rho_m: Field,
    /// Gradient-energy form of `C(m)`.
    pub c_of_m: f64,
    /// `C(m)` from `int (m - m_bar) rho_m / m_bar`.
    pub c_cross_check: f64,
    pub min_c_plus_rho: f64,
    pub argmin_c_plus_rho: usize,
}

impl AsymptoticData {
    pub fn c_plus_rho(&self) -> Field {
        self.rho_m.map(|r| self.c_of_m + r)
    }

    /// First-order approximation `m_bar + lambda (C + rho)` at each node.
    pub fn first_order(&self, lambda: f64) -> Field {
        self.rho_m.map(|r| self.m_bar + lambda * (self.c_of_m + r))
    }
}

pub fn compute_asymptotics(grid: &Grid, profile: &ResourceProfile) -> Result<AsymptoticData> {
    let m = grid.sample(|x| profile.value_unchecked(x));
    asymptotics_from_samples(grid, &m)
}

/// As [`compute_asymptotics`] from nodal values of `m`.
pub fn asymptotics_from_samples(grid: &Grid, m: &[f64]) -> Result<AsymptoticData> {
    let m_bar = grid.integrate(m) / OMEGA;
    if !(m_bar > 0.0) {
        return Err(Error::NonPositiveMean { mean: m_bar });
    }
    let dev: Vec<f64> = m.iter().map(|v| v - m_bar).collect();
    let rhs: Vec<f64> = dev.iter().map(|d| m_bar * d).collect();
    let rho_m = grid.solve_neumann_poisson_zero_mean(&rhs)?.rho;

    let c_of_m = grid.dirichlet_energy(&rho_m) / (m_bar * m_bar * OMEGA);
    let c_cross_check = grid.integrate_product(&dev, &rho_m) / (m_bar * OMEGA);
    let argmin_c_plus_rho = rho_m.argmin();
    let min_c_plus_rho = c_of_m + rho_m[argmin_c_plus_rho];
    Ok(AsymptoticData {
        m_bar,
        rho_m,
        c_of_m,
        c_cross_check,
        min_c_plus_rho,
        argmin_c_plus_rho,
    })
}

/// `|| theta(1 / lambda) - m_bar - lambda (C + rho) ||_inf`.
pub fn expansion_error(
    grid: &Grid,
    profile: &ResourceProfile,
    lambda: f64,
    opts: &ContinuationOptions,
) -> Result<f64> {
    let data = compute_asymptotics(grid, profile)?;
    expansion_error_with(grid, profile, &data, lambda, opts)
}

fn expansion_error_with(
    grid: &Grid,
    profile: &ResourceProfile,
    data: &AsymptoticData,
    lambda: f64,
    opts: &ContinuationOptions,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )));
    }
    let state = solve_with_continuation(grid, 1.0 / lambda, profile, opts)?;
    Ok(state.theta.sup_distance(&data.first_order(lambda)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub lambdas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log e` against `log lambda`; `None` when the
    /// errors sit at the solver noise floor.
    pub slope: Option<f64>,
}

/// Remainder order over `lambda0, lambda0 / 2, ...` (`levels` values).
pub fn convergence_order(
    grid: &Grid,
    profile: &ResourceProfile,
    lambda0: f64,
    levels: usize,
    opts: &ContinuationOptions,
) -> Result<OrderEstimate> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    let data = compute_asymptotics(grid, profile)?;
    let lambdas: Vec<f64> = (0..levels).map(|k| lambda0 / 2f64.powi(k as i32)).collect();
    let errors = lambdas
        .iter()
        .map(|&l| expansion_error_with(grid, profile, &data, l, opts))
        .collect::<Result<Vec<_>>>()?;

    let floor = 1e-12 * (1.0 + data.m_bar.abs());
    let slope = if errors.iter().any(|&e| e <= floor) {
        None
    } else {
        Some(ls_slope(
            &lambdas.iter().map(|l| l.ln()).collect::<Vec<_>>(),
            &errors.iter().map(|e| e.ln()).collect::<Vec<_>>(),
        ))
    };
    Ok(OrderEstimate {
        lambdas,
        errors,
        slope,
    })
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Parameterized resource families searched by [`hunt_positive_sensitivity`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFamily {
    /// `c + A cos(pi x)` for `steps` equispaced `A` in `[amplitude_min, amplitude_max]`.
    Cosine {
        c: f64,
        amplitude_min: f64,
        amplitude_max: f64,
        steps: usize,
    },
    /// Constant profiles with the given values.
    Constant { values: Vec<f64> },
    /// Explicit `(parameter, profile)` members.
    Listed(Vec<(f64, ResourceProfile)>),
}

impl ProfileFamily {
    pub fn members(&self) -> Vec<(f64, ResourceProfile)> {
        match self {
            ProfileFamily::Cosine {
                c,
                amplitude_min,
                amplitude_max,
                steps,
            } => {
                let steps = (*steps).max(1);
                (0..steps)
                    .map(|k| {
                        let a = if steps == 1 {
                            *amplitude_min
                        } else {
                            amplitude_min
                                + (amplitude_max - amplitude_min) * k as f64 / (steps - 1) as f64
                        };
                        (a, ResourceProfile::CosineOffset { c: *c, amplitude: a })
                    })
                    .collect()
            }
            ProfileFamily::Constant { values } => values
                .iter()
                .map(|&c| (c, ResourceProfile::Constant { c }))
                .collect(),
            ProfileFamily::Listed(list) => list.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuntOptions {
    /// A candidate qualifies when `min (C + rho) > margin`.
    pub margin: f64,
    /// Maximum number of family members evaluated.
    pub budget: usize,
    pub parallel: bool,
}

impl Default for HuntOptions {
    fn default() -> Self {
        HuntOptions {
            margin: 1e-6,
            budget: 1024,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuntCandidate {
    pub parameter: f64,
    pub profile: ResourceProfile,
    /// `None` when the expansion is undefined (non-positive mean).
    pub m_bar: Option<f64>,
    pub min_c_plus_rho: Option<f64>,
    pub qualifies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuntResult {
    /// Qualifying candidate with the smallest parameter.
    pub found: Option<HuntCandidate>,
    pub evaluated: Vec<HuntCandidate>,
}

/// Deterministic grid search for a profile with `C(m) + rho_m > 0`.
pub fn hunt_positive_sensitivity(
    grid: &Grid,
    family: &ProfileFamily,
    opts: &HuntOptions,
) -> HuntResult {
    let mut members = family.members();
    members.truncate(opts.budget);
    let evaluate = |(parameter, profile): &(f64, ResourceProfile)| {
        let data = compute_asymptotics(grid, profile).ok();
        let m_bar = data.as_ref().map(|d| d.m_bar);
        let min_c_plus_rho = data.as_ref().map(|d| d.min_c_plus_rho);
        let qualifies = matches!((m_bar, min_c_plus_rho), (Some(mb), Some(v)) if mb >= 0.0 && v > opts.margin);
        HuntCandidate {
            parameter: *parameter,
            profile: profile.clone(),
            m_bar,
            min_c_plus_rho,
            qualifies,
        }
    };
    let evaluated: Vec<HuntCandidate> = if opts.parallel {
        members.par_iter().map(evaluate).collect()
    } else {
        members.iter().map(evaluate).collect()
    };
    let found = evaluated
        .iter()
        .filter(|c| c.qualifies)
        .min_by(|a, b| a.parameter.total_cmp(&b.parameter))
        .cloned();
    HuntResult { found, evaluated }
}
