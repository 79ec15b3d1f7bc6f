//! Sweeps over the diffusion rate and monotonicity verdicts on the results.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::resource::{classify_conditions, ConditionReport, ResourceProfile};
use crate::sensitivity::{sandwich_check, solve_sensitivity, SandwichReport, Sensitivity};
use crate::steady::{
    check_bounds, continue_to, newton_solve, parabolic_relax, positivity_threshold,
    solve_with_continuation, ContinuationOptions, SteadyState,
};
use crate::verdict::Status;

/// Entries below this fraction of the sup norm do not count as signed.
pub const SIGN_FLOOR: f64 = 1e-10;

/// Relative strictness slack for monotonicity comparisons.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// Relaxation time used to initialize independent rows.
const PARALLEL_RELAX_TIME: f64 = 20.0;

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// 40 log-spaced values in `[1e-2, 1e2]`.
pub fn default_mu_grid() -> Vec<f64> {
    log_spaced(1e-2, 1e2, 40)
}

/// Large-diffusion values appended for the min-decreasing check.
pub const LARGE_MU: [f64; 2] = [1e3, 1e4];

/// Number of sign changes over interior nodes, ignoring near-zero entries.
pub fn sign_changes(grid: &Grid, u: &[f64]) -> usize {
    assert_eq!(u.len(), grid.n());
    let floor = SIGN_FLOOR * u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut last = 0.0_f64;
    let mut changes = 0;
    for &v in &u[1..u.len() - 1] {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = v;
    }
    changes
}

/// Extremum refined by a parabola through the best node and its neighbours;
/// the node itself at the ends. Returns `(value, x)`.
fn refine_extremum(grid: &Grid, u: &[f64], i: usize, maximum: bool) -> (f64, f64) {
    let n = u.len();
    if i == 0 || i == n - 1 {
        return (u[i], grid.x(i));
    }
    let (a, b, c) = (u[i - 1], u[i], u[i + 1]);
    let curvature = a - 2.0 * b + c;
    let opens_right_way = if maximum { curvature < 0.0 } else { curvature > 0.0 };
    if !opens_right_way {
        return (b, grid.x(i));
    }
    let delta = 0.5 * (a - c) / curvature;
    let value = b - 0.25 * (a - c) * delta;
    (value, grid.x(i) + delta * grid.h())
}

/// Per-row quantities used by the verification checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDiagnostics {
    pub theta_prime_min_interior: f64,
    pub theta_prime_max_interior: f64,
    pub derivative_sign_changes: usize,
    /// Max node is interior and `theta'` changes sign once, from + to -.
    pub single_interior_peak: bool,
    pub theta_mu_first: f64,
    pub theta_mu_last: f64,
    pub theta_mu_min: f64,
    pub theta_mu_max: f64,
    pub theta_mu_at_argmin: f64,
    pub theta_sup: f64,
    pub theta_mu_sup: f64,
    pub identity_defect: f64,
    pub linear_residual: f64,
    pub energy: f64,
    pub sandwich: SandwichReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    #[serde(rename = "M")]
    pub max: f64,
    #[serde(rename = "S")]
    pub min: f64,
    pub gap: f64,
    pub argmax_x: f64,
    pub argmin_x: f64,
    pub mass_p1: f64,
    pub mass_p2: f64,
    pub mass_p3: f64,
    pub grad_sq: f64,
    pub theta_mu_at_argmax: f64,
    pub newton_iters: usize,
    pub residual: f64,
    /// `int theta^p` for the configured exponent.
    pub mass_p: Option<f64>,
    pub bounds: Status,
    pub bounds_margins: (f64, f64),
    pub failure: Option<String>,
    pub diagnostics: Option<RowDiagnostics>,
}

impl SweepRow {
    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(mu: f64, err: &Error) -> SweepRow {
        SweepRow {
            mu,
            max: f64::NAN,
            min: f64::NAN,
            gap: f64::NAN,
            argmax_x: f64::NAN,
            argmin_x: f64::NAN,
            mass_p1: f64::NAN,
            mass_p2: f64::NAN,
            mass_p3: f64::NAN,
            grad_sq: f64::NAN,
            theta_mu_at_argmax: f64::NAN,
            newton_iters: 0,
            residual: f64::NAN,
            mass_p: None,
            bounds: Status::NotApplicable,
            bounds_margins: (f64::NAN, f64::NAN),
            failure: Some(err.to_string()),
            diagnostics: None,
        }
    }

    pub fn value(&self, column: Column) -> Option<f64> {
        Some(match column {
            Column::Max => self.max,
            Column::Min => self.min,
            Column::Gap => self.gap,
            Column::MassP1 => self.mass_p1,
            Column::MassP2 => self.mass_p2,
            Column::MassP3 => self.mass_p3,
            Column::GradSq => self.grad_sq,
            Column::MassP => return self.mass_p,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub profile: ResourceProfile,
    pub n: usize,
    pub moment_p: Option<f64>,
    pub conditions: ConditionReport,
    /// Sorted by increasing `mu`.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn valid_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.is_valid())
    }

    /// Largest absolute value in a column over valid rows.
    pub fn column_scale(&self, column: Column) -> f64 {
        self.valid_rows()
            .filter_map(|r| r.value(column))
            .fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub continuation: ContinuationOptions,
    /// Solve rows independently from a relaxed initial state.
    pub parallel: bool,
    /// Extra moment exponent recorded in `mass_p`.
    pub moment_p: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            continuation: ContinuationOptions::default(),
            parallel: false,
            moment_p: None,
        }
    }
}

fn check_mu_values(mu_values: &[f64]) -> Result<()> {
    if mu_values.is_empty() {
        return Err(Error::InvalidArgument("empty mu grid".into()));
    }
    if mu_values.iter().any(|&mu| !(mu > 0.0) || !mu.is_finite()) {
        return Err(Error::InvalidArgument("mu values must be positive".into()));
    }
    if mu_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "mu values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Solves at each `mu` and tabulates extrema, moments and sensitivities.
pub fn run_sweep(
    grid: &Grid,
    profile: &ResourceProfile,
    mu_values: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    check_mu_values(mu_values)?;
    let conditions = classify_conditions(profile, 1024)?;
    let m = grid.sample(|x| profile.value_unchecked(x));
    let row_for = |mu: f64, solved: Result<SteadyState>| -> SweepRow {
        match solved.and_then(|s| tabulate(grid, profile, &m, &conditions, &s, opts.moment_p)) {
            Ok(row) => row,
            Err(err) => {
                log::warn!("sweep row mu = {mu:e} failed: {err}");
                SweepRow::failed(mu, &err)
            }
        }
    };

    let rows: Vec<SweepRow> = if opts.parallel {
        mu_values
            .par_iter()
            .map(|&mu| row_for(mu, solve_independent(grid, profile, &m, mu, &opts.continuation)))
            .collect()
    } else {
        let mut rows = Vec::with_capacity(mu_values.len());
        let mut previous: Option<SteadyState> = None;
        for &mu in mu_values.iter().rev() {
            let solved = match previous.take() {
                Some(state) => continue_to(grid, &m, state, mu, &opts.continuation),
                None => solve_with_continuation(grid, mu, profile, &opts.continuation),
            };
            previous = solved.as_ref().ok().cloned();
            rows.push(row_for(mu, solved));
        }
        rows.reverse();
        rows
    };

    if rows.iter().all(|r| !r.is_valid()) {
        return Err(Error::SweepFailed);
    }
    Ok(SweepTable {
        profile: profile.clone(),
        n: grid.n(),
        moment_p: opts.moment_p,
        conditions,
        rows,
    })
}

/// Relaxes from a constant state, then polishes with Newton; falls back to
/// continuation if that fails.
fn solve_independent(
    grid: &Grid,
    profile: &ResourceProfile,
    m: &[f64],
    mu: f64,
    opts: &ContinuationOptions,
) -> Result<SteadyState> {
    let mbar = grid.integrate(m);
    let mmax = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = Field::constant(grid.n(), mbar.max(1e-3 * mmax));
    let dt = 0.5 * positivity_threshold(m);
    let attempt = parabolic_relax(grid, mu, m, &start, PARALLEL_RELAX_TIME, dt)
        .and_then(|r| newton_solve(grid, mu, m, &r.state, &opts.newton));
    match attempt {
        Ok(mut state) => {
            state.bounds = check_bounds(&state, profile);
            Ok(state)
        }
        Err(err) => {
            log::info!("independent solve at mu = {mu:e} failed ({err}); using continuation");
            solve_with_continuation(grid, mu, profile, opts)
        }
    }
}

fn tabulate(
    grid: &Grid,
    profile: &ResourceProfile,
    m: &[f64],
    conditions: &ConditionReport,
    state: &SteadyState,
    moment_p: Option<f64>,
) -> Result<SweepRow> {
    let bounds = check_bounds(state, profile);
    let sens = solve_sensitivity(grid, state, m)?;
    let theta = &state.theta;
    let imax = theta.argmax();
    let imin = theta.argmin();
    let (max, argmax_x) = refine_extremum(grid, theta, imax, true);
    let (min, argmin_x) = refine_extremum(grid, theta, imin, false);
    let max = max.max(theta[imax]);
    let min = min.min(theta[imin]);
    let mass = |p: f64| grid.integrate(&theta.map(|t| t.powf(p)));
    let grad_sq = grid.dirichlet_energy(theta);
    let diagnostics = diagnose(grid, state, &sens, conditions, grad_sq);

    Ok(SweepRow {
        mu: state.mu,
        max,
        min,
        gap: max - min,
        argmax_x,
        argmin_x,
        mass_p1: grid.integrate(theta),
        mass_p2: grid.integrate_product(theta, theta),
        mass_p3: grid.integrate(&theta.map(|t| t * t * t)),
        grad_sq,
        theta_mu_at_argmax: sens.theta_mu[imax],
        newton_iters: state.newton_iters,
        residual: state.residual_norm,
        mass_p: moment_p.map(mass),
        bounds: bounds.status,
        bounds_margins: (bounds.lower_margin, bounds.upper_margin),
        failure: None,
        diagnostics: Some(diagnostics),
    })
}

fn diagnose(
    grid: &Grid,
    state: &SteadyState,
    sens: &Sensitivity,
    conditions: &ConditionReport,
    energy: f64,
) -> RowDiagnostics {
    let theta = &state.theta;
    let n = grid.n();
    let d = grid.derivative(theta);
    let interior = &d[1..n - 1];
    let theta_prime_min_interior = interior.iter().copied().fold(f64::INFINITY, f64::min);
    let theta_prime_max_interior = interior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let derivative_sign_changes = sign_changes(grid, &d);
    let imax = theta.argmax();
    let floor = SIGN_FLOOR * d.sup_norm();
    let first_signed = interior.iter().find(|v| v.abs() > floor).copied();
    let last_signed = interior.iter().rev().find(|v| v.abs() > floor).copied();
    let single_interior_peak = imax > 0
        && imax < n - 1
        && derivative_sign_changes == 1
        && first_signed.is_some_and(|v| v > 0.0)
        && last_signed.is_some_and(|v| v < 0.0);
    let tm = &sens.theta_mu;
    RowDiagnostics {
        theta_prime_min_interior,
        theta_prime_max_interior,
        derivative_sign_changes,
        single_interior_peak,
        theta_mu_first: tm[0],
        theta_mu_last: tm[n - 1],
        theta_mu_min: tm.min(),
        theta_mu_max: tm.max(),
        theta_mu_at_argmin: tm[theta.argmin()],
        theta_sup: theta.sup_norm(),
        theta_mu_sup: tm.sup_norm(),
        identity_defect: sens.identity_defect,
        linear_residual: sens.linear_residual,
        energy,
        sandwich: sandwich_check(state, sens, conditions),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    #[serde(rename = "M")]
    Max,
    #[serde(rename = "S")]
    Min,
    Gap,
    MassP1,
    MassP2,
    MassP3,
    GradSq,
    MassP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Consecutive pair of valid rows that breaks or nearly breaks the trend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairWitness {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub value_lo: f64,
    pub value_hi: f64,
    /// Signed step in the claimed direction (positive agrees with it).
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityVerdict {
    pub column: Column,
    pub direction: Direction,
    pub status: Status,
    /// Every step lies within the slack: the column is flat.
    pub degenerate: bool,
    pub slack: f64,
    /// Smallest signed step over all pairs.
    pub min_step: f64,
    pub witness: Option<PairWitness>,
    pub pairs: usize,
}

/// Checks strict monotonicity of a column across consecutive valid rows.
///
/// A step smaller than `slack` in magnitude makes the verdict inconclusive;
/// one below `-slack` fails it. If all steps are within the slack the
/// column is flat and the verdict fails as degenerate.
pub fn monotonicity_verdict(
    table: &SweepTable,
    column: Column,
    direction: Direction,
    slack: f64,
) -> Result<MonotonicityVerdict> {
    let points: Vec<(f64, f64)> = table
        .valid_rows()
        .filter_map(|r| r.value(column).map(|v| (r.mu, v)))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} valid rows for column {column:?}",
            points.len()
        )));
    }
    let sign = match direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    let witness = |w: &[(f64, f64)], step: f64| PairWitness {
        mu_lo: w[0].0,
        mu_hi: w[1].0,
        value_lo: w[0].1,
        value_hi: w[1].1,
        step,
    };

    let mut min_step = f64::INFINITY;
    let mut violation = None;
    let mut marginal = None;
    let mut all_flat = true;
    for w in points.windows(2) {
        let step = sign * (w[1].1 - w[0].1);
        min_step = min_step.min(step);
        if step.abs() > slack {
            all_flat = false;
        }
        if step < -slack && violation.is_none() {
            violation = Some(witness(w, step));
        } else if step.abs() <= slack && marginal.is_none() {
            marginal = Some(witness(w, step));
        }
    }

    let (status, witness, degenerate) = if violation.is_some() {
        (Status::Fail, violation, false)
    } else if all_flat {
        (Status::Fail, marginal, true)
    } else if marginal.is_some() {
        (Status::Inconclusive, marginal, false)
    } else {
        (Status::Pass, None, false)
    };
    Ok(MonotonicityVerdict {
        column,
        direction,
        status,
        degenerate,
        slack,
        min_step,
        witness,
        pairs: points.len() - 1,
    })
}
