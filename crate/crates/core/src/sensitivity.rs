//! Derivative of the steady state with respect to `mu`.
//!
//! `theta_mu` solves the linearized equation
//!
//! ```text
//! mu Lap theta_mu + (m - 2 theta) theta_mu = -Lap theta
//! ```
//!
//! with the same discrete Laplacian as the steady solver, so the energy
//! identity `int theta^2 theta_mu = -int (theta')^2` holds at the discrete
//! level up to solve error.

use serde::Serialize;

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::resource::{ConditionReport, ResourceProfile};
use crate::steady::{solve_with_continuation, ContinuationOptions, SteadyState};
use crate::verdict::Status;

/// Relative slack for strict nodal inequalities.
pub const STRICT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sensitivity {
    pub theta_mu: Field,
    /// Sup norm of the residual of the linearized equation.
    pub linear_residual: f64,
    /// `|int theta^2 theta_mu + int (theta')^2| / int (theta')^2`; the
    /// unnormalized value when the energy vanishes.
    pub identity_defect: f64,
    /// Sup distance to a central difference in `mu`, when computed.
    pub fd_agreement: Option<f64>,
}

impl Sensitivity {
    pub fn at(&self, i: usize) -> f64 {
        self.theta_mu[i]
    }
}

/// Solves the linearized equation at a converged state.
///
/// A singular operator here means `state` is not a stable steady state.
pub fn solve_sensitivity(grid: &Grid, state: &SteadyState, m: &[f64]) -> Result<Sensitivity> {
    let n = grid.n();
    let theta = &state.theta;
    let tail = &state.theta_tail;
    let lap_hi = grid.laplacian(theta);
    let lap_lo = grid.laplacian(tail);
    let rhs: Vec<f64> = (0..n).map(|i| -(lap_hi[i] + lap_lo[i])).collect();
    let c: Vec<f64> = (0..n).map(|i| m[i] - 2.0 * theta[i]).collect();
    let theta_mu = grid.solve_helmholtz(state.mu, &c, &rhs)?;

    let lap_s = grid.laplacian(&theta_mu);
    let linear_residual = (0..n)
        .map(|i| (state.mu * lap_s[i] + c[i] * theta_mu[i] - rhs[i]).abs())
        .fold(0.0, f64::max);

    let identity_defect = identity_defect(grid, theta, &theta_mu);
    Ok(Sensitivity {
        theta_mu,
        linear_residual,
        identity_defect,
        fd_agreement: None,
    })
}

/// Normalized defect of `int theta^2 theta_mu = -int (theta')^2`.
pub fn identity_defect(grid: &Grid, theta: &[f64], theta_mu: &[f64]) -> f64 {
    let sq: Vec<f64> = theta.iter().map(|t| t * t).collect();
    let energy = grid.dirichlet_energy(theta);
    let defect = (grid.integrate_product(&sq, theta_mu) + energy).abs();
    if energy > 0.0 {
        defect / energy
    } else {
        defect
    }
}

fn solve_pair(
    grid: &Grid,
    profile: &ResourceProfile,
    mu: f64,
    h_mu: f64,
    opts: &ContinuationOptions,
) -> Result<(SteadyState, SteadyState)> {
    if !(h_mu > 0.0) || !(mu - h_mu > 0.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "need 0 < h_mu < mu, got mu = {mu}, h_mu = {h_mu}"
        )));
    }
    let plus = solve_with_continuation(grid, mu + h_mu, profile, opts)?;
    let minus = solve_with_continuation(grid, mu - h_mu, profile, opts)?;
    Ok((plus, minus))
}

/// `|| (theta(mu + h) - theta(mu - h)) / 2h - theta_mu ||_inf`.
pub fn fd_sensitivity_check(
    grid: &Grid,
    profile: &ResourceProfile,
    mu: f64,
    h_mu: f64,
    opts: &ContinuationOptions,
) -> Result<f64> {
    let (plus, minus) = solve_pair(grid, profile, mu, h_mu, opts)?;
    let state = solve_with_continuation(grid, mu, profile, opts)?;
    let m = grid.sample(|x| profile.value_unchecked(x));
    let sens = solve_sensitivity(grid, &state, &m)?;
    let dist = (0..grid.n())
        .map(|i| {
            let diff = (plus.theta[i] - minus.theta[i])
                + (plus.theta_tail[i] - minus.theta_tail[i]);
            (diff / (2.0 * h_mu) - sens.theta_mu[i]).abs()
        })
        .fold(0.0, f64::max);
    Ok(dist)
}

/// `(lhs, rhs)` with `lhs` the central difference of `int theta^3` in `mu`
/// and `rhs = -3 int (theta')^2` at `mu`.
pub fn moment_derivative_check(
    grid: &Grid,
    profile: &ResourceProfile,
    mu: f64,
    h_mu: f64,
    opts: &ContinuationOptions,
) -> Result<(f64, f64)> {
    let (plus, minus) = solve_pair(grid, profile, mu, h_mu, opts)?;
    let state = solve_with_continuation(grid, mu, profile, opts)?;
    let cube = |s: &SteadyState| grid.integrate(&s.theta.map(|t| t * t * t));
    let lhs = (cube(&plus) - cube(&minus)) / (2.0 * h_mu);
    let rhs = -3.0 * grid.dirichlet_energy(&state.theta);
    Ok((lhs, rhs))
}

/// Outcome of the two-sided bound `S < theta + mu theta_mu < M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub status: Status,
    /// Whether the profile satisfies the positivity hypothesis the bound
    /// is proved under; otherwise the status is informational only.
    pub hypothesis_holds: bool,
    /// `min_i (theta_i + mu theta_mu_i) - S`.
    pub lower_margin: f64,
    /// `M - max_i (theta_i + mu theta_mu_i)`.
    pub upper_margin: f64,
    pub worst_node: usize,
    pub slack: f64,
    /// `theta_mu < 0` at the maximum node.
    pub argmax_sign: Status,
    /// `theta_mu > 0` at the minimum node.
    pub argmin_sign: Status,
}

pub fn sandwich_check(
    state: &SteadyState,
    sens: &Sensitivity,
    report: &ConditionReport,
) -> SandwichReport {
    let theta = &state.theta;
    let big = theta.max();
    let small = theta.min();
    let slack = STRICT_SLACK * theta.sup_norm();
    let mu_slack = STRICT_SLACK * sens.theta_mu.sup_norm();
    let hypothesis_holds = report.m1.holds;

    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let mut worst_node = 0;
    let mut worst = f64::INFINITY;
    for i in 0..theta.len() {
        let v = theta[i] + state.mu * sens.theta_mu[i];
        let lo = v - small;
        let hi = big - v;
        lower_margin = lower_margin.min(lo);
        upper_margin = upper_margin.min(hi);
        if lo.min(hi) < worst {
            worst = lo.min(hi);
            worst_node = i;
        }
    }

    let (status, argmax_sign, argmin_sign) = if big - small <= slack {
        (Status::NotApplicable, Status::NotApplicable, Status::NotApplicable)
    } else {
        (
            Status::positive(worst, slack),
            Status::positive(-sens.theta_mu[theta.argmax()], mu_slack),
            Status::positive(sens.theta_mu[theta.argmin()], mu_slack),
        )
    };

    SandwichReport {
        status,
        hypothesis_holds,
        lower_margin,
        upper_margin,
        worst_node,
        slack,
        argmax_sign,
        argmin_sign,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::classify_conditions;
    use std::f64::consts::PI;

    fn setup(n: usize, p: &ResourceProfile, mu: f64) -> (Grid, SteadyState, Field) {
        let g = Grid::new(n).unwrap();
        let s = solve_with_continuation(&g, mu, p, &ContinuationOptions::default()).unwrap();
        let m = g.sample(|x| p.value_unchecked(x));
        (g, s, m)
    }

    #[test]
    fn constant_profile_has_zero_sensitivity() {
        let p = ResourceProfile::Constant { c: 1.0 };
        let (g, s, m) = setup(129, &p, 2.0);
        let sens = solve_sensitivity(&g, &s, &m).unwrap();
        assert!(sens.theta_mu.sup_norm() == 0.0);
        assert_eq!(sens.identity_defect, 0.0);
    }

    #[test]
    fn energy_identity_for_cosine() {
        let p = ResourceProfile::CosineOffset { c: 1.0, amplitude: 1.0 };
        let (g, s, m) = setup(1025, &p, 1.0);
        let sens = solve_sensitivity(&g, &s, &m).unwrap();
        assert!(sens.identity_defect <= 1e-8, "{:e}", sens.identity_defect);
        assert!(sens.theta_mu.min() < 0.0);
    }

    #[test]
    fn increasing_profile_has_negative_right_end_sensitivity() {
        let p = ResourceProfile::Linear { a: 0.0, b: 1.0 };
        let (g, s, m) = setup(513, &p, 1.0);
        let sens = solve_sensitivity(&g, &s, &m).unwrap();
        assert!(sens.at(g.n() - 1) < 0.0);
        assert!(sens.at(0) > 0.0);
    }

    #[test]
    fn linear_residual_is_small() {
        let p = ResourceProfile::SineOffset { c: 1.5, amplitude: 0.4 };
        let (g, s, m) = setup(513, &p, 0.1);
        let sens = solve_sensitivity(&g, &s, &m).unwrap();
        let scale = g.laplacian(&s.theta).sup_norm();
        assert!(sens.linear_residual <= 1e-9 * scale, "{:e}", sens.linear_residual);
    }

    #[test]
    fn fd_check_is_second_order() {
        let g = Grid::new(257).unwrap();
        let opts = ContinuationOptions::default();
        for (p, mu) in [
            (ResourceProfile::CosineOffset { c: 1.0, amplitude: 1.0 }, 1.0),
            (ResourceProfile::single_peak(), 0.5),
        ] {
            let e1 = fd_sensitivity_check(&g, &p, mu, 1e-3, &opts).unwrap();
            let e2 = fd_sensitivity_check(&g, &p, mu, 5e-4, &opts).unwrap();
            assert!(e1 / e2 >= 3.5, "{} {e1:e} {e2:e}", p.label());
        }
        let flat = ResourceProfile::Constant { c: 1.0 };
        assert_eq!(fd_sensitivity_check(&g, &flat, 1.0, 1e-3, &opts).unwrap(), 0.0);
    }

    #[test]
    fn moment_derivative_matches_energy() {
        let g = Grid::new(513).unwrap();
        let opts = ContinuationOptions::default();
        for (p, mu) in [
            (ResourceProfile::CosineOffset { c: 1.0, amplitude: 1.0 }, 1.0),
            (ResourceProfile::Linear { a: 0.0, b: 1.0 }, 0.2),
        ] {
            let (lhs, rhs) = moment_derivative_check(&g, &p, mu, 1e-3, &opts).unwrap();
            assert!(lhs < 0.0 && rhs < 0.0);
            assert!(((lhs - rhs) / rhs).abs() <= 1e-4, "{lhs} {rhs}");
        }
        let flat = ResourceProfile::Constant { c: 1.0 };
        assert_eq!(
            moment_derivative_check(&g, &flat, 1.0, 1e-3, &opts).unwrap(),
            (0.0, -0.0)
        );
    }

    #[test]
    fn sandwich_under_positivity() {
        let p = ResourceProfile::SineOffset { c: 1.5, amplitude: 0.4 };
        let (g, s, m) = setup(513, &p, 1.0);
        let sens = solve_sensitivity(&g, &s, &m).unwrap();
        let report = classify_conditions(&p, 1024).unwrap();
        let r = sandwich_check(&s, &sens, &report);
        assert!(r.hypothesis_holds);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.argmax_sign, Status::Pass);
        assert_eq!(r.argmin_sign, Status::Pass);
    }

    #[test]
    fn sandwich_on_flat_state_is_not_applicable() {
        let p = ResourceProfile::Constant { c: 1.0 };
        let (g, s, m) = setup(129, &p, 1.0);
        let sens = solve_sensitivity(&g, &s, &m).unwrap();
        let report = classify_conditions(&p, 1024).unwrap();
        assert_eq!(sandwich_check(&s, &sens, &report).status, Status::NotApplicable);
    }

    #[test]
    fn large_diffusion_sensitivity_negative_everywhere() {
        // 1 + 3 cos(pi x) has C(m) + rho_m > 0, so theta_mu < 0 at large mu
        let p = ResourceProfile::CosineOffset { c: 1.0, amplitude: 3.0 };
        let (g, s, m) = setup(513, &p, 1e3);
        let sens = solve_sensitivity(&g, &s, &m).unwrap();
        assert!(sens.theta_mu.max() < 0.0);
        let report = classify_conditions(&p, 1024).unwrap();
        let r = sandwich_check(&s, &sens, &report);
        assert!(!r.hypothesis_holds);
        assert_eq!(r.argmin_sign, Status::Fail);
        // leading term: theta_mu ~ -(C + rho) / mu^2 with min (C + rho) = 3 / (2 pi^2)
        let bound = 3.0 / (2.0 * PI * PI) / 1e6;
        assert!((sens.theta_mu.max() + bound).abs() < 0.05 * bound);
    }
}
