//! The positive steady state of `mu theta'' + theta (m - theta) = 0` with
//! zero-flux ends.
//!
//! Newton iterates are carried as an unevaluated sum `hi + lo` and the
//! residual is evaluated on that sum. A plain `f64` field cannot push the
//! nodal residual below roughly `4 eps mu / h^2` because rounding each node
//! perturbs the second difference; the low word removes that floor so the
//! stopping test measures the discrete equation rather than representation
//! error.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::resource::{classify_conditions, ResourceProfile};
use crate::verdict::Status;

/// Smallest admissible diffusion rate.
pub const MIN_MU: f64 = 1e-6;

/// Continuation starts no lower than this.
pub const CONTINUATION_START_MU: f64 = 1e3;

/// Converged states with mean below this fraction of the mean of `m` are
/// rejected as trivial.
const COLLAPSE_FRACTION: f64 = 0.5;

const DENSE_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Absolute residual tolerance; `None` uses `1e-11 (1 + max|m|)^2`.
    pub tol: Option<f64>,
    /// Take one extra full step after the tolerance is met.
    pub polish: bool,
    pub max_halvings: u32,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iters: 50,
            tol: None,
            polish: true,
            max_halvings: 40,
        }
    }
}

impl NewtonOptions {
    pub fn tolerance(&self, m: &[f64]) -> f64 {
        self.tol.unwrap_or_else(|| default_tolerance(m))
    }
}

pub fn default_tolerance(m: &[f64]) -> f64 {
    let scale = 1.0 + m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    1e-11 * scale * scale
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub newton: NewtonOptions,
    /// Geometric step `mu_next / mu`; must lie in [0.5, 1).
    pub ratio: f64,
    /// Times a failed step is retried with `ratio <- sqrt(ratio)`.
    pub max_refinements: u32,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            newton: NewtonOptions::default(),
            ratio: 0.5,
            max_refinements: 8,
        }
    }
}

/// Strict bounds `min m+ < theta < max m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsCheck {
    pub status: Status,
    pub lower: f64,
    pub upper: f64,
    /// `min theta - min m+`
    pub lower_margin: f64,
    /// `max m - max theta`
    pub upper_margin: f64,
}

/// A converged positive steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub mu: f64,
    pub theta: Field,
    /// Low-order word of the iterate; `theta + theta_tail` is what the
    /// residual was measured on.
    pub theta_tail: Field,
    pub residual_norm: f64,
    pub tolerance: f64,
    pub newton_iters: usize,
    pub bounds: BoundsCheck,
    pub warnings: Vec<String>,
}

impl SteadyState {
    /// `M(mu)` at grid resolution.
    pub fn max(&self) -> f64 {
        self.theta.max()
    }

    /// `S(mu)` at grid resolution.
    pub fn min(&self) -> f64 {
        self.theta.min()
    }
}

/// Nodewise `mu Lap theta + theta (m - theta)`.
pub fn residual(grid: &Grid, mu: f64, m: &[f64], theta: &[f64]) -> Field {
    let lap = grid.laplacian(theta);
    (0..grid.n())
        .map(|i| mu * lap[i] + theta[i] * (m[i] - theta[i]))
        .collect()
}

/// Residual of `hi + lo` without first rounding the sum.
fn residual_split(grid: &Grid, mu: f64, m: &[f64], hi: &[f64], lo: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let k = mu * grid.inv_h2();
    let second_diff = |u: &[f64], i: usize| -> f64 {
        if i == 0 {
            2.0 * (u[1] - u[0])
        } else if i == n - 1 {
            2.0 * (u[n - 2] - u[n - 1])
        } else {
            (u[i - 1] - u[i]) + (u[i + 1] - u[i])
        }
    };
    (0..n)
        .map(|i| {
            let diffusion = k * (second_diff(hi, i) + second_diff(lo, i));
            let reaction = hi[i] * (m[i] - hi[i]) + lo[i] * (m[i] - 2.0 * hi[i] - lo[i]);
            diffusion + reaction
        })
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn check_mu(mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    if mu < MIN_MU {
        log::warn!("mu = {mu:e} clamped to {MIN_MU:e}");
        return Ok(MIN_MU);
    }
    Ok(mu)
}

/// Damped Newton on the discrete steady-state equation.
pub fn newton_solve(
    grid: &Grid,
    mu: f64,
    m: &[f64],
    theta0: &[f64],
    opts: &NewtonOptions,
) -> Result<SteadyState> {
    let mu = check_mu(mu)?;
    assert_eq!(m.len(), grid.n());
    assert_eq!(theta0.len(), grid.n());
    if theta0.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(
            "initial guess must be positive at every node".into(),
        ));
    }
    let tol = opts.tolerance(m);
    let n = grid.n();
    let mut hi = theta0.to_vec();
    let mut lo = vec![0.0; n];
    let mut f = residual_split(grid, mu, m, &hi, &lo);
    let mut r = sup(&f);
    let mut iters = 0;
    let mut polished = false;

    loop {
        if r <= tol && (polished || !opts.polish || r == 0.0) {
            break;
        }
        if iters >= opts.max_iters {
            return Err(Error::NoConvergence {
                mu,
                residual: r,
                iters,
                reason: "iteration limit",
            });
        }
        let c: Vec<f64> = (0..n).map(|i| m[i] - 2.0 * hi[i]).collect();
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = grid.solve_helmholtz(mu, &c, &neg_f)?;
        iters += 1;

        if r <= tol {
            // polishing step: keep it only if it stays converged
            polished = true;
            let (h2, l2) = apply_step(&hi, &lo, &step, 1.0);
            if h2.iter().all(|&v| v > 0.0) {
                let f2 = residual_split(grid, mu, m, &h2, &l2);
                let r2 = sup(&f2);
                if r2 <= r.max(tol) {
                    hi = h2;
                    lo = l2;
                    f = f2;
                    r = r2;
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut halvings = 0;
        loop {
            let (h2, l2) = apply_step(&hi, &lo, &step, alpha);
            if h2.iter().all(|&v| v > 0.0) {
                let f2 = residual_split(grid, mu, m, &h2, &l2);
                let r2 = sup(&f2);
                if r2 < r {
                    hi = h2;
                    lo = l2;
                    f = f2;
                    r = r2;
                    break;
                }
            }
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::NoConvergence {
                    mu,
                    residual: r,
                    iters,
                    reason: "line search stalled",
                });
            }
            alpha *= 0.5;
        }
        log::debug!("newton mu={mu:e} iter={iters} alpha={alpha} residual={r:e}");
    }

    // A positive solution has mean at least the mean of m; far below that
    // the iteration has slid onto the trivial branch.
    let m_mean = grid.integrate(m);
    if m_mean > 0.0 && grid.integrate(&hi) < COLLAPSE_FRACTION * m_mean {
        return Err(Error::NoConvergence {
            mu,
            residual: r,
            iters,
            reason: "collapsed toward the trivial solution",
        });
    }

    let bounds = nodal_bounds(&hi, m);
    Ok(SteadyState {
        mu,
        theta: Field::new(hi),
        theta_tail: Field::new(lo),
        residual_norm: r,
        tolerance: tol,
        newton_iters: iters,
        bounds,
        warnings: Vec::new(),
    })
}

fn apply_step(hi: &[f64], lo: &[f64], step: &[f64], alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let mut h2 = Vec::with_capacity(hi.len());
    let mut l2 = Vec::with_capacity(hi.len());
    for i in 0..hi.len() {
        let (s, e) = two_sum(hi[i], alpha * step[i]);
        let (s, e) = two_sum(s, e + lo[i]);
        h2.push(s);
        l2.push(e);
    }
    (h2, l2)
}

fn bounds_from_extent(theta: &[f64], lower: f64, upper: f64) -> BoundsCheck {
    let tmin = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let tmax = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower_margin = tmin - lower;
    let upper_margin = upper - tmax;
    let status = if upper - lower <= 1e-12 * (1.0 + upper.abs()) {
        Status::NotApplicable
    } else if lower_margin > 0.0 && upper_margin > 0.0 {
        Status::Pass
    } else {
        Status::Fail
    };
    BoundsCheck {
        status,
        lower,
        upper,
        lower_margin,
        upper_margin,
    }
}

fn nodal_bounds(theta: &[f64], m: &[f64]) -> BoundsCheck {
    let lower = m.iter().fold(f64::INFINITY, |a, &v| a.min(v.max(0.0)));
    let upper = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    bounds_from_extent(theta, lower, upper)
}

/// `(min m+, max m)` from a dense sampling of the profile.
pub fn profile_extent(profile: &ResourceProfile) -> (f64, f64) {
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..=DENSE_SAMPLES {
        let v = profile.value_unchecked(i as f64 / DENSE_SAMPLES as f64);
        lower = lower.min(v.max(0.0));
        upper = upper.max(v);
    }
    (lower, upper)
}

/// Checks `min m+ < theta_i < max m` at every node.
pub fn check_bounds(state: &SteadyState, profile: &ResourceProfile) -> BoundsCheck {
    let (lower, upper) = profile_extent(profile);
    bounds_from_extent(&state.theta, lower, upper)
}

/// Result of [`parabolic_relax`].
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub state: Field,
    pub time: f64,
    pub steps: usize,
    /// Stopped because `|u_{k+1} - u_k| / dt < 1e-12`.
    pub settled: bool,
}

/// Largest time step for which the semi-implicit scheme is an M-matrix
/// iteration (and so keeps iterates positive).
pub fn positivity_threshold(m: &[f64]) -> f64 {
    let mplus = m.iter().fold(0.0_f64, |a, &v| a.max(v));
    if mplus > 0.0 {
        1.0 / mplus
    } else {
        f64::INFINITY
    }
}

/// Time-steps `u_t = mu u'' + u (m - u)` with the linearly implicit scheme
/// `(I - dt mu Lap - dt diag(m - u_k)) u_{k+1} = u_k`, written in increment
/// form so the stopping test is not swamped by rounding.
pub fn parabolic_relax(
    grid: &Grid,
    mu: f64,
    m: &[f64],
    u0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Relaxation> {
    let mu = check_mu(mu)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if u0.iter().any(|&v| v < 0.0) || u0.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument(
            "initial density must be non-negative and not identically zero".into(),
        ));
    }
    let n = grid.n();
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut steps = 0;
    let shift = 1.0 / dt;
    while t < t_end {
        let f = residual(grid, mu, m, &u);
        let c: Vec<f64> = (0..n).map(|i| m[i] - u[i] - shift).collect();
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = grid.solve_helmholtz(mu, &c, &neg_f)?;
        for i in 0..n {
            u[i] += delta[i];
        }
        t += dt;
        steps += 1;
        if let Some(node) = u.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::StepSize { node, t, dt });
        }
        if delta.sup_norm() / dt < 1e-12 {
            return Ok(Relaxation {
                state: Field::new(u),
                time: t,
                steps,
                settled: true,
            });
        }
    }
    Ok(Relaxation {
        state: Field::new(u),
        time: t,
        steps,
        settled: false,
    })
}

/// Continues a converged state to `mu_target` in geometric steps, reusing
/// each solution as the next initial guess.
pub fn continue_to(
    grid: &Grid,
    m: &[f64],
    start: SteadyState,
    mu_target: f64,
    opts: &ContinuationOptions,
) -> Result<SteadyState> {
    let mu_target = check_mu(mu_target)?;
    if !(0.5..1.0).contains(&opts.ratio) {
        return Err(Error::InvalidArgument(format!(
            "continuation ratio must lie in [0.5, 1), got {}",
            opts.ratio
        )));
    }
    let mut current = start;
    let downward = mu_target < current.mu;
    while current.mu != mu_target {
        let mut ratio = opts.ratio;
        let mut attempt = 0;
        loop {
            let next = if downward {
                (current.mu * ratio).max(mu_target)
            } else {
                (current.mu / ratio).min(mu_target)
            };
            match newton_solve(grid, next, m, &current.theta, &opts.newton) {
                Ok(state) => {
                    current = state;
                    break;
                }
                Err(err) if attempt < opts.max_refinements => {
                    log::info!("continuation step to mu = {next:e} failed ({err}); refining");
                    ratio = ratio.sqrt();
                    attempt += 1;
                }
                Err(err) => {
                    return Err(Error::Continuation {
                        mu: next,
                        source: Box::new(err),
                    })
                }
            }
        }
    }
    Ok(current)
}

/// Solves at `mu_target` by continuation from large diffusion, where the
/// solution is close to the mean of `m`.
pub fn solve_with_continuation(
    grid: &Grid,
    mu_target: f64,
    profile: &ResourceProfile,
    opts: &ContinuationOptions,
) -> Result<SteadyState> {
    let mu_target = check_mu(mu_target)?;
    let m = grid.sample(|x| profile.value_unchecked(x));
    let mut warnings = Vec::new();
    let report = classify_conditions(profile, 1024)?;
    if !report.m0.holds {
        let msg = format!(
            "profile {} does not satisfy the standing hypothesis (non-constant, mean >= 0)",
            profile.label()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mu_start = mu_target.max(CONTINUATION_START_MU);
    let mbar = grid.integrate(&m);
    let guess = mbar.max(1e-3 * m.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if !(guess > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "profile {} has no positive part",
            profile.label()
        )));
    }
    let first = newton_solve(grid, mu_start, &m, &vec![guess; grid.n()], &opts.newton)
        .map_err(|e| Error::Continuation {
            mu: mu_start,
            source: Box::new(e),
        })?;
    let mut state = continue_to(grid, &m, first, mu_target, opts)?;
    state.bounds = check_bounds(&state, profile);
    state.warnings = warnings;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn residual_examples() {
        let g = grid(65);
        let one = Field::constant(65, 1.0);
        assert_eq!(residual(&g, 3.0, &one, &one).sup_norm(), 0.0);
        let zero = Field::zeros(65);
        let m = g.sample(|x| 1.0 + (PI * x).cos());
        assert_eq!(residual(&g, 1.0, &m, &zero).sup_norm(), 0.0);
        let r = residual(&g, 1.0, &m, &one);
        assert!(r.sup_distance(&g.sample(|x| (PI * x).cos())) < 1e-15);
    }

    #[test]
    fn newton_constant_resource() {
        let g = grid(129);
        let m = Field::constant(129, 1.0);
        let s = newton_solve(&g, 3.0, &m, &Field::constant(129, 0.7), &NewtonOptions::default())
            .unwrap();
        assert!(s.theta.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert!(s.newton_iters <= 6, "iters = {}", s.newton_iters);
        assert_eq!(s.bounds.status, Status::NotApplicable);
    }

    #[test]
    fn newton_cosine_bounds() {
        let g = grid(1025);
        let m = g.sample(|x| 1.0 + (PI * x).cos());
        let s = newton_solve(&g, 1.0, &m, &Field::constant(1025, 1.0), &NewtonOptions::default())
            .unwrap();
        assert!(s.residual_norm <= s.tolerance);
        assert!(s.theta.iter().all(|&v| v > 0.0 && v < 2.0));
        assert_eq!(s.bounds.status, Status::Pass);
    }

    #[test]
    fn newton_rejects_nonpositive_guess() {
        let g = grid(33);
        let m = Field::constant(33, 1.0);
        let mut guess = vec![1.0; 33];
        guess[4] = 0.0;
        assert!(matches!(
            newton_solve(&g, 1.0, &m, &guess, &NewtonOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn newton_reports_iteration_limit() {
        let g = grid(257);
        let m = g.sample(|x| 1.0 + 3.0 * (PI * x).cos());
        let opts = NewtonOptions {
            max_iters: 1,
            ..NewtonOptions::default()
        };
        let err = newton_solve(&g, 1e-2, &m, &Field::constant(257, 1e-3), &opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn parabolic_fixed_point_and_logistic_limit() {
        let g = grid(65);
        let m = Field::constant(65, 1.0);
        let r = parabolic_relax(&g, 1.0, &m, &Field::constant(65, 1.0), 10.0, 0.1).unwrap();
        assert!(r.settled);
        assert_eq!(r.steps, 1);
        assert!(r.state.iter().all(|&v| v == 1.0));

        let r = parabolic_relax(&g, 1.0, &m, &Field::constant(65, 0.5), 100.0, 0.5).unwrap();
        assert!(r.state.iter().all(|&v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn parabolic_input_validation() {
        let g = grid(33);
        let m = Field::constant(33, 1.0);
        assert!(parabolic_relax(&g, 1.0, &m, &Field::zeros(33), 1.0, 0.1).is_err());
        assert!(parabolic_relax(&g, 1.0, &m, &Field::constant(33, 1.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn parabolic_reports_lost_positivity() {
        // far above the threshold the linear solve no longer preserves sign
        let g = grid(65);
        let m = g.sample(|x| if x < 0.5 { 40.0 } else { -40.0 });
        let u0 = g.sample(|x| if x < 0.5 { 1e-3 } else { 30.0 });
        let err = parabolic_relax(&g, 1e-4, &m, &u0, 10.0, 5.0).unwrap_err();
        assert!(matches!(err, Error::StepSize { .. }), "{err:?}");
    }

    #[test]
    fn parabolic_matches_newton_for_cosine() {
        let g = grid(1025);
        let m = g.sample(|x| 1.0 + (PI * x).cos());
        let newton = newton_solve(&g, 1.0, &m, &Field::constant(1025, 1.0), &NewtonOptions::default())
            .unwrap();
        let dt = 0.5 * positivity_threshold(&m);
        let relax = parabolic_relax(&g, 1.0, &m, &Field::constant(1025, 1.0), 1e4, dt).unwrap();
        assert!(relax.settled);
        assert!(relax.state.sup_distance(&newton.theta) < 1e-8);
    }

    #[test]
    fn parabolic_matches_newton_for_linear_resource() {
        let g = grid(1025);
        let profile = ResourceProfile::Linear { a: 0.0, b: 1.0 };
        let m = g.sample(|x| x);
        let newton = solve_with_continuation(&g, 0.1, &profile, &ContinuationOptions::default())
            .unwrap();
        let dt = 0.5 * positivity_threshold(&m);
        let relax = parabolic_relax(&g, 0.1, &m, &Field::constant(1025, 0.5), 1e4, dt).unwrap();
        assert!(relax.settled);
        assert!(relax.state.sup_distance(&newton.theta) < 1e-8);
    }

    #[test]
    fn continuation_start_equals_target() {
        let g = grid(257);
        let p = ResourceProfile::CosineOffset { c: 1.0, amplitude: 1.0 };
        let s = solve_with_continuation(&g, 1e3, &p, &ContinuationOptions::default()).unwrap();
        assert_eq!(s.mu, 1e3);
        assert!(s.residual_norm <= s.tolerance);
    }

    #[test]
    fn continuation_linear_small_mu_is_increasing() {
        let g = grid(1025);
        let p = ResourceProfile::Linear { a: 0.0, b: 1.0 };
        let s = solve_with_continuation(&g, 1e-3, &p, &ContinuationOptions::default()).unwrap();
        for i in 1..g.n() - 1 {
            assert!(s.theta[i + 1] > s.theta[i], "not increasing at {i}");
        }
    }

    #[test]
    fn continuation_single_peak_has_one_turning_point() {
        let g = grid(1025);
        let s = solve_with_continuation(&g, 0.01, &ResourceProfile::single_peak(), &ContinuationOptions::default())
            .unwrap();
        let d = g.derivative(&s.theta);
        let scale = d.sup_norm();
        let signs: Vec<f64> = d[1..g.n() - 1]
            .iter()
            .copied()
            .filter(|v| v.abs() > 1e-10 * scale)
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn bounds_examples() {
        let g = grid(513);
        let opts = ContinuationOptions::default();
        let c = ResourceProfile::Constant { c: 1.0 };
        let s = solve_with_continuation(&g, 1.0, &c, &opts).unwrap();
        assert_eq!(check_bounds(&s, &c).status, Status::NotApplicable);
        assert_eq!(s.warnings.len(), 1);

        let p = ResourceProfile::SineOffset { c: 1.5, amplitude: 0.4 };
        let s = solve_with_continuation(&g, 1.0, &p, &opts).unwrap();
        let b = check_bounds(&s, &p);
        assert_eq!(b.status, Status::Pass);
        assert!(b.lower_margin > 0.0 && b.upper_margin > 0.0);

        let p = ResourceProfile::ShiftedRamp { shift: 0.25 };
        let s = solve_with_continuation(&g, 0.5, &p, &opts).unwrap();
        let b = check_bounds(&s, &p);
        assert_eq!(b.status, Status::Pass);
        assert_eq!(b.lower, 0.0);
    }

    #[test]
    fn solutions_are_unique_across_initial_guesses() {
        let g = grid(513);
        let p = ResourceProfile::CosineOffset { c: 1.0, amplitude: 1.0 };
        let m = g.sample(|x| p.value_unchecked(x));
        let mu = 0.3;
        let reference = solve_with_continuation(&g, mu, &p, &ContinuationOptions::default()).unwrap();
        let mmax = m.max();
        let dt = 0.5 * positivity_threshold(&m);
        let relaxed = parabolic_relax(&g, mu, &m, &Field::constant(g.n(), 1.0), 20.0, dt).unwrap();
        let mut guesses: Vec<Field> = [0.1, 0.4, 0.7, 1.0]
            .iter()
            .map(|f| Field::constant(g.n(), f * mmax))
            .collect();
        guesses.push(relaxed.state);
        let mut converged = 0;
        for guess in guesses {
            match newton_solve(&g, mu, &m, &guess, &NewtonOptions::default()) {
                Ok(s) => {
                    let d = s.theta.sup_distance(&reference.theta);
                    assert!(d < 1e-9, "{d:e}");
                    converged += 1;
                }
                Err(Error::NoConvergence { reason, .. }) => {
                    assert_eq!(reason, "collapsed toward the trivial solution")
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(converged >= 4);
    }

    #[test]
    fn large_mu_flattens_toward_mean() {
        let g = grid(513);
        let p = ResourceProfile::CosineOffset { c: 1.0, amplitude: 1.0 };
        let opts = ContinuationOptions::default();
        let d3 = solve_with_continuation(&g, 1e3, &p, &opts).unwrap().theta.map(|v| (v - 1.0).abs()).max();
        let d6 = solve_with_continuation(&g, 1e6, &p, &opts).unwrap().theta.map(|v| (v - 1.0).abs()).max();
        // first-order term is (C + rho) / mu with |C + rho| <= 1/(2 pi^2) + 1/pi^2
        let first_order = (1.5 / (PI * PI)) / 1e6;
        assert!(d6 < 10.0 * first_order, "{d6:e}");
        assert!(d6 < d3);
    }
}
