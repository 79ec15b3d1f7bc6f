//! The verification report: one verdict per monotonicity or sign statement,
//! gated on the hypotheses the resource profile satisfies.

use anyhow::Result;
use loglab::asymptotics::convergence_order;
use loglab::sensitivity::moment_derivative_check;
use loglab::sweep::{MonotonicityVerdict, MONOTONE_SLACK};
use loglab::{
    classify_conditions, compute_asymptotics, monotonicity_verdict, run_sweep, Column,
    ConditionReport, Direction, Grid, Monotonicity, ResourceProfile, Status, SweepOptions,
    SweepRow, SweepTable,
};
use serde::Serialize;

use crate::config::RunConfig;

/// Samples used to classify the profile.
pub const CLASSIFY_SAMPLES: usize = 4096;
pub const IDENTITY_TOLERANCE: f64 = 1e-6;
pub const MOMENT_FD_TOLERANCE: f64 = 1e-3;
pub const MOMENT_FD_STEP: f64 = 1e-3;
pub const MOMENT_FD_MU: f64 = 1.0;
pub const ORDER_WINDOW: (f64, f64) = (1.8, 2.2);
pub const ORDER_LAMBDA0: f64 = 1e-2;
pub const ORDER_LEVELS: usize = 4;
pub const LARGE_DIFFUSION_MU: [f64; 3] = [1e3, 3e3, 1e4];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    pub value: f64,
    pub note: String,
}

impl Evidence {
    fn at(mu: f64, value: f64, note: impl Into<String>) -> Self {
        Evidence {
            mu: Some(mu),
            x: None,
            value,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub tolerance: f64,
    pub witnesses: Vec<Evidence>,
    pub detail: String,
}

impl Verdict {
    fn not_applicable(tolerance: f64, why: &str) -> Self {
        Verdict {
            status: Status::NotApplicable,
            tolerance,
            witnesses: Vec::new(),
            detail: format!("hypothesis not met: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    #[serde(rename = "thm-1.2-M")]
    pub max_decreasing: Verdict,
    #[serde(rename = "thm-1.2-S")]
    pub min_increasing: Verdict,
    #[serde(rename = "thm-1.3")]
    pub monotone_resource: Verdict,
    #[serde(rename = "thm-1.4")]
    pub single_peak: Verdict,
    #[serde(rename = "lem-2.1-bounds")]
    pub bounds: Verdict,
    #[serde(rename = "lem-2.2-sandwich")]
    pub sandwich: Verdict,
    #[serde(rename = "eq-3.4-identity")]
    pub energy_identity: Verdict,
    #[serde(rename = "lem-4.1-p3")]
    pub cubic_moment: Verdict,
    #[serde(rename = "lem-2.3-order")]
    pub expansion_order: Verdict,
    #[serde(rename = "heni-min-decreasing")]
    pub min_decreasing_large_mu: Verdict,
}

impl Verdicts {
    pub fn all(&self) -> [(&'static str, &Verdict); 10] {
        [
            ("thm-1.2-M", &self.max_decreasing),
            ("thm-1.2-S", &self.min_increasing),
            ("thm-1.3", &self.monotone_resource),
            ("thm-1.4", &self.single_peak),
            ("lem-2.1-bounds", &self.bounds),
            ("lem-2.2-sandwich", &self.sandwich),
            ("eq-3.4-identity", &self.energy_identity),
            ("lem-4.1-p3", &self.cubic_moment),
            ("lem-2.3-order", &self.expansion_order),
            ("heni-min-decreasing", &self.min_decreasing_large_mu),
        ]
    }

    pub fn any_fail(&self) -> bool {
        self.all().iter().any(|(_, v)| v.status == Status::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub profile: String,
    pub n: usize,
    pub mu_values: Vec<f64>,
    pub failed_rows: Vec<f64>,
    pub conditions: ConditionReport,
    pub verdicts: Verdicts,
}

fn slack(scale: f64) -> f64 {
    MONOTONE_SLACK * scale.min(1.0)
}

fn monotone(table: &SweepTable, column: Column, direction: Direction) -> Result<Verdict> {
    let tol = slack(table.column_scale(column));
    let v = monotonicity_verdict(table, column, direction, tol)?;
    Ok(from_monotonicity(&v))
}

fn from_monotonicity(v: &MonotonicityVerdict) -> Verdict {
    let witnesses = v
        .witness
        .iter()
        .flat_map(|w| {
            [
                Evidence::at(w.mu_lo, w.value_lo, "lower mu of offending pair"),
                Evidence::at(w.mu_hi, w.value_hi, format!("signed step {:e}", w.step)),
            ]
        })
        .collect();
    let detail = if v.degenerate {
        format!("{:?} is flat across {} pairs", v.column, v.pairs)
    } else {
        format!(
            "{:?} {:?} over {} pairs, smallest step {:e}",
            v.column, v.direction, v.pairs, v.min_step
        )
    };
    Verdict {
        status: v.status,
        tolerance: v.slack,
        witnesses,
        detail,
    }
}

/// Applies `check` to each row: `Some(evidence)` marks a violation.
/// Failed rows make the outcome inconclusive.
fn rowwise(
    table: &SweepTable,
    tolerance: f64,
    what: &str,
    mut check: impl FnMut(&SweepRow) -> Option<Evidence>,
) -> Verdict {
    let mut witnesses = Vec::new();
    let mut missing = 0;
    for row in &table.rows {
        if !row.is_valid() || row.diagnostics.is_none() {
            missing += 1;
            continue;
        }
        if let Some(e) = check(row) {
            witnesses.push(e);
        }
    }
    let status = if !witnesses.is_empty() {
        Status::Fail
    } else if missing > 0 {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let detail = format!(
        "{what}: {} of {} rows violate, {missing} rows unsolved",
        witnesses.len(),
        table.rows.len()
    );
    witnesses.truncate(8);
    Verdict {
        status,
        tolerance,
        witnesses,
        detail,
    }
}

fn combine(label: &str, parts: Vec<Verdict>) -> Verdict {
    let status = parts
        .iter()
        .fold(Status::NotApplicable, |s, v| s.and(v.status));
    let tolerance = parts.iter().fold(0.0, |t: f64, v| t.max(v.tolerance));
    let detail = format!(
        "{label}: {}",
        parts
            .iter()
            .map(|v| v.detail.as_str())
            .collect::<Vec<_>>()
            .join("; ")
    );
    Verdict {
        status,
        tolerance,
        witnesses: parts.into_iter().flat_map(|v| v.witnesses).collect(),
        detail,
    }
}

fn diag(row: &SweepRow) -> &loglab::RowDiagnostics {
    row.diagnostics.as_ref().expect("rowwise filters rows without diagnostics")
}

/// Runs every applicable check for the configured profile and `mu` grid.
pub fn run_verify(config: &RunConfig) -> Result<VerifyReport> {
    let grid = Grid::new(config.n)?;
    let profile = &config.profile;
    let conditions = classify_conditions(profile, CLASSIFY_SAMPLES)?;
    let mu_values = config.mu.sweep_values();
    let sweep_opts = config.sweep_options();
    log::info!("verify: {} over {} mu values", profile.label(), mu_values.len());
    let table = run_sweep(&grid, profile, &mu_values, &sweep_opts)?;
    let failed_rows: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| !r.is_valid())
        .map(|r| r.mu)
        .collect();
    let theta_scale = table.column_scale(Column::Max);
    let m0 = conditions.m0.holds;

    let verdicts = Verdicts {
        max_decreasing: gated(m0 && conditions.m1.holds, "(M0) and (M1)", || {
            monotone(&table, Column::Max, Direction::Decreasing)
        })?,
        min_increasing: gated(m0 && conditions.m1.holds, "(M0) and (M1)", || {
            monotone(&table, Column::Min, Direction::Increasing)
        })?,
        monotone_resource: gated(m0 && conditions.m2.holds, "(M0) and (M2)", || {
            monotone_resource_verdict(&table, &conditions)
        })?,
        single_peak: gated(m0 && conditions.m3.holds, "(M0) and (M3)", || {
            single_peak_verdict(&table)
        })?,
        bounds: gated(m0, "(M0)", || Ok(bounds_verdict(&table, theta_scale)))?,
        sandwich: gated(m0 && conditions.m1.holds, "(M0) and (M1)", || {
            Ok(sandwich_verdict(&table))
        })?,
        energy_identity: gated(m0, "(M0)", || Ok(identity_verdict(&table)))?,
        cubic_moment: gated(m0, "(M0)", || cubic_moment_verdict(&grid, profile, &table, config))?,
        expansion_order: gated(m0 && conditions.m0.mean > 0.0, "(M0) with positive mean", || {
            order_verdict(&grid, profile, config)
        })?,
        min_decreasing_large_mu: large_mu_verdict(&grid, profile, m0, &sweep_opts, config)?,
    };

    Ok(VerifyReport {
        profile: profile.label(),
        n: config.n,
        mu_values,
        failed_rows,
        conditions,
        verdicts,
    })
}

fn gated(holds: bool, hypothesis: &str, run: impl FnOnce() -> Result<Verdict>) -> Result<Verdict> {
    if holds {
        run()
    } else {
        Ok(Verdict::not_applicable(0.0, hypothesis))
    }
}

fn monotone_resource_verdict(table: &SweepTable, conditions: &ConditionReport) -> Result<Verdict> {
    let increasing = conditions.m2.direction == Monotonicity::NonDecreasing;
    let shape = rowwise(table, 0.0, "theta' single-signed at interior nodes", |r| {
        let d = diag(r);
        let (bad, value) = if increasing {
            (d.theta_prime_min_interior <= 0.0, d.theta_prime_min_interior)
        } else {
            (d.theta_prime_max_interior >= 0.0, d.theta_prime_max_interior)
        };
        bad.then(|| Evidence::at(r.mu, value, "theta' has the wrong sign at an interior node"))
    });
    // theta_mu is negative at the end where m, and theta, are largest
    let end = rowwise(table, 0.0, "theta_mu < 0 at the high end", |r| {
        let d = diag(r);
        let (value, x) = if increasing {
            (d.theta_mu_last, 1.0)
        } else {
            (d.theta_mu_first, 0.0)
        };
        (value >= 0.0).then(|| Evidence {
            mu: Some(r.mu),
            x: Some(x),
            value,
            note: "theta_mu is not negative at the high end".into(),
        })
    });
    let max = monotone(table, Column::Max, Direction::Decreasing)?;
    Ok(combine("monotone resource", vec![shape, end, max]))
}

fn single_peak_verdict(table: &SweepTable) -> Result<Verdict> {
    let shape = rowwise(table, 0.0, "one interior peak, theta' changes sign once", |r| {
        let d = diag(r);
        (d.derivative_sign_changes > 1 || !d.single_interior_peak).then(|| {
            Evidence::at(
                r.mu,
                d.derivative_sign_changes as f64,
                "sign changes of theta' (or peak not interior)",
            )
        })
    });
    let peak = rowwise(table, 0.0, "theta_mu < 0 at the peak", |r| {
        (r.theta_mu_at_argmax >= 0.0).then(|| Evidence {
            mu: Some(r.mu),
            x: Some(r.argmax_x),
            value: r.theta_mu_at_argmax,
            note: "theta_mu is not negative at the maximum".into(),
        })
    });
    let max = monotone(table, Column::Max, Direction::Decreasing)?;
    Ok(combine("single peak", vec![shape, peak, max]))
}

fn bounds_verdict(table: &SweepTable, scale: f64) -> Verdict {
    let mut v = rowwise(table, 0.0, "min m+ < theta < max m", |r| match r.bounds {
        Status::Pass => None,
        _ => Some(Evidence::at(
            r.mu,
            r.bounds_margins.0.min(r.bounds_margins.1),
            "smallest bound margin",
        )),
    });
    v.detail.push_str(&format!(" (theta scale {scale:e})"));
    v
}

fn sandwich_verdict(table: &SweepTable) -> Verdict {
    let mut inconclusive = false;
    let mut v = rowwise(table, 0.0, "S < theta + mu theta_mu < M", |r| {
        let s = &diag(r).sandwich;
        match s.status {
            Status::Fail => Some(Evidence::at(
                r.mu,
                s.lower_margin.min(s.upper_margin),
                format!("sandwich violated at node {}", s.worst_node),
            )),
            Status::Inconclusive => {
                inconclusive = true;
                None
            }
            _ => None,
        }
    });
    v.tolerance = table
        .valid_rows()
        .filter_map(|r| r.diagnostics.as_ref())
        .fold(0.0, |t: f64, d| t.max(d.sandwich.slack));
    if inconclusive && v.status == Status::Pass {
        v.status = Status::Inconclusive;
    }
    v
}

fn identity_verdict(table: &SweepTable) -> Verdict {
    rowwise(table, IDENTITY_TOLERANCE, "relative defect of the energy identity", |r| {
        let d = diag(r).identity_defect;
        (d > IDENTITY_TOLERANCE).then(|| Evidence::at(r.mu, d, "relative identity defect"))
    })
}

fn cubic_moment_verdict(
    grid: &Grid,
    profile: &ResourceProfile,
    table: &SweepTable,
    config: &RunConfig,
) -> Result<Verdict> {
    let mono = monotone(table, Column::MassP3, Direction::Decreasing)?;
    let (lhs, rhs) = moment_derivative_check(
        grid,
        profile,
        MOMENT_FD_MU,
        MOMENT_FD_STEP,
        &config.continuation(),
    )?;
    let rel = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    let fd = Verdict {
        status: if rel <= MOMENT_FD_TOLERANCE {
            Status::Pass
        } else {
            Status::Fail
        },
        tolerance: MOMENT_FD_TOLERANCE,
        witnesses: vec![Evidence::at(MOMENT_FD_MU, rel, format!("fd {lhs:e} vs -3E {rhs:e}"))],
        detail: format!("relative gap {rel:e} in d/dmu of the cubic moment"),
    };
    Ok(combine("cubic moment", vec![mono, fd]))
}

fn order_verdict(grid: &Grid, profile: &ResourceProfile, config: &RunConfig) -> Result<Verdict> {
    let est = convergence_order(grid, profile, ORDER_LAMBDA0, ORDER_LEVELS, &config.continuation())?;
    let witnesses = est
        .lambdas
        .iter()
        .zip(&est.errors)
        .map(|(&l, &e)| Evidence::at(1.0 / l, e, "first-order expansion error"))
        .collect();
    let (lo, hi) = ORDER_WINDOW;
    let (status, detail) = match est.slope {
        Some(s) if (lo..=hi).contains(&s) => (Status::Pass, format!("remainder slope {s}")),
        Some(s) => (Status::Fail, format!("remainder slope {s} outside [{lo}, {hi}]")),
        None => (
            Status::Inconclusive,
            "expansion errors at the solver noise floor".to_string(),
        ),
    };
    Ok(Verdict {
        status,
        tolerance: hi - 2.0,
        witnesses,
        detail,
    })
}

fn large_mu_verdict(
    grid: &Grid,
    profile: &ResourceProfile,
    m0: bool,
    sweep_opts: &SweepOptions,
    config: &RunConfig,
) -> Result<Verdict> {
    let margin = config
        .hunt
        .as_ref()
        .map(|(_, o)| o.margin)
        .unwrap_or(loglab::HuntOptions::default().margin);
    if !m0 {
        return Ok(Verdict::not_applicable(margin, "(M0)"));
    }
    let data = match compute_asymptotics(grid, profile) {
        Ok(d) => d,
        Err(_) => return Ok(Verdict::not_applicable(margin, "positive mean")),
    };
    if !(data.min_c_plus_rho > margin) {
        return Ok(Verdict::not_applicable(
            margin,
            &format!("min(C + rho) > {margin:e}, got {:e}", data.min_c_plus_rho),
        ));
    }
    let table = run_sweep(grid, profile, &LARGE_DIFFUSION_MU, sweep_opts)?;
    let min = monotone(&table, Column::Min, Direction::Decreasing)?;
    let sign = rowwise(&table, 0.0, "theta_mu < 0 at every node", |r| {
        let d = diag(r);
        (d.theta_mu_max >= 0.0).then(|| Evidence::at(r.mu, d.theta_mu_max, "largest theta_mu"))
    });
    Ok(combine("minimum at large diffusion", vec![min, sign]))
}
