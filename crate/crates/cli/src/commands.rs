use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use loglab::asymptotics::convergence_order;
use loglab::sweep::SweepRow;
use loglab::{
    compute_asymptotics, hunt_positive_sensitivity, run_sweep, solve_sensitivity,
    solve_with_continuation, Grid, ResourceProfile, Status,
};
use serde::Serialize;

use crate::config::{MuSelection, RunConfig};
use crate::output::{num, Artifacts, Csv};
use crate::verify::{run_verify, ORDER_LAMBDA0, ORDER_LEVELS};
use crate::Failure;

pub const SWEEP_HEADER: [&str; 13] = [
    "mu",
    "M",
    "S",
    "gap",
    "argmax_x",
    "argmin_x",
    "mass_p1",
    "mass_p2",
    "mass_p3",
    "grad_sq",
    "theta_mu_at_argmax",
    "newton_iters",
    "residual",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Sweep,
    Verify,
    Asymptotics,
    Hunt,
}

/// What a command produced: files to write and the exit status they imply.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub verdict_failed: bool,
}

fn solver(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Solver(e.into())
}

/// Checks command-specific requirements on the configuration, before any
/// computation starts.
pub fn precheck(command: Command, config: &RunConfig) -> Result<(), Failure> {
    match command {
        Command::Solve => single_mu(config).map(|_| ()),
        Command::Hunt if config.hunt.is_none() => {
            Err(Failure::Config(anyhow!("the hunt command needs a [hunt] section")))
        }
        _ => Ok(()),
    }
}

fn single_mu(config: &RunConfig) -> Result<f64, Failure> {
    match &config.mu {
        MuSelection::Single(mu) => Ok(*mu),
        MuSelection::Grid(v) if v.len() == 1 => Ok(v[0]),
        _ => Err(Failure::Config(anyhow!(
            "solve needs a single diffusion rate: set [mu] value = ..."
        ))),
    }
}

pub fn run(command: Command, config: &RunConfig) -> Result<Outcome, Failure> {
    precheck(command, config)?;
    let grid = Grid::new(config.n).map_err(|e| Failure::Config(e.into()))?;
    let mut artifacts = Artifacts::new();
    let mut verdict_failed = false;
    match command {
        Command::Solve => solve(&grid, config, &mut artifacts)?,
        Command::Sweep => sweep(&grid, config, &mut artifacts)?,
        Command::Verify => {
            let report = run_verify(config).map_err(solver)?;
            for (key, v) in report.verdicts.all() {
                log::info!("{key}: {:?} ({})", v.status, v.detail);
            }
            verdict_failed = report.verdicts.any_fail();
            artifacts.json("verify.json", &report).map_err(solver)?;
        }
        Command::Asymptotics => asymptotics(&grid, config, &mut artifacts)?,
        Command::Hunt => hunt(&grid, config, &mut artifacts)?,
    }
    Ok(Outcome {
        artifacts,
        verdict_failed,
    })
}

fn nodal(grid: &Grid, profile: &ResourceProfile) -> Result<Vec<f64>, Failure> {
    (0..grid.n())
        .map(|i| profile.eval(grid.x(i)))
        .collect::<loglab::Result<Vec<_>>>()
        .map_err(|e| Failure::Config(e.into()))
}

#[derive(Serialize)]
struct BoundsSummary {
    status: Status,
    lower: f64,
    upper: f64,
    lower_margin: f64,
    upper_margin: f64,
}

#[derive(Serialize)]
struct SolveSummary {
    profile: String,
    n: usize,
    mu: f64,
    #[serde(rename = "M")]
    max: f64,
    #[serde(rename = "S")]
    min: f64,
    residual: f64,
    tolerance: f64,
    iters: usize,
    bounds: BoundsSummary,
    warnings: Vec<String>,
}

fn solve(grid: &Grid, config: &RunConfig, out: &mut Artifacts) -> Result<(), Failure> {
    let mu = single_mu(config)?;
    let m = nodal(grid, &config.profile)?;
    let state = solve_with_continuation(grid, mu, &config.profile, &config.continuation())
        .map_err(solver)?;
    let sens = solve_sensitivity(grid, &state, &m).map_err(solver)?;
    let theta_prime = grid.derivative(&state.theta);

    let mut csv = Csv::new(&["x", "theta", "theta_prime", "theta_mu"]);
    for i in 0..grid.n() {
        csv.row(&[
            num(grid.x(i)),
            num(state.theta[i]),
            num(theta_prime[i]),
            num(sens.theta_mu[i]),
        ]);
    }
    out.text("solution.csv", csv.finish());

    let b = state.bounds;
    let summary = SolveSummary {
        profile: config.profile.label(),
        n: grid.n(),
        mu,
        max: state.max(),
        min: state.min(),
        residual: state.residual_norm,
        tolerance: state.tolerance,
        iters: state.newton_iters,
        bounds: BoundsSummary {
            status: b.status,
            lower: b.lower,
            upper: b.upper,
            lower_margin: b.lower_margin,
            upper_margin: b.upper_margin,
        },
        warnings: state.warnings.clone(),
    };
    out.json("summary.json", &summary).map_err(solver)
}

fn sweep_row_cells(r: &SweepRow) -> Vec<String> {
    vec![
        num(r.mu),
        num(r.max),
        num(r.min),
        num(r.gap),
        num(r.argmax_x),
        num(r.argmin_x),
        num(r.mass_p1),
        num(r.mass_p2),
        num(r.mass_p3),
        num(r.grad_sq),
        num(r.theta_mu_at_argmax),
        r.newton_iters.to_string(),
        num(r.residual),
    ]
}

const SWEEP_PLOT: &str = "\
set datafile separator ','
set key autotitle columnhead
set logscale x
set xlabel 'mu'
set multiplot layout 2,1
plot 'sweep.csv' using 1:2 with linespoints, \\
     '' using 1:3 with linespoints, \\
     '' using 1:4 with linespoints
plot 'sweep.csv' using 1:7 with linespoints, \\
     '' using 1:8 with linespoints, \\
     '' using 1:9 with linespoints
unset multiplot
";

fn sweep(grid: &Grid, config: &RunConfig, out: &mut Artifacts) -> Result<(), Failure> {
    let mu_values = config.mu.sweep_values();
    let table =
        run_sweep(grid, &config.profile, &mu_values, &config.sweep_options()).map_err(solver)?;
    let mut csv = Csv::new(&SWEEP_HEADER);
    for r in &table.rows {
        if let Some(f) = &r.failure {
            log::error!("row mu = {} failed: {f}", r.mu);
        }
        csv.row(&sweep_row_cells(r));
    }
    out.text("sweep.csv", csv.finish());
    out.text("sweep.gp", SWEEP_PLOT.to_string());
    if let Some(p) = config.moment_p {
        let mut csv = Csv::new(&["mu", "p", "mass_p"]);
        for r in &table.rows {
            csv.row(&[num(r.mu), num(p), num(r.mass_p.unwrap_or(f64::NAN))]);
        }
        out.text("moments.csv", csv.finish());
    }
    Ok(())
}

#[derive(Serialize)]
struct AsymptoticsSummary {
    profile: String,
    n: usize,
    m_bar: f64,
    c_of_m: f64,
    c_cross_check: f64,
    min_c_plus_rho: f64,
    argmin_c_plus_rho_x: f64,
    remainder_slope: Option<f64>,
    lambdas: Vec<f64>,
    errors: Vec<f64>,
}

fn asymptotics(grid: &Grid, config: &RunConfig, out: &mut Artifacts) -> Result<(), Failure> {
    let data = compute_asymptotics(grid, &config.profile).map_err(solver)?;
    let order = convergence_order(
        grid,
        &config.profile,
        ORDER_LAMBDA0,
        ORDER_LEVELS,
        &config.continuation(),
    )
    .map_err(solver)?;
    let c_plus_rho = data.c_plus_rho();
    let mut csv = Csv::new(&["x", "rho_m", "c_plus_rho"]);
    for i in 0..grid.n() {
        csv.row(&[num(grid.x(i)), num(data.rho_m[i]), num(c_plus_rho[i])]);
    }
    out.text("rho_m.csv", csv.finish());
    let summary = AsymptoticsSummary {
        profile: config.profile.label(),
        n: grid.n(),
        m_bar: data.m_bar,
        c_of_m: data.c_of_m,
        c_cross_check: data.c_cross_check,
        min_c_plus_rho: data.min_c_plus_rho,
        argmin_c_plus_rho_x: grid.x(data.argmin_c_plus_rho),
        remainder_slope: order.slope,
        lambdas: order.lambdas,
        errors: order.errors,
    };
    out.json("asymptotics.json", &summary).map_err(solver)
}

#[derive(Serialize)]
struct HuntReport {
    family: String,
    margin: f64,
    budget: usize,
    n: usize,
    result: loglab::HuntResult,
}

fn hunt(grid: &Grid, config: &RunConfig, out: &mut Artifacts) -> Result<(), Failure> {
    let (family, mut opts) = config
        .hunt
        .clone()
        .ok_or_else(|| Failure::Config(anyhow!("the hunt command needs a [hunt] section")))?;
    opts.parallel = config.parallel;
    let result = hunt_positive_sensitivity(grid, &family, &opts);
    match &result.found {
        Some(c) => log::info!("hunt found {} (parameter {})", c.profile.label(), c.parameter),
        None => log::info!("hunt found no qualifying profile"),
    }
    let report = HuntReport {
        family: format!("{family:?}"),
        margin: opts.margin,
        budget: opts.budget,
        n: grid.n(),
        result,
    };
    out.json("hunt.json", &report).map_err(solver)
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'static str,
    version: &'static str,
    command: Command,
    config: String,
    n: usize,
    parallel: bool,
    seedless: bool,
    moment_p: Option<f64>,
    files: &'a [String],
}

/// Sidecar describing the run; data files stay free of run metadata.
pub fn run_meta(
    command: Command,
    config_path: &Path,
    config: &RunConfig,
    seedless: bool,
    files: &[String],
) -> Result<String> {
    let meta = RunMeta {
        tool: "loglab",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: config_path.display().to_string(),
        n: config.n,
        parallel: config.parallel,
        seedless,
        moment_p: config.moment_p,
        files,
    };
    let mut s = serde_json::to_string_pretty(&meta)?;
    s.push('\n');
    Ok(s)
}

pub fn default_out_dir() -> PathBuf {
    PathBuf::from("loglab-out")
}
