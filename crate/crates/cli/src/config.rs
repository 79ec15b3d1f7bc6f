//! Run configuration: a TOML file with strictly checked keys.
//!
//! ```toml
//! n = 1025
//!
//! [resource]
//! preset = "sine-offset"   # constant | linear | shifted-ramp | sine-offset
//! c = 1.5                  # | cosine-offset | single-peak | sampled
//! amplitude = 0.4
//!
//! [mu]
//! min = 0.01               # or: value = 1.0
//! max = 100.0
//! count = 40
//! log = true
//!
//! [options]
//! parallel = false
//! moment_p = 4.0
//!
//! [hunt]
//! family = "cosine"
//! c = 1.0
//! amplitude_min = 0.0
//! amplitude_max = 4.0
//! steps = 9
//! ```

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use loglab::asymptotics::{HuntOptions, ProfileFamily};
use loglab::sweep::{default_mu_grid, log_spaced};
use loglab::{ContinuationOptions, NewtonOptions, ResourceProfile, SweepOptions};
use serde::Deserialize;

pub const DEFAULT_NODES: usize = 1025;
pub const MIN_NODES: usize = 65;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: Option<usize>,
    resource: ResourceSpec,
    mu: Option<MuSpec>,
    #[serde(default)]
    options: OptionsSpec,
    hunt: Option<HuntSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
enum ResourceSpec {
    Constant {
        c: f64,
    },
    Linear {
        a: f64,
        b: f64,
    },
    ShiftedRamp {
        shift: f64,
    },
    SineOffset {
        c: f64,
        amplitude: f64,
    },
    CosineOffset {
        c: f64,
        amplitude: f64,
    },
    SinglePeak {
        #[serde(default)]
        c: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `[x, m(x), m'(x)]` triples.
    Sampled {
        samples: Vec<[f64; 3]>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MuSpec {
    value: Option<f64>,
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    log: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsSpec {
    tolerance: Option<f64>,
    max_newton_iters: Option<usize>,
    parallel: Option<bool>,
    moment_p: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
enum HuntSpec {
    Cosine {
        c: f64,
        amplitude_min: f64,
        amplitude_max: f64,
        steps: usize,
        margin: Option<f64>,
        budget: Option<usize>,
    },
    Constant {
        values: Vec<f64>,
        margin: Option<f64>,
    },
}

/// Diffusion rates requested by the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum MuSelection {
    Single(f64),
    Grid(Vec<f64>),
    /// No `[mu]` section.
    Default,
}

impl MuSelection {
    /// Values for a sweep, falling back to the default grid.
    pub fn sweep_values(&self) -> Vec<f64> {
        match self {
            MuSelection::Single(mu) => vec![*mu],
            MuSelection::Grid(v) => v.clone(),
            MuSelection::Default => default_mu_grid(),
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub profile: ResourceProfile,
    pub mu: MuSelection,
    pub newton: NewtonOptions,
    pub parallel: bool,
    pub moment_p: Option<f64>,
    pub hunt: Option<(ProfileFamily, HuntOptions)>,
}

impl RunConfig {
    pub fn continuation(&self) -> ContinuationOptions {
        ContinuationOptions {
            newton: self.newton,
            ..ContinuationOptions::default()
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            continuation: self.continuation(),
            parallel: self.parallel,
            moment_p: self.moment_p,
        }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub parallel: bool,
}

pub fn load(path: &Path, overrides: Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: Overrides) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).context("malformed config")?;
    validate(raw, overrides)
}

fn finite(name: &str, v: f64) -> Result<f64> {
    ensure!(v.is_finite(), "{name} must be finite, got {v}");
    Ok(v)
}

fn validate(raw: RawConfig, overrides: Overrides) -> Result<RunConfig> {
    let n = overrides.n.or(raw.n).unwrap_or(DEFAULT_NODES);
    ensure!(
        n >= MIN_NODES && n % 2 == 1,
        "n must be odd and at least {MIN_NODES}, got {n}"
    );

    let profile = match raw.resource {
        ResourceSpec::Constant { c } => ResourceProfile::Constant { c: finite("c", c)? },
        ResourceSpec::Linear { a, b } => ResourceProfile::Linear {
            a: finite("a", a)?,
            b: finite("b", b)?,
        },
        ResourceSpec::ShiftedRamp { shift } => ResourceProfile::ShiftedRamp {
            shift: finite("shift", shift)?,
        },
        ResourceSpec::SineOffset { c, amplitude } => ResourceProfile::SineOffset {
            c: finite("c", c)?,
            amplitude: finite("amplitude", amplitude)?,
        },
        ResourceSpec::CosineOffset { c, amplitude } => ResourceProfile::CosineOffset {
            c: finite("c", c)?,
            amplitude: finite("amplitude", amplitude)?,
        },
        ResourceSpec::SinglePeak { c, amplitude } => ResourceProfile::SinglePeak {
            c: finite("c", c)?,
            amplitude: finite("amplitude", amplitude)?,
        },
        ResourceSpec::Sampled { samples } => {
            let triples: Vec<(f64, f64, f64)> =
                samples.iter().map(|s| (s[0], s[1], s[2])).collect();
            ResourceProfile::sampled(&triples)?
        }
    };

    let mu = match raw.mu {
        None => MuSelection::Default,
        Some(spec) => validate_mu(spec)?,
    };

    let mut newton = NewtonOptions::default();
    if let Some(tol) = raw.options.tolerance {
        ensure!(tol > 0.0 && tol.is_finite(), "tolerance must be positive, got {tol}");
        newton.tol = Some(tol);
    }
    if let Some(iters) = raw.options.max_newton_iters {
        ensure!(iters > 0, "max_newton_iters must be positive");
        newton.max_iters = iters;
    }
    if let Some(p) = raw.options.moment_p {
        ensure!(p > 0.0 && p.is_finite(), "moment_p must be positive, got {p}");
    }

    let hunt = raw.hunt.map(validate_hunt).transpose()?;

    Ok(RunConfig {
        n,
        profile,
        mu,
        newton,
        parallel: overrides.parallel || raw.options.parallel.unwrap_or(false),
        moment_p: raw.options.moment_p,
        hunt,
    })
}

fn validate_mu(spec: MuSpec) -> Result<MuSelection> {
    let positive = |name: &str, v: f64| -> Result<f64> {
        ensure!(v > 0.0 && v.is_finite(), "mu {name} must be positive, got {v}");
        Ok(v)
    };
    match spec {
        MuSpec {
            value: Some(v),
            min: None,
            max: None,
            count: None,
            log: None,
        } => Ok(MuSelection::Single(positive("value", v)?)),
        MuSpec {
            value: None,
            min: Some(lo),
            max: Some(hi),
            count,
            log,
        } => {
            let lo = positive("min", lo)?;
            let hi = positive("max", hi)?;
            let count = count.unwrap_or(40);
            ensure!(count >= 1, "mu count must be at least 1");
            ensure!(
                lo < hi || (lo == hi && count == 1),
                "mu range needs min < max, got [{lo}, {hi}]"
            );
            let values = if log.unwrap_or(true) {
                log_spaced(lo, hi, count)
            } else if count == 1 {
                vec![lo]
            } else {
                (0..count)
                    .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                    .collect()
            };
            Ok(MuSelection::Grid(values))
        }
        _ => bail!("[mu] takes either `value` or `min`/`max` (with optional `count`, `log`)"),
    }
}

fn validate_hunt(spec: HuntSpec) -> Result<(ProfileFamily, HuntOptions)> {
    let mut opts = HuntOptions::default();
    let family = match spec {
        HuntSpec::Cosine {
            c,
            amplitude_min,
            amplitude_max,
            steps,
            margin,
            budget,
        } => {
            ensure!(steps >= 1, "hunt steps must be at least 1");
            ensure!(
                amplitude_min <= amplitude_max,
                "hunt amplitude range is empty: [{amplitude_min}, {amplitude_max}]"
            );
            if let Some(m) = margin {
                opts.margin = m;
            }
            if let Some(b) = budget {
                ensure!(b >= 1, "hunt budget must be at least 1");
                opts.budget = b;
            }
            ProfileFamily::Cosine {
                c: finite("c", c)?,
                amplitude_min: finite("amplitude_min", amplitude_min)?,
                amplitude_max: finite("amplitude_max", amplitude_max)?,
                steps,
            }
        }
        HuntSpec::Constant { values, margin } => {
            ensure!(!values.is_empty(), "hunt values must not be empty");
            if let Some(m) = margin {
                opts.margin = m;
            }
            ProfileFamily::Constant { values }
        }
    };
    ensure!(
        opts.margin >= 0.0 && opts.margin.is_finite(),
        "hunt margin must be non-negative"
    );
    Ok((family, opts))
}
