//! Resource functions `m(x)` on [0, 1] and the hypotheses they satisfy.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Cubic Hermite data: node positions with values and slopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteData {
    xs: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteData {
    /// Builds from `(x, m, m')` triples. Nodes must start at 0, end at 1 and
    /// increase strictly.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self> {
        if triples.len() < 2 {
            return Err(Error::InvalidProfile(
                "sampled profile needs at least two nodes".into(),
            ));
        }
        let xs: Vec<f64> = triples.iter().map(|t| t.0).collect();
        if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
            return Err(Error::InvalidProfile(
                "sampled nodes must start at 0 and end at 1".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile(
                "sampled nodes must be strictly increasing".into(),
            ));
        }
        if triples.iter().any(|t| !(t.1.is_finite() && t.2.is_finite())) {
            return Err(Error::InvalidProfile("sampled values must be finite".into()));
        }
        Ok(HermiteData {
            xs,
            values: triples.iter().map(|t| t.1).collect(),
            slopes: triples.iter().map(|t| t.2).collect(),
        })
    }

    pub fn triples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.xs.len()).map(|i| (self.xs[i], self.values[i], self.slopes[i]))
    }

    fn interval(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&xi| xi <= x);
        k.clamp(1, self.xs.len() - 1) - 1
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let k = self.interval(x);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let d = x1 - x0;
        let t = (x - x0) / d;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (s0, s1) = (self.slopes[k] * d, self.slopes[k + 1] * d);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * s0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * s1;
        let dvalue = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * s0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * s1;
        (value, dvalue / d)
    }
}

/// The resource function `m`, either a closed-form preset or sampled data.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResourceProfile {
    /// `c`
    Constant { c: f64 },
    /// `a + b x`
    Linear { a: f64, b: f64 },
    /// `c + A sin(2 pi x)`
    SineOffset { c: f64, amplitude: f64 },
    /// `c + A cos(pi x)`
    CosineOffset { c: f64, amplitude: f64 },
    /// `c + A sin(pi x)`
    SinglePeak { c: f64, amplitude: f64 },
    /// `x - s`
    ShiftedRamp { shift: f64 },
    /// Piecewise cubic Hermite interpolant.
    Sampled(HermiteData),
}

impl ResourceProfile {
    pub fn sampled(triples: &[(f64, f64, f64)]) -> Result<Self> {
        HermiteData::from_triples(triples).map(ResourceProfile::Sampled)
    }

    /// `sin(pi x)`.
    pub fn single_peak() -> Self {
        ResourceProfile::SinglePeak { c: 0.0, amplitude: 1.0 }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.value_unchecked(x))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.derivative_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: f64) -> f64 {
        use ResourceProfile::*;
        match self {
            Constant { c } => *c,
            Linear { a, b } => a + b * x,
            SineOffset { c, amplitude } => c + amplitude * (2.0 * PI * x).sin(),
            CosineOffset { c, amplitude } => c + amplitude * (PI * x).cos(),
            SinglePeak { c, amplitude } => c + amplitude * (PI * x).sin(),
            ShiftedRamp { shift } => x - shift,
            Sampled(data) => data.eval(x).0,
        }
    }

    pub(crate) fn derivative_unchecked(&self, x: f64) -> f64 {
        use ResourceProfile::*;
        match self {
            Constant { .. } => 0.0,
            Linear { b, .. } => *b,
            SineOffset { amplitude, .. } => 2.0 * PI * amplitude * (2.0 * PI * x).cos(),
            CosineOffset { amplitude, .. } => -PI * amplitude * (PI * x).sin(),
            SinglePeak { amplitude, .. } => PI * amplitude * (PI * x).cos(),
            ShiftedRamp { .. } => 1.0,
            Sampled(data) => data.eval(x).1,
        }
    }

    /// Positive part `max(m(x), 0)`.
    pub fn positive_part(&self, x: f64) -> Result<f64> {
        self.eval(x).map(|v| v.max(0.0))
    }

    /// The profile `kappa * m`.
    pub fn scaled(&self, kappa: f64) -> Self {
        use ResourceProfile::*;
        match self {
            Constant { c } => Constant { c: kappa * c },
            Linear { a, b } => Linear { a: kappa * a, b: kappa * b },
            SineOffset { c, amplitude } => SineOffset {
                c: kappa * c,
                amplitude: kappa * amplitude,
            },
            CosineOffset { c, amplitude } => CosineOffset {
                c: kappa * c,
                amplitude: kappa * amplitude,
            },
            SinglePeak { c, amplitude } => SinglePeak {
                c: kappa * c,
                amplitude: kappa * amplitude,
            },
            ShiftedRamp { shift } => Linear { a: -kappa * shift, b: kappa },
            Sampled(d) => Sampled(HermiteData {
                xs: d.xs.clone(),
                values: d.values.iter().map(|v| kappa * v).collect(),
                slopes: d.slopes.iter().map(|v| kappa * v).collect(),
            }),
        }
    }

    pub fn label(&self) -> String {
        use ResourceProfile::*;
        match self {
            Constant { c } => format!("constant({c})"),
            Linear { a, b } => format!("linear({a} + {b}x)"),
            SineOffset { c, amplitude } => format!("sine-offset({c} + {amplitude} sin 2pi x)"),
            CosineOffset { c, amplitude } => format!("cosine-offset({c} + {amplitude} cos pi x)"),
            SinglePeak { c, amplitude } => format!("single-peak({c} + {amplitude} sin pi x)"),
            ShiftedRamp { shift } => format!("shifted-ramp(x - {shift})"),
            Sampled(d) => format!("sampled({} nodes)", d.xs.len()),
        }
    }
}

fn check_domain(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { x })
    }
}

/// Direction in which `m+` is monotone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
    Neither,
}

/// A sample demonstrating why a hypothesis fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub value: f64,
    pub note: String,
}

impl Witness {
    fn new(x: f64, value: f64, note: impl Into<String>) -> Self {
        Witness { x, value, note: note.into() }
    }
}

/// Non-constant, C^1, non-negative mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M0Report {
    pub holds: bool,
    pub mean: f64,
    pub range: f64,
    pub witness: Option<Witness>,
}

/// Positive with `max m <= 2 min m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M1Report {
    pub holds: bool,
    pub max: f64,
    pub min: f64,
    pub witness: Option<Witness>,
}

/// `m+` monotone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M2Report {
    pub holds: bool,
    pub direction: Monotonicity,
    pub witness: Option<Witness>,
}

/// `m' > 0` left of a single interior point `rho` and `m' < 0` right of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M3Report {
    pub holds: bool,
    pub peak: Option<f64>,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub m0: M0Report,
    pub m1: M1Report,
    pub m2: M2Report,
    pub m3: M3Report,
}

/// Classifies `profile` against the four standing hypotheses using
/// `samples + 1` equispaced points.
pub fn classify_conditions(profile: &ResourceProfile, samples: usize) -> Result<ConditionReport> {
    if samples < 64 {
        return Err(Error::InvalidArgument(format!(
            "classification needs at least 64 samples, got {samples}"
        )));
    }
    let xs: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
    let m: Vec<f64> = xs.iter().map(|&x| profile.value_unchecked(x)).collect();
    let dm: Vec<f64> = xs.iter().map(|&x| profile.derivative_unchecked(x)).collect();

    let (imax, max) = extreme(&m, |a, b| a > b);
    let (imin, min) = extreme(&m, |a, b| a < b);
    let abs_max = max.abs().max(min.abs());

    let h = 1.0 / samples as f64;
    let mean = h * (m[1..samples].iter().sum::<f64>() + 0.5 * (m[0] + m[samples]));

    let m0 = {
        let range = max - min;
        let non_constant = range > 1e-12 * (1.0 + abs_max);
        let mean_ok = mean >= -1e-12;
        let witness = if !non_constant {
            Some(Witness::new(xs[imax], max, "m is constant"))
        } else if !mean_ok {
            Some(Witness::new(xs[imin], mean, "mean of m is negative"))
        } else {
            None
        };
        M0Report {
            holds: non_constant && mean_ok,
            mean,
            range,
            witness,
        }
    };

    let m1 = {
        let positive = min > 0.0;
        let ratio_ok = max <= 2.0 * min + 1e-12 * max.abs();
        let witness = if !positive {
            Some(Witness::new(xs[imin], min, "m is not positive"))
        } else if !ratio_ok {
            Some(Witness::new(xs[imax], max, format!("max m exceeds 2 min m = {}", 2.0 * min)))
        } else {
            None
        };
        M1Report {
            holds: positive && ratio_ok,
            max,
            min,
            witness,
        }
    };

    let m2 = {
        let tol = 1e-12 * (1.0 + abs_max);
        let plus: Vec<f64> = m.iter().map(|v| v.max(0.0)).collect();
        let drop = plus.windows(2).position(|w| w[1] < w[0] - tol);
        let rise = plus.windows(2).position(|w| w[1] > w[0] + tol);
        match (drop, rise) {
            (None, _) => M2Report {
                holds: true,
                direction: Monotonicity::NonDecreasing,
                witness: None,
            },
            (Some(_), None) => M2Report {
                holds: true,
                direction: Monotonicity::NonIncreasing,
                witness: None,
            },
            (Some(d), Some(r)) => {
                let i = d.max(r) + 1;
                M2Report {
                    holds: false,
                    direction: Monotonicity::Neither,
                    witness: Some(Witness::new(
                        xs[i],
                        plus[i],
                        "m+ both rises and falls; it reverses here",
                    )),
                }
            }
        }
    };

    let m3 = classify_single_peak(&xs, &dm);

    Ok(ConditionReport { m0, m1, m2, m3 })
}

fn extreme(v: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = 0;
    for i in 1..v.len() {
        if better(v[i], v[best]) {
            best = i;
        }
    }
    (best, v[best])
}

fn classify_single_peak(xs: &[f64], dm: &[f64]) -> M3Report {
    let tol = 1e-12 * (1.0 + dm.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    let sign = |v: f64| -> i8 {
        if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        }
    };
    let fail = |i: usize, note: &str| M3Report {
        holds: false,
        peak: None,
        witness: Some(Witness::new(xs[i], dm[i], note)),
    };

    let last = xs.len() - 1;
    if sign(dm[0]) != 1 {
        return fail(0, "m' is not positive at x = 0");
    }
    if sign(dm[last]) != -1 {
        return fail(last, "m' is not negative at x = 1");
    }
    // leading run of positive slopes
    let end_pos = (0..=last).find(|&i| sign(dm[i]) != 1).unwrap();
    let (start_neg, peak) = if sign(dm[end_pos]) == 0 {
        if sign(dm[end_pos + 1]) != -1 {
            return fail(end_pos + 1, "m' is flat over more than one sample at the peak");
        }
        (end_pos + 1, xs[end_pos])
    } else {
        // linear interpolation of the root between the last + and first - sample
        let (a, b) = (dm[end_pos - 1], dm[end_pos]);
        let t = a / (a - b);
        (end_pos, xs[end_pos - 1] + t * (xs[end_pos] - xs[end_pos - 1]))
    };
    if let Some(i) = (start_neg..=last).find(|&i| sign(dm[i]) != -1) {
        return fail(i, "m' changes sign more than once");
    }
    M3Report {
        holds: true,
        peak: Some(peak),
        witness: None,
    }
}
