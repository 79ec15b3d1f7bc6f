use serde::Serialize;

/// Outcome of a property check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The hypotheses of the statement do not hold for the input.
    NotApplicable,
    /// A comparison fell within the rounding slack.
    Inconclusive,
}

impl Status {
    pub fn is_pass(self) -> bool {
        self == Status::Pass
    }

    /// Combines two outcomes: any failure wins, then inconclusive.
    pub fn and(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (NotApplicable, s) | (s, NotApplicable) => s,
            (Pass, Pass) => Pass,
        }
    }

    /// Classifies `value > 0` with a symmetric rounding slack.
    pub fn positive(value: f64, slack: f64) -> Status {
        if value > slack {
            Status::Pass
        } else if value >= -slack {
            Status::Inconclusive
        } else {
            Status::Fail
        }
    }
}
