//! Result type shared by every similarity method.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Large statistic values indicate similar datasets.
    HighMeansSimilar,
    /// Small statistic values indicate similar datasets.
    LowMeansSimilar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Ok,
    Undefined(String),
    Infeasible(String),
    Error(String),
}

impl Status {
    /// Compact text form used in result tables, e.g. `undefined:null-variance-zero`.
    pub fn label(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Undefined(r) => format!("undefined:{r}"),
            Status::Infeasible(r) => format!("infeasible:{r}"),
            Status::Error(r) => format!("error:{r}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityOutcome {
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub direction: Direction,
    pub status: Status,
    pub diagnostics: BTreeMap<String, f64>,
    pub flags: Vec<String>,
}

impl SimilarityOutcome {
    pub fn ok(statistic: f64, p_value: Option<f64>, direction: Direction) -> Self {
        Self {
            statistic: Some(statistic),
            p_value,
            direction,
            status: Status::Ok,
            diagnostics: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn undefined(reason: &str, direction: Direction) -> Self {
        Self::failed(Status::Undefined(reason.into()), direction)
    }

    pub fn infeasible(reason: &str, direction: Direction) -> Self {
        Self::failed(Status::Infeasible(reason.into()), direction)
    }

    pub fn error(reason: impl Into<String>, direction: Direction) -> Self {
        Self::failed(Status::Error(reason.into()), direction)
    }

    fn failed(status: Status, direction: Direction) -> Self {
        Self {
            statistic: None,
            p_value: None,
            direction,
            status,
            diagnostics: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn with_diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.into(), value);
        self
    }

    pub fn with_flags(mut self, flags: &[String]) -> Self {
        for f in flags {
            if !self.flags.contains(f) {
                self.flags.push(f.clone());
            }
        }
        self
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().cdf(z)
}

/// Upper tail of a chi-square distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// `P(X >= successes)` for `X ~ Binomial(trials, prob)`.
pub fn binomial_upper(successes: u64, trials: u64, prob: f64) -> f64 {
    use statrs::distribution::{Binomial, DiscreteCDF};
    if successes == 0 {
        return 1.0;
    }
    Binomial::new(prob, trials)
        .map(|b| b.sf(successes - 1))
        .unwrap_or(f64::NAN)
}

/// `P(X <= successes)` for `X ~ Binomial(trials, prob)`.
pub fn binomial_lower(successes: u64, trials: u64, prob: f64) -> f64 {
    use statrs::distribution::{Binomial, DiscreteCDF};
    Binomial::new(prob, trials)
        .map(|b| b.cdf(successes))
        .unwrap_or(f64::NAN)
}
