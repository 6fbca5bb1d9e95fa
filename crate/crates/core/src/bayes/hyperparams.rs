use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Prior parameters: `κ ~ N(a, b²)`, `αᵢ ~ N(c, d²)`, `σ ~ U(θ₁, θ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl Hyperparams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, theta1: f64, theta2: f64) -> Result<Self> {
        let hp = Hyperparams {
            a,
            b,
            c,
            d,
            theta1,
            theta2,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.c, self.d, self.theta1, self.theta2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "hyperparameters must be finite: {self:?}"
            )));
        }
        if !(self.b > 0.0) || !(self.d > 0.0) {
            return Err(Error::invalid(format!(
                "prior sds must be positive (b = {}, d = {})",
                self.b, self.d
            )));
        }
        if !(self.theta1 > 0.0 && self.theta1 < self.theta2) {
            return Err(Error::invalid(format!(
                "need 0 < theta1 < theta2, got ({}, {})",
                self.theta1, self.theta2
            )));
        }
        Ok(())
    }

    /// `[a, b, c, d, θ₁, θ₂]`.
    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.theta1, self.theta2]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 6 {
            return Err(Error::invalid(format!(
                "expected 6 hyperparameters, got {}",
                v.len()
            )));
        }
        Hyperparams::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub const NAMES: [&'static str; 6] = ["a", "b", "c", "d", "theta1", "theta2"];
}

/// `key=value` lines, one per hyperparameter.
impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in Self::NAMES.iter().zip(self.to_array()) {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
impl FromStr for Hyperparams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 6] = [None; 6];
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got `{line}`")))?;
            let k = k.trim();
            let idx = Self::NAMES
                .iter()
                .position(|n| *n == k)
                .ok_or_else(|| parse_err(format!("unknown hyperparameter `{k}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad number `{}`", v.trim())))?;
            vals[idx] = Some(v);
        }
        let mut out = [0.0; 6];
        for (i, v) in vals.iter().enumerate() {
            out[i] = v.ok_or_else(|| {
                Error::invalid(format!("missing hyperparameter `{}`", Self::NAMES[i]))
            })?;
        }
        Hyperparams::from_slice(&out)
    }
}
