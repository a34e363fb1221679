use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone non-decreasing weighting `Υ` applied to embedding row norms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFn {
    #[default]
    Constant,
    /// `x^exponent`, exponent >= 0.
    Power { exponent: f64 },
    /// `1 / (1 + exp(-scale (x - shift)))`, scale >= 0.
    Sigmoid { scale: f64, shift: f64 },
    /// `1` when `x >= threshold`, else `0`.
    Step { threshold: f64 },
}

impl WeightFn {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent >= 0.0) {
            return Err(Error::invalid(format!("power exponent {exponent} must be >= 0")));
        }
        Ok(WeightFn::Power { exponent })
    }

    pub fn sigmoid(scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0 && shift.is_finite()) {
            return Err(Error::invalid(format!("sigmoid scale {scale} must be >= 0")));
        }
        Ok(WeightFn::Sigmoid { scale, shift })
    }

    pub fn step(threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::invalid("step threshold must be finite"));
        }
        Ok(WeightFn::Step { threshold })
    }

    /// Constant for dense inputs, a fast-growing square for sparse ones.
    pub fn default_for(sparse: bool) -> Self {
        if sparse {
            WeightFn::Power { exponent: 2.0 }
        } else {
            WeightFn::Constant
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, WeightFn::Constant)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightFn::Constant => 1.0,
            WeightFn::Power { exponent } => x.powf(exponent),
            WeightFn::Sigmoid { scale, shift } => 1.0 / (1.0 + (-scale * (x - shift)).exp()),
            WeightFn::Step { threshold } => {
                if x >= threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFn::Constant => write!(f, "constant"),
            WeightFn::Power { exponent } => write!(f, "power:{exponent}"),
            WeightFn::Sigmoid { scale, shift } => write!(f, "sigmoid:{scale},{shift}"),
            WeightFn::Step { threshold } => write!(f, "step:{threshold}"),
        }
    }
}

/// Parses `constant`, `power:P`, `sigmoid:A,B` or `step:T`.
impl FromStr for WeightFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .filter(|a| !a.trim().is_empty())
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad weight parameter `{a}`")))
                })
                .collect()
        };
        match (kind.trim(), nums()?.as_slice()) {
            ("constant", []) => Ok(WeightFn::Constant),
            ("power", [p]) => WeightFn::power(*p),
            ("sigmoid", [a, b]) => WeightFn::sigmoid(*a, *b),
            ("step", [t]) => WeightFn::step(*t),
            _ => Err(Error::invalid(format!(
                "unrecognized weight function `{s}` (expected constant, power:P, sigmoid:A,B or step:T)"
            ))),
        }
    }
}

/// `Υ(‖x_l‖₂)` for every row `l` of `x`.
pub fn weights_from_embedding(x: ArrayView2<'_, f64>, w: &WeightFn) -> Vec<f64> {
    x.rows().into_iter().map(|row| w.eval(row.dot(&row).sqrt())).collect()
}
