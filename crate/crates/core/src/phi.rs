//! Convex cost functions `φ : [0, ∞) → [0, ∞]` with declared boundary data.
//!
//! `φ(0)` and the recession factor `φ∞ = lim φ(t)/t` are declared, never
//! inferred from samples. `+∞` is carried as `f64::INFINITY`; products with
//! a zero weight use [`weighted`], which follows the `0 · ∞ = 0` convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Recession factor of φ: only the two non-linear growth regimes are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recession {
    Zero,
    Infinite,
}

impl Recession {
    pub fn value(self) -> f64 {
        match self {
            Recession::Zero => 0.0,
            Recession::Infinite => f64::INFINITY,
        }
    }
}

/// `weight · value` with `0 · ∞ = 0`.
pub fn weighted(weight: f64, value: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiKind {
    /// `t^(-2r)`, `r > 0`.
    PowerInverse { r: f64 },
    /// `t^(2r)`, `r > 1/2`.
    Power { r: f64 },
    /// `(t - a)^2 + b`, `a, b > 0`.
    Shifted { a: f64, b: f64 },
    /// `exp(1 / t^2)`.
    Heat,
    /// User expression in `t`.
    Custom { expr: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexFn {
    kind: PhiKind,
    value_at_zero: f64,
    recession: Recession,
}

impl ConvexFn {
    pub fn power_inverse(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("power_inverse needs r > 0, got {r}")));
        }
        Ok(ConvexFn {
            kind: PhiKind::PowerInverse { r },
            value_at_zero: f64::INFINITY,
            recession: Recession::Zero,
        })
    }

    pub fn power(r: f64) -> Result<Self> {
        if !(r > 0.5 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("power needs r > 1/2, got {r}")));
        }
        Ok(ConvexFn {
            kind: PhiKind::Power { r },
            value_at_zero: 0.0,
            recession: Recession::Infinite,
        })
    }

    pub fn shifted(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "shifted needs a, b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(ConvexFn {
            kind: PhiKind::Shifted { a, b },
            value_at_zero: a * a + b,
            recession: Recession::Infinite,
        })
    }

    pub fn heat() -> Self {
        ConvexFn {
            kind: PhiKind::Heat,
            value_at_zero: f64::INFINITY,
            recession: Recession::Zero,
        }
    }

    /// Custom `φ(t)` from an expression in `t`. The declared data are
    /// trusted; use [`ConvexFn::check_hypotheses`] for warnings.
    pub fn custom(expr: &str, value_at_zero: f64, recession: Recession) -> Result<Self> {
        if !(value_at_zero >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "value_at_zero must be >= 0 or inf, got {value_at_zero}"
            )));
        }
        Ok(ConvexFn {
            kind: PhiKind::Custom {
                expr: Expr::parse_with_var(expr, "t")?,
            },
            value_at_zero,
            recession,
        })
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    pub fn recession(&self) -> Recession {
        self.recession
    }

    /// `φ(t)` for `t ≥ 0`; `t = +∞` is not accepted.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t.is_infinite() {
            return Err(Error::InvalidInput(format!("φ is defined on [0, ∞), got t = {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// `φ(t)` without the domain check; `t` must be finite and non-negative.
    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.value_at_zero;
        }
        let v = match &self.kind {
            PhiKind::PowerInverse { r } => t.powf(-2.0 * r),
            PhiKind::Power { r } => t.powf(2.0 * r),
            PhiKind::Shifted { a, b } => (t - a) * (t - a) + b,
            PhiKind::Heat => (1.0 / (t * t)).exp(),
            PhiKind::Custom { expr } => expr.eval_raw(t),
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Sampled checks of the standing hypotheses: non-negativity, midpoint
    /// convexity with a strictness witness, and the declared recession.
    /// Returns human-readable warnings; an empty list means no evidence of
    /// a violation.
    pub fn check_hypotheses(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let samples: Vec<f64> = (1..=400).map(|i| 1e-2 * 1.03f64.powi(i)).collect();
        if samples.iter().any(|&t| self.eval_unchecked(t) < 0.0) {
            warnings.push("φ takes negative values".to_string());
        }
        let mut strict = false;
        for (i, &a) in samples.iter().enumerate().step_by(7) {
            for &b in samples[i + 1..].iter().step_by(11) {
                let (fa, fb) = (self.eval_unchecked(a), self.eval_unchecked(b));
                if !(fa.is_finite() && fb.is_finite()) {
                    continue;
                }
                let fm = self.eval_unchecked(0.5 * (a + b));
                let chord = 0.5 * (fa + fb);
                let slack = 1e-12 * chord.abs().max(1.0);
                if fm > chord + slack {
                    warnings.push(format!("midpoint convexity fails between t = {a} and t = {b}"));
                    return warnings;
                }
                if fm < chord - slack {
                    strict = true;
                }
            }
        }
        if !strict {
            warnings.push("no strict convexity witness found".to_string());
        }
        let big = 1e6;
        let ratio = self.eval_unchecked(big) / big;
        match self.recession {
            Recession::Zero if !(ratio < 1.0) => {
                warnings.push(format!("declared zero recession but φ(T)/T = {ratio} at T = 1e6"))
            }
            Recession::Infinite if !(ratio >= RECESSION_INFINITE_RATIO) => {
                warnings.push(format!("declared infinite recession but φ(T)/T = {ratio} at T = 1e6"))
            }
            _ => {}
        }
        if self.recession == Recession::Zero {
            let decreasing = samples
                .windows(2)
                .all(|w| self.eval_unchecked(w[1]) <= self.eval_unchecked(w[0]) * (1.0 + 1e-12));
            if !decreasing {
                warnings.push("zero recession requires a non-increasing φ".to_string());
            }
        }
        warnings
    }
}

/// Threshold on `φ(T)/T` at `T = 1e6` accepted as evidence of infinite
/// recession. `φ(t) = t²` gives exactly `1e6`.
pub const RECESSION_INFINITE_RATIO: f64 = 1e5;

/// JSON `phi` block.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhiConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_at_zero: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recession: Option<String>,
}

impl PhiConfig {
    pub fn build(&self) -> Result<ConvexFn> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("phi kind `{}` needs `{name}`", self.kind)))
        };
        match self.kind.as_str() {
            "power_inverse" => ConvexFn::power_inverse(need(self.r, "r")?),
            "power" => ConvexFn::power(need(self.r, "r")?),
            "shifted" => ConvexFn::shifted(need(self.a, "a")?, need(self.b, "b")?),
            "heat" => Ok(ConvexFn::heat()),
            "custom" => {
                let expr = self
                    .expr
                    .as_deref()
                    .ok_or_else(|| Error::Config("custom phi needs `expr`".into()))?;
                let value_at_zero = match &self.value_at_zero {
                    Some(serde_json::Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
                    Some(serde_json::Value::String(s)) if s == "inf" => f64::INFINITY,
                    _ => {
                        return Err(Error::Config(
                            "custom phi needs `value_at_zero` (number or \"inf\")".into(),
                        ))
                    }
                };
                let recession = match self.recession.as_deref() {
                    Some("zero") => Recession::Zero,
                    Some("infinite") => Recession::Infinite,
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "recession must be `zero` or `infinite` (linear growth is not supported), got `{other}`"
                        )))
                    }
                    None => return Err(Error::Config("custom phi needs `recession`".into())),
                };
                ConvexFn::custom(expr, value_at_zero, recession)
            }
            other => Err(Error::Config(format!("unknown phi kind `{other}`"))),
        }
    }
}

/// A preset family of cost functions and the parameters it reads.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub formula: &'static str,
    pub params: &'static [&'static str],
}

impl Preset {
    pub fn build(&self, params: &PhiConfig) -> Result<ConvexFn> {
        PhiConfig {
            kind: self.name.to_string(),
            ..params.clone()
        }
        .build()
    }
}

/// The preset families; `power` with constant coefficients `p = w = 1`,
/// `q = 0` is the optimal location problem on interval lengths.
pub fn presets() -> &'static [Preset] {
    &[
        Preset {
            name: "power_inverse",
            formula: "t^(-2r)",
            params: &["r"],
        },
        Preset {
            name: "power",
            formula: "t^(2r)",
            params: &["r"],
        },
        Preset {
            name: "shifted",
            formula: "(t - a)^2 + b",
            params: &["a", "b"],
        },
        Preset {
            name: "heat",
            formula: "exp(1/t^2)",
            params: &[],
        },
        Preset {
            name: "custom",
            formula: "expr(t)",
            params: &["expr", "value_at_zero", "recession"],
        },
    ]
}
