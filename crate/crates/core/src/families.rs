//! Generator families: the function `L` and closed-form choices of `G`.
//!
//! Everything here is also exposed in the tail variable `σ = 1 - u`, where
//! the tables of the constructions live.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::support::SupportFunction;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Serializable parameters of the built-in `L` families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LSpec {
    /// `L(u) = (1 - u) / k`.
    Linear { k: f64 },
    /// `L(u) = (1 - u)(1 - a u)`.
    Quadratic { a: f64 },
}

#[derive(Clone)]
enum LKind {
    Linear { k: f64 },
    Quadratic { a: f64 },
    Gap(SupportFunction),
    Custom { eval: RealFn, derivative: RealFn },
}

/// A positive function `L` on `[0, 1)` whose reciprocal integrates to
/// infinity at 1. It determines `G` through `G'(v)/G(v) = 1/L(1 - v)`.
#[derive(Clone)]
pub struct LFunction {
    kind: LKind,
}

impl fmt::Debug for LFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LKind::Linear { k } => write!(f, "LFunction::Linear {{ k: {k} }}"),
            LKind::Quadratic { a } => write!(f, "LFunction::Quadratic {{ a: {a} }}"),
            LKind::Gap(h) => write!(f, "LFunction::Gap({h:?})"),
            LKind::Custom { .. } => write!(f, "LFunction::Custom"),
        }
    }
}

impl LFunction {
    pub fn linear(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("linear L needs k > 0, got {k}")));
        }
        Ok(Self {
            kind: LKind::Linear { k },
        })
    }

    /// `(1 - u)(1 - a u)`; positive on `[0, 1)` exactly when `a <= 1`.
    pub fn quadratic(a: f64) -> Result<Self> {
        if !(a <= 1.0 && a.is_finite()) {
            return Err(Error::Domain(format!("quadratic L needs a <= 1, got {a}")));
        }
        Ok(Self {
            kind: LKind::Quadratic { a },
        })
    }

    /// `L(u) = H(u) - u`, the choice that reproduces the main construction.
    pub fn support_gap(h: &SupportFunction) -> Self {
        Self {
            kind: LKind::Gap(h.clone()),
        }
    }

    pub fn custom<E, D>(eval: E, derivative: D) -> Self
    where
        E: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: LKind::Custom {
                eval: Arc::new(eval),
                derivative: Arc::new(derivative),
            },
        }
    }

    pub fn from_spec(spec: &LSpec) -> Result<Self> {
        match *spec {
            LSpec::Linear { k } => Self::linear(k),
            LSpec::Quadratic { a } => Self::quadratic(a),
        }
    }

    pub fn spec(&self) -> Option<LSpec> {
        match self.kind {
            LKind::Linear { k } => Some(LSpec::Linear { k }),
            LKind::Quadratic { a } => Some(LSpec::Quadratic { a }),
            _ => None,
        }
    }

    /// The slope parameter of the linear family.
    pub fn linear_k(&self) -> Option<f64> {
        match self.kind {
            LKind::Linear { k } => Some(k),
            _ => None,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            LKind::Custom { eval, .. } => eval(u),
            LKind::Gap(h) => h.gap(u),
            _ => self.tail(1.0 - u),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match &self.kind {
            LKind::Custom { derivative, .. } => derivative(u),
            _ => self.tail_derivative(1.0 - u),
        }
    }

    /// `L(1 - σ)`, accurate for small `σ`.
    pub fn tail(&self, s: f64) -> f64 {
        match &self.kind {
            LKind::Linear { k } => s / k,
            LKind::Quadratic { a } => s * (1.0 - a + a * s),
            LKind::Gap(h) => h.tail_gap(s),
            LKind::Custom { eval, .. } => eval(1.0 - s),
        }
    }

    /// `L'(1 - σ)`.
    pub fn tail_derivative(&self, s: f64) -> f64 {
        match &self.kind {
            LKind::Linear { k } => -1.0 / k,
            LKind::Quadratic { a } => -1.0 + a - 2.0 * a * s,
            LKind::Gap(h) => h.inverse_derivative(s) - 1.0,
            LKind::Custom { derivative, .. } => derivative(1.0 - s),
        }
    }
}

/// Closed-form choices of `G`, normalized so that `G(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GFamily {
    /// `G(v) = v`.
    Independence,
    /// `G(v) = v^k`.
    Power { k: f64 },
    /// `G(v) = sin(π v / 2)`.
    Sine,
}

impl GFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GFamily::Power { k } if !(k > 0.0 && k.is_finite()) => {
                Err(Error::Domain(format!("power G needs k > 0, got {k}")))
            }
            _ => Ok(()),
        }
    }

    /// `-ln G(v)`.
    pub fn neg_log(&self, v: f64) -> f64 {
        match *self {
            GFamily::Independence => -v.ln(),
            GFamily::Power { k } => -k * v.ln(),
            GFamily::Sine => -(std::f64::consts::FRAC_PI_2 * v).sin().ln(),
        }
    }

    /// `G(v)/G'(v)`, which equals `L(1 - v)`.
    pub fn log_scale(&self, v: f64) -> f64 {
        match *self {
            GFamily::Independence => v,
            GFamily::Power { k } => v / k,
            GFamily::Sine => (std::f64::consts::FRAC_PI_2 * v).tan() / std::f64::consts::FRAC_PI_2,
        }
    }

    /// `L'(1 - v)` for the `L` induced by this `G`.
    pub fn l_prime_tail(&self, v: f64) -> f64 {
        match *self {
            GFamily::Independence => -1.0,
            GFamily::Power { k } => -1.0 / k,
            GFamily::Sine => {
                let c = (std::f64::consts::FRAC_PI_2 * v).cos();
                -1.0 / (c * c)
            }
        }
    }

    /// `1 + L'(1 - v)`, free of cancellation.
    pub fn one_plus_l_prime_tail(&self, v: f64) -> f64 {
        match *self {
            GFamily::Independence => 0.0,
            GFamily::Power { k } => 1.0 - 1.0 / k,
            GFamily::Sine => -(std::f64::consts::FRAC_PI_2 * v).tan().powi(2),
        }
    }

    /// Solves `-ln G(v) = m` in closed form.
    pub fn inverse_neg_log(&self, m: f64) -> f64 {
        match *self {
            GFamily::Independence => (-m).exp(),
            GFamily::Power { k } => (-m / k).exp(),
            GFamily::Sine => (-m).exp().asin() / std::f64::consts::FRAC_PI_2,
        }
    }
}
