//! Support curves `v = H(u)` bounding the density support from above.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::normal::{normal_cdf, quantile_unchecked};
use crate::numerics::quadrature::{integrate, QuadratureConfig};
use crate::numerics::roots::find_root;
use crate::EPSILON;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Serializable parameters of the built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SupportSpec {
    GaussianShift { delta: f64 },
    PiecewiseLinear { u0: f64 },
}

#[derive(Clone)]
enum Kind {
    GaussianShift { delta: f64 },
    PiecewiseLinear,
    Custom { eval: RealFn, inverse: RealFn, derivative: RealFn },
}

/// A strictly increasing bijection `H` of `[0,1]` with `H(u) >= u` whose
/// hypograph is symmetric about the opposite diagonal.
#[derive(Clone)]
pub struct SupportFunction {
    kind: Kind,
    u0: f64,
}

impl fmt::Debug for SupportFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match &self.kind {
            Kind::GaussianShift { delta } => format!("gaussian_shift(delta = {delta})"),
            Kind::PiecewiseLinear => "piecewise_linear".to_string(),
            Kind::Custom { .. } => "custom".to_string(),
        };
        f.debug_struct("SupportFunction").field("family", &family).field("u0", &self.u0).finish()
    }
}

impl SupportFunction {
    /// `H(u) = Φ(Φ⁻¹(u) + Δ)`, the support of a normal pair with `Y <= X + Δ`.
    pub fn gaussian_shift(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("gaussian shift needs delta > 0, got {delta}")));
        }
        Ok(Self {
            kind: Kind::GaussianShift { delta },
            u0: normal_cdf(-0.5 * delta),
        })
    }

    /// Two-segment linear `H` through `(0,0)`, `(u0, 1-u0)` and `(1,1)`.
    pub fn piecewise_linear(u0: f64) -> Result<Self> {
        if !(u0 > 0.0 && u0 < 0.5) {
            return Err(Error::Domain(format!("piecewise linear support needs u0 in (0, 1/2), got {u0}")));
        }
        Ok(Self {
            kind: Kind::PiecewiseLinear,
            u0,
        })
    }

    /// A user-supplied curve. When `u0` is absent it is located as the root
    /// of `H(u) - (1 - u)` on `[eps, 1/2]`; if there is none it is stored as
    /// NaN and [`validate_support`] reports it.
    pub fn custom<E, I, D>(eval: E, inverse: I, derivative: D, u0: Option<f64>) -> Self
    where
        E: Fn(f64) -> f64 + Send + Sync + 'static,
        I: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let u0 = u0.unwrap_or_else(|| find_root(|u| eval(u) - (1.0 - u), EPSILON, 0.5, 1e-15).unwrap_or(f64::NAN));
        Self {
            kind: Kind::Custom {
                eval: Arc::new(eval),
                inverse: Arc::new(inverse),
                derivative: Arc::new(derivative),
            },
            u0,
        }
    }

    pub fn from_spec(spec: &SupportSpec) -> Result<Self> {
        match *spec {
            SupportSpec::GaussianShift { delta } => Self::gaussian_shift(delta),
            SupportSpec::PiecewiseLinear { u0 } => Self::piecewise_linear(u0),
        }
    }

    /// Parameters of a built-in family; `None` for custom curves.
    pub fn spec(&self) -> Option<SupportSpec> {
        match self.kind {
            Kind::GaussianShift { delta } => Some(SupportSpec::GaussianShift { delta }),
            Kind::PiecewiseLinear => Some(SupportSpec::PiecewiseLinear { u0: self.u0 }),
            Kind::Custom { .. } => None,
        }
    }

    pub fn family_tag(&self) -> &'static str {
        match self.kind {
            Kind::GaussianShift { .. } => "gaussian_shift",
            Kind::PiecewiseLinear => "piecewise_linear",
            Kind::Custom { .. } => "custom",
        }
    }

    /// The shift `Δ` of the Gaussian family.
    pub fn delta(&self) -> Option<f64> {
        match self.kind {
            Kind::GaussianShift { delta } => Some(delta),
            _ => None,
        }
    }

    /// Crossing point with the opposite diagonal: `H(u0) = 1 - u0`.
    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::GaussianShift { delta } => {
                if u <= 0.0 {
                    0.0
                } else if u >= 1.0 {
                    1.0
                } else {
                    normal_cdf(quantile_unchecked(u) + delta)
                }
            }
            Kind::PiecewiseLinear => {
                let u0 = self.u0;
                if u <= u0 {
                    (1.0 - u0) * u / u0
                } else {
                    1.0 - u0 * (1.0 - u) / (1.0 - u0)
                }
            }
            Kind::Custom { eval, .. } => eval(u),
        }
    }

    pub fn inverse(&self, v: f64) -> f64 {
        match &self.kind {
            Kind::GaussianShift { delta } => {
                if v <= 0.0 {
                    0.0
                } else if v >= 1.0 {
                    1.0
                } else {
                    normal_cdf(quantile_unchecked(v) - delta)
                }
            }
            Kind::PiecewiseLinear => {
                let u0 = self.u0;
                if v <= 1.0 - u0 {
                    v * u0 / (1.0 - u0)
                } else {
                    1.0 - (1.0 - v) * (1.0 - u0) / u0
                }
            }
            Kind::Custom { inverse, .. } => inverse(v),
        }
    }

    /// `H'(u)`; at the kink of the piecewise-linear family the left slope.
    pub fn derivative(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::GaussianShift { delta } => (-delta * (quantile_unchecked(u) + 0.5 * delta)).exp(),
            Kind::PiecewiseLinear => {
                let u0 = self.u0;
                if u <= u0 {
                    (1.0 - u0) / u0
                } else {
                    u0 / (1.0 - u0)
                }
            }
            Kind::Custom { derivative, .. } => derivative(u),
        }
    }

    /// `(H⁻¹)'(v)`.
    pub fn inverse_derivative(&self, v: f64) -> f64 {
        match &self.kind {
            Kind::GaussianShift { delta } => (delta * (quantile_unchecked(v) - 0.5 * delta)).exp(),
            Kind::PiecewiseLinear => {
                let u0 = self.u0;
                if v <= 1.0 - u0 {
                    u0 / (1.0 - u0)
                } else {
                    (1.0 - u0) / u0
                }
            }
            Kind::Custom { derivative, .. } => 1.0 / derivative(self.inverse(v)),
        }
    }

    /// `H(u) - u`, evaluated as `s - H⁻¹(s)` with `s = 1 - u` above 1/2 so
    /// the gap keeps its relative accuracy as `u -> 1`.
    pub fn gap(&self, u: f64) -> f64 {
        if u <= 0.5 {
            self.eval(u) - u
        } else {
            self.tail_gap(1.0 - u)
        }
    }

    /// `H(1-s) - (1-s)` as a function of the tail variable `s`.
    pub fn tail_gap(&self, s: f64) -> f64 {
        if s <= 0.5 {
            s - self.inverse(s)
        } else {
            self.gap(1.0 - s)
        }
    }
}

/// Checks the hypotheses a support curve must satisfy on a probe grid of
/// `n_probe` interior points. Returns one message per failed check.
pub fn validate_support(h: &SupportFunction, n_probe: usize) -> Vec<String> {
    let mut out = Vec::new();
    let n = n_probe.max(100);
    let u0 = h.u0();
    if !(u0 > 0.0 && u0 < 0.5) {
        out.push(format!("u0 undefined: no crossing H(u) = 1 - u with u in (0, 1/2) (got {u0})"));
    } else if (h.eval(u0) - (1.0 - u0)).abs() > 1e-12 {
        out.push(format!("H(u0) = {} differs from 1 - u0 = {}", h.eval(u0), 1.0 - u0));
    }

    let probes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let values: Vec<f64> = probes.iter().map(|&u| h.eval(u)).collect();

    if let Some((u, y)) = probes.iter().zip(&values).find(|(_, y)| !y.is_finite()) {
        out.push(format!("H({u}) = {y} is not finite"));
        return out;
    }
    let worst_sym = probes
        .iter()
        .map(|&u| ((h.eval(u) + h.inverse(1.0 - u) - 1.0).abs(), u))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    if worst_sym.0 > 1e-8 {
        out.push(format!(
            "symmetry H(u) + H^-1(1-u) = 1 violated by {:e} at u = {}",
            worst_sym.0, worst_sym.1
        ));
    }
    if let Some((u, y)) = probes.iter().zip(&values).find(|(&u, &y)| y < u - 1e-12) {
        out.push(format!("H(u) >= u fails at u = {u} (H = {y})"));
    }
    if let Some(w) = probes.windows(2).zip(values.windows(2)).find(|(_, y)| y[1] <= y[0]) {
        out.push(format!("H not strictly increasing on [{}, {}]", w.0[0], w.0[1]));
    }
    if let Some(&v) = probes.iter().find(|&&v| (h.eval(h.inverse(v)) - v).abs() > 1e-9) {
        out.push(format!("inverse is not the functional inverse at v = {v}"));
    }

    let step = 1e-6;
    for &u in &probes {
        if u - step <= 0.0 || u + step >= 1.0 {
            continue;
        }
        let d = h.derivative(u);
        let tol = 1e-5 * d.abs().max(1.0);
        let central = (h.eval(u + step) - h.eval(u - step)) / (2.0 * step);
        if (central - d).abs() <= tol {
            continue;
        }
        // Accept a matching one-sided quotient at kinks.
        let left = (h.eval(u) - h.eval(u - step)) / step;
        let right = (h.eval(u + step) - h.eval(u)) / step;
        if (left - d).abs() > tol && (right - d).abs() > tol {
            out.push(format!("H'({u}) = {d} disagrees with finite difference {central}"));
            break;
        }
    }

    if out.is_empty() {
        out.extend(check_gap_integral(|s| h.tail_gap(s), 1.0 - u0));
    }
    out
}

/// `∫_b^a dσ / g(σ)` for a tail gap `g`, integrated in `x = ln σ` so the
/// integrand stays bounded for gaps that vanish linearly.
fn tail_integral<G: Fn(f64) -> f64>(gap: &G, b: f64, a: f64) -> Result<f64> {
    let cfg = QuadratureConfig::new(1e-10, 1e-300, 4000)?;
    integrate(
        |x: f64| {
            let s = x.exp();
            s / gap(s)
        },
        b.ln(),
        a.ln(),
        &cfg,
    )
}

/// The integral of `1/(H(z) - z)` must stay finite below `1 - 1e-6` and
/// keep growing beyond it. Growth is judged by comparing the increments over
/// `[1-1e-3, 1-1e-6]` and `[1-1e-6, 1-1e-9]`: a logarithmic divergence gives
/// equal increments, a convergent integral a shrinking one.
pub(crate) fn check_gap_integral<G: Fn(f64) -> f64>(gap: G, s_top: f64) -> Option<String> {
    let body = tail_integral(&gap, 1e-6, s_top);
    if !matches!(body, Ok(v) if v.is_finite()) {
        return Some("integral of 1/(H(z) - z) is not finite below 1 - 1e-6".into());
    }
    match (tail_integral(&gap, 1e-6, 1e-3), tail_integral(&gap, 1e-9, 1e-6)) {
        (Ok(a), Ok(b)) if b >= 0.5 * a => None,
        (Ok(a), Ok(b)) => Some(format!(
            "integral of 1/(H(z) - z) appears to converge as z -> 1 (increments {a:e}, {b:e})"
        )),
        _ => Some("integral of 1/(H(z) - z) could not be evaluated near z = 1".into()),
    }
}
