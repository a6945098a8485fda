//! Probit dose-response levels and correlated injury thresholds.
//!
//! A level has probit `Γ(t) = α + β log ∫_0^t c^n`; the fraction injured is
//! `Φ(Γ)`. Each individual carries a standard normal threshold `γ_i` per
//! level and is injured when `Γ_i(t) >= γ_i`. Thresholds for consecutive
//! levels are coupled so that reaching level `i + 1` implies level `i`:
//! with `X = -γ_i`, `Y = -γ_{i+1}` the requirement is `Y <= X + Δ_i`, which a
//! Gaussian-shift support copula with shift `Δ_i` satisfies exactly.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::numerics::normal::{normal_cdf, quantile_unchecked};
use crate::prescribed::PrescribedCopula;
use crate::profile::BuildOptions;
use crate::support::SupportFunction;

/// Relative tolerance on the slope identities.
const BETA_TOL: f64 = 1e-12;

/// Rows per RNG stream in chain sampling.
const CHAIN_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbitLevel {
    #[serde(default)]
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub n: f64,
}

impl ProbitLevel {
    pub fn new(label: &str, alpha: f64, beta: f64, n: f64) -> Result<Self> {
        let l = Self {
            label: label.into(),
            alpha,
            beta,
            n,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be finite, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::Domain(format!("n must be positive, got {}", self.n)));
        }
        Ok(())
    }
}

/// A piecewise-constant concentration, zero before the first breakpoint and
/// after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl ExposureProfile {
    /// `levels[j]` holds on `[breakpoints[j], breakpoints[j + 1])`.
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != levels.len() + 1 || levels.is_empty() {
            return Err(Error::Domain("need one more breakpoint than levels, and at least one level".into()));
        }
        if !(breakpoints[0] >= 0.0) || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("breakpoints must start at or after 0 and increase strictly".into()));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("breakpoints must be finite".into()));
        }
        if levels.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::Domain("concentrations must be finite and nonnegative".into()));
        }
        if !levels.iter().any(|&c| c > 0.0) {
            return Err(Error::Domain("at least one concentration must be positive".into()));
        }
        Ok(Self { breakpoints, levels })
    }

    /// Builds a profile from `(start, end, concentration)` rows; gaps
    /// between rows are filled with zero concentration.
    pub fn from_segments(segments: &[(f64, f64, f64)]) -> Result<Self> {
        let mut breaks = Vec::new();
        let mut levels = Vec::new();
        for &(a, b, c) in segments {
            if !(a < b) {
                return Err(Error::Domain(format!("segment [{a}, {b}] is empty or reversed")));
            }
            match breaks.last() {
                None => breaks.push(a),
                Some(&end) if a > end => {
                    levels.push(0.0);
                    breaks.push(a);
                }
                Some(&end) if a < end => {
                    return Err(Error::Domain(format!("segment starting at {a} overlaps the previous one")));
                }
                _ => {}
            }
            levels.push(c);
            breaks.push(b);
        }
        Self::new(breaks, levels)
    }

    /// A constant concentration on `[0, duration)`.
    pub fn constant(c: f64, duration: f64) -> Result<Self> {
        Self::new(vec![0.0, duration], vec![c])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `(duration, level)` of each piece intersected with `[0, t]`.
    fn pieces(&self, t: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.levels.iter().enumerate().filter_map(move |(j, &c)| {
            let d = self.breakpoints[j + 1].min(t) - self.breakpoints[j];
            (d > 0.0).then_some((d, c))
        })
    }

    /// Largest concentration on `[0, t]`.
    pub fn max_concentration(&self, t: f64) -> f64 {
        self.pieces(t).map(|p| p.1).fold(0.0, f64::max)
    }
}

/// `log ∫_0^t c(s)^n ds`, summed in log space.
pub fn toxic_load(e: &ExposureProfile, n: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let terms: Vec<f64> = e
        .pieces(t)
        .filter(|p| p.1 > 0.0)
        .map(|(d, c)| n * c.ln() + d.ln())
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::ZeroLoad(t));
    }
    Ok(top + terms.iter().map(|x| (x - top).exp()).sum::<f64>().ln())
}

/// `Γ(t) = α + β log ∫_0^t c^n`.
pub fn probit_value(p: &ProbitLevel, e: &ExposureProfile, t: f64) -> Result<f64> {
    Ok(p.alpha + p.beta * toxic_load(e, p.n, t)?)
}

/// `Φ(Γ(t))`.
pub fn injured_fraction(p: &ProbitLevel, e: &ExposureProfile, t: f64) -> Result<f64> {
    Ok(normal_cdf(probit_value(p, e, t)?))
}

/// Both sides of the two toxic-load inequalities for exponents `m <= n`:
/// `log ∫c^m <= (m/n) log ∫c^n + (1 - m/n) log t` and
/// `log ∫c^n <= log ∫c^m + (n - m) log max c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadInequalities {
    pub lhs1: f64,
    pub rhs1: f64,
    pub lhs2: f64,
    pub rhs2: f64,
    pub first_holds: bool,
    pub second_holds: bool,
}

impl LoadInequalities {
    pub fn both_hold(&self) -> bool {
        self.first_holds && self.second_holds
    }
}

pub fn check_load_inequalities(e: &ExposureProfile, m: f64, n: f64, t: f64) -> Result<LoadInequalities> {
    if !(n >= m && m > 0.0) {
        return Err(Error::Domain(format!("need n >= m > 0, got m = {m}, n = {n}")));
    }
    let lm = toxic_load(e, m, t)?;
    let ln = toxic_load(e, n, t)?;
    let r = m / n;
    let rhs1 = r * ln + (1.0 - r) * t.ln();
    let rhs2 = lm + (n - m) * e.max_concentration(t).ln();
    let slack = |x: f64| 1e-12 * (1.0 + x.abs());
    Ok(LoadInequalities {
        lhs1: lm,
        rhs1,
        lhs2: ln,
        rhs2,
        first_holds: lm <= rhs1 + slack(rhs1),
        second_holds: ln <= rhs2 + slack(rhs2),
    })
}

/// The exposure bound against which two levels are compared: the exposure
/// duration when the concentration exponent drops, the peak concentration
/// when it rises.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbitContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentCase {
    DecreasingN,
    IncreasingN,
    EqualN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityResult {
    pub compatible: bool,
    pub delta: f64,
    pub reason: String,
    pub case: ExponentCase,
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= BETA_TOL * a.abs().max(b.abs())
}

fn positive(name: &str, x: Option<f64>) -> Result<f64> {
    match x {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(Error::Domain(format!("{name} must be positive, got {v}"))),
        None => Err(Error::AmbiguousContext(format!("{name} is required to compare these levels"))),
    }
}

/// Whether thresholds for `next` can be coupled to those for `cur` so that
/// reaching `next` always implies reaching `cur`, and the shift `Δ` of the
/// coupling.
pub fn check_compatibility(cur: &ProbitLevel, next: &ProbitLevel, ctx: &ProbitContext) -> Result<CompatibilityResult> {
    cur.validate()?;
    next.validate()?;
    let (case, beta_ok, beta_msg, delta) = if cur.n == next.n {
        (
            ExponentCase::EqualN,
            rel_eq(cur.beta, next.beta),
            "beta must be equal when n is equal",
            cur.alpha - next.alpha,
        )
    } else if next.n < cur.n {
        let t = positive("t", ctx.t)?;
        (
            ExponentCase::DecreasingN,
            rel_eq(next.n * next.beta, cur.n * cur.beta),
            "n * beta must be equal",
            cur.alpha - next.alpha - next.beta * (1.0 - next.n / cur.n) * t.ln(),
        )
    } else {
        let c_max = positive("c_max", ctx.c_max)?;
        (
            ExponentCase::IncreasingN,
            rel_eq(cur.beta, next.beta),
            "beta must be equal",
            cur.alpha - next.alpha - cur.beta * (next.n - cur.n) * c_max.ln(),
        )
    };
    let (compatible, reason) = if !beta_ok {
        (false, format!("{beta_msg} for the two levels"))
    } else if delta < 0.0 {
        (false, format!("shift {delta} is negative"))
    } else {
        (true, "ok".to_string())
    };
    Ok(CompatibilityResult {
        compatible,
        delta,
        reason,
        case,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChain {
    /// One row of thresholds per individual.
    pub gammas: Vec<Vec<f64>>,
    /// Shift used for each transition.
    pub deltas: Vec<f64>,
    pub seed: u64,
}

impl ThresholdChain {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.gammas.iter().map(|r| r[j]).collect()
    }
}

/// Draws correlated thresholds for consecutive levels. `γ_1` is standard
/// normal; `γ_{i+1} = -Y` with `Y` drawn from the Gaussian-shift copula
/// conditionally on `X = -γ_i`, so that `γ_{i+1} >= γ_i - Δ_i`.
///
/// A zero shift admits only the singular coupling `γ_{i+1} = γ_i`; it is
/// used when `allow_singular` is set and rejected otherwise.
pub fn sample_threshold_chain(
    levels: &[ProbitLevel],
    ctx: &ProbitContext,
    n_samples: usize,
    seed: u64,
    allow_singular: bool,
    opts: &BuildOptions,
) -> Result<ThresholdChain> {
    if levels.is_empty() {
        return Err(Error::Domain("need at least one level".into()));
    }
    if n_samples == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let mut deltas = Vec::new();
    let mut copulas: Vec<Option<PrescribedCopula>> = Vec::new();
    for (i, w) in levels.windows(2).enumerate() {
        let r = check_compatibility(&w[0], &w[1], ctx)?;
        if !r.compatible {
            return Err(Error::IncompatibleLevels(format!("levels {i} and {}: {}", i + 1, r.reason)));
        }
        if r.delta == 0.0 {
            if !allow_singular {
                return Err(Error::IncompatibleLevels(format!(
                    "levels {i} and {}: zero shift allows only the singular coupling",
                    i + 1
                )));
            }
            copulas.push(None);
        } else {
            let h = SupportFunction::gaussian_shift(r.delta)?;
            copulas.push(Some(PrescribedCopula::build_main(&h, opts)?));
        }
        deltas.push(r.delta);
    }

    let chunks = n_samples.div_ceil(CHAIN_CHUNK);
    let parts: Vec<Vec<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let rows = CHAIN_CHUNK.min(n_samples - k * CHAIN_CHUNK);
            (0..rows)
                .map(|_| {
                    let mut row = Vec::with_capacity(levels.len());
                    let mut g = quantile_unchecked(rng.sample(Open01));
                    row.push(g);
                    for (c, &d) in copulas.iter().zip(&deltas) {
                        let t: f64 = rng.sample(Open01);
                        g = match c {
                            Some(c) => {
                                let v = c.invert_conditional(normal_cdf(-g), t);
                                // The copula keeps Y <= X + Δ; only rounding can break it.
                                (-quantile_unchecked(v)).max(g - d)
                            }
                            None => g,
                        };
                        row.push(g);
                    }
                    row
                })
                .collect()
        })
        .collect();
    Ok(ThresholdChain {
        gammas: parts.concat(),
        deltas,
        seed,
    })
}
