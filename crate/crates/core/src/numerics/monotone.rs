//! Shape-preserving piecewise-cubic tables.
//!
//! Slopes follow Fritsch–Carlson (weighted harmonic mean in the interior,
//! one-sided three-point formula clipped at the ends), so the interpolant is
//! monotone on every knot interval whenever the data are.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::roots::find_root_with_values;

const MONOTONE_SLACK: f64 = 1e-13;

/// A monotone function held as a knot table with a monotone cubic interpolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedMonotone {
    knots_x: Vec<f64>,
    knots_y: Vec<f64>,
    slopes: Vec<f64>,
    increasing: bool,
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

impl TabulatedMonotone {
    /// Builds a table from explicit knots.
    pub fn from_knots(knots_x: Vec<f64>, knots_y: Vec<f64>) -> Result<Self> {
        let n = knots_x.len();
        if n < 2 || knots_y.len() != n {
            return Err(Error::Domain(format!(
                "need at least two knots with matching lengths (got {} and {})",
                n,
                knots_y.len()
            )));
        }
        if knots_x.iter().chain(&knots_y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("knot values must be finite".into()));
        }
        if let Some(w) = knots_x.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!("knots_x not strictly increasing at {}", w[1])));
        }
        let span = knots_y[n - 1] - knots_y[0];
        if span == 0.0 {
            return Err(Error::NotMonotone(knots_x[0]));
        }
        let increasing = span > 0.0;
        let dir = if increasing { 1.0 } else { -1.0 };
        for i in 0..n - 1 {
            if dir * (knots_y[i + 1] - knots_y[i]) < -MONOTONE_SLACK {
                return Err(Error::NotMonotone(knots_x[i + 1]));
            }
        }
        // Clip sub-tolerance reversals so the interpolant is exactly monotone.
        let mut knots_y = knots_y;
        for i in 1..n {
            if dir * (knots_y[i] - knots_y[i - 1]) < 0.0 {
                knots_y[i] = knots_y[i - 1];
            }
        }

        let h: Vec<f64> = knots_x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (knots_y[i + 1] - knots_y[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
            for i in 1..n - 1 {
                let (d0, d1) = (delta[i - 1], delta[i]);
                if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
                    slopes[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
        }
        Ok(Self {
            knots_x,
            knots_y,
            slopes,
            increasing,
        })
    }

    pub fn knots_x(&self) -> &[f64] {
        &self.knots_x
    }

    pub fn knots_y(&self) -> &[f64] {
        &self.knots_y
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots_x[0], self.knots_x[self.knots_x.len() - 1])
    }

    /// Range of values, as `(min, max)`.
    pub fn range(&self) -> (f64, f64) {
        let (a, b) = (self.knots_y[0], self.knots_y[self.knots_y.len() - 1]);
        (a.min(b), a.max(b))
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots_x.len();
        self.knots_x.partition_point(|&k| k <= x).clamp(1, n - 1) - 1
    }

    /// Evaluates the interpolant; arguments outside the domain are clamped.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        let x = x.clamp(lo, hi);
        let i = self.segment(x);
        let h = self.knots_x[i + 1] - self.knots_x[i];
        let t = (x - self.knots_x[i]) / h;
        let (y0, y1) = (self.knots_y[i], self.knots_y[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// Derivative of the interpolant.
    pub fn derivative(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        let x = x.clamp(lo, hi);
        let i = self.segment(x);
        let h = self.knots_x[i + 1] - self.knots_x[i];
        let t = (x - self.knots_x[i]) / h;
        let (y0, y1) = (self.knots_y[i], self.knots_y[i + 1]);
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * (y0 - y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1
    }

    /// Inverse of the interpolant. Values outside the range are clamped.
    pub fn inverse(&self, y: f64) -> f64 {
        let n = self.knots_y.len();
        let (ymin, ymax) = self.range();
        let y = y.clamp(ymin, ymax);
        // Segment whose value range contains y.
        let i = if self.increasing {
            self.knots_y.partition_point(|&k| k < y)
        } else {
            self.knots_y.partition_point(|&k| k > y)
        }
        .clamp(1, n - 1)
            - 1;
        let (a, b) = (self.knots_x[i], self.knots_x[i + 1]);
        let (fa, fb) = (self.knots_y[i] - y, self.knots_y[i + 1] - y);
        let tol = 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        find_root_with_values(|x| self.eval(x) - y, a, b, fa, fb, tol).unwrap_or(if fa.abs() < fb.abs() {
            a
        } else {
            b
        })
    }
}

/// Tabulates `f` at `n_knots` uniformly spaced points on `[x_lo, x_hi]`.
pub fn tabulate_monotone<F: Fn(f64) -> f64>(
    f: F,
    x_lo: f64,
    x_hi: f64,
    n_knots: usize,
) -> Result<TabulatedMonotone> {
    if n_knots < 16 {
        return Err(Error::Domain(format!("need at least 16 knots, got {n_knots}")));
    }
    if !(x_lo < x_hi) {
        return Err(Error::Domain(format!("empty tabulation interval [{x_lo}, {x_hi}]")));
    }
    let step = (x_hi - x_lo) / (n_knots - 1) as f64;
    let xs: Vec<f64> = (0..n_knots)
        .map(|i| if i == n_knots - 1 { x_hi } else { x_lo + step * i as f64 })
        .collect();
    tabulate_on(f, xs)
}

/// Tabulates `f` on caller-supplied knots.
pub fn tabulate_on<F: Fn(f64) -> f64>(f: F, xs: Vec<f64>) -> Result<TabulatedMonotone> {
    let ys = xs.iter().map(|&x| f(x)).collect();
    TabulatedMonotone::from_knots(xs, ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal::normal_cdf;

    #[test]
    fn identity_is_exact_on_knots() {
        let t = tabulate_monotone(|x| x, 0.0, 1.0, 16).unwrap();
        for (&x, &y) in t.knots_x().iter().zip(t.knots_y()) {
            assert_eq!(t.eval(x), y);
        }
        assert!((t.eval(0.123) - 0.123).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_table_accuracy() {
        let worst = |n| {
            let t = tabulate_monotone(normal_cdf, -6.0, 6.0, n).unwrap();
            (0..10_000)
                .map(|i| -6.0 + 12.0 * (i as f64 + 0.5) / 10_000.0)
                .map(|x| (t.eval(x) - normal_cdf(x)).abs())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (worst(400), worst(4000));
        assert!(coarse < 5e-7, "400 knots: {coarse:e}");
        assert!(fine < 5e-10, "4000 knots: {fine:e}");
    }

    #[test]
    fn monotonicity_detection() {
        assert!(tabulate_monotone(|x| x * x, 0.0, 1.0, 32).is_ok());
        let err = tabulate_monotone(|x: f64| (3.0 * x).sin(), 0.0, 2.0, 32).unwrap_err();
        assert!(matches!(err, Error::NotMonotone(_)));
        assert!(tabulate_monotone(|x| x, 0.0, 1.0, 8).is_err());
    }

    #[test]
    fn decreasing_table_inverse() {
        let t = tabulate_monotone(|x: f64| (-x).exp(), 0.0, 3.0, 64).unwrap();
        assert!(!t.is_increasing());
        for &y in &[0.06, 0.3, 0.77, 0.999] {
            assert!((t.eval(t.inverse(y)) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let t = tabulate_monotone(|x: f64| x.powi(3) + x, 0.0, 2.0, 50).unwrap();
        let h = 1e-6;
        for i in 1..200 {
            let x = 2.0 * i as f64 / 200.0 + 1e-3;
            if x + h >= 2.0 {
                continue;
            }
            let fd = (t.eval(x + h) - t.eval(x - h)) / (2.0 * h);
            assert!((fd - t.derivative(x)).abs() < 1e-5, "x = {x}");
        }
    }
}
