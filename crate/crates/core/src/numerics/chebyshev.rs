//! Piecewise Chebyshev antiderivatives.
//!
//! [`CumulativeTable`] stores `T(s) = ∫_s^{top} f(σ) dσ` as one Chebyshev
//! series per segment. Each segment is checked against adaptive quadrature
//! and split until the two agree, so evaluation costs a binary search and a
//! Clenshaw recurrence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate_detailed, QuadEstimate, QuadratureConfig};

const MAX_SPLIT_DEPTH: usize = 24;
const MAX_SEGMENTS: usize = 200_000;

/// Upper-tail cumulative integral of a function, tabulated segment-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeTable {
    breaks: Vec<f64>,
    /// Chebyshev coefficients of the antiderivative on each segment.
    coeffs: Vec<Vec<f64>>,
    /// `T(s) = offsets[j] - P_j(x(s))` on segment `j`.
    offsets: Vec<f64>,
}

fn chebyshev_coefficients<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let nf = n as f64;
    let samples: Vec<f64> = (0..n)
        .map(|k| {
            let x = (std::f64::consts::PI * (k as f64 + 0.5) / nf).cos();
            let s = mid + half * x;
            let y = f(s);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::NonFinite(s))
            }
        })
        .collect::<Result<_>>()?;
    let mut c: Vec<f64> = (0..n)
        .map(|j| {
            let sum: f64 = samples
                .iter()
                .enumerate()
                .map(|(k, y)| y * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / nf).cos())
                .sum();
            2.0 * sum / nf
        })
        .collect();
    c[0] *= 0.5;
    Ok(c)
}

/// Coefficients of an antiderivative (in `s`, on a segment of half-width `half`).
fn antiderivative(c: &[f64], half: f64) -> Vec<f64> {
    let n = c.len();
    let mut b = vec![0.0; n + 1];
    for (j, &a) in c.iter().enumerate() {
        match j {
            0 => b[1] += a,
            1 => b[2] += 0.25 * a,
            _ => {
                b[j + 1] += a / (2.0 * (j + 1) as f64);
                b[j - 1] -= a / (2.0 * (j - 1) as f64);
            }
        }
    }
    b.iter_mut().for_each(|v| *v *= half);
    b
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &a in c.iter().skip(1).rev() {
        let t = 2.0 * x * b1 - b2 + a;
        b2 = b1;
        b1 = t;
    }
    x * b1 - b2 + c[0]
}

impl CumulativeTable {
    /// Builds the table of `∫_s^{top} f` on `breaks` (increasing, `top` is the
    /// last break). Segments are split where a degree-`degree` series fails
    /// to reproduce the adaptive-quadrature integral to `rel_tol`.
    pub fn build<F: Fn(f64) -> f64>(f: F, breaks: &[f64], degree: usize, rel_tol: f64) -> Result<Self> {
        Self::build_scaled(&f, |_| 0.0, breaks, degree, rel_tol)
    }

    /// Like [`build`](Self::build), with the tolerance measured against the
    /// integral of `magnitude` rather than of `|f|`. Use this when `f` is a
    /// sum of terms that cancel, so rounding noise does not force splitting.
    pub fn build_scaled<F, M>(f: F, magnitude: M, breaks: &[f64], degree: usize, rel_tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        M: Fn(f64) -> f64,
    {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("breaks must be strictly increasing with at least two points".into()));
        }
        // The Kronrod roundoff floor sits near 1e-14 relative; asking for less
        // would never converge.
        let cfg = QuadratureConfig::new((0.1 * rel_tol).max(5e-14), 1e-300, 2000)?;
        let mut segments: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        // Work from the top down so segments come out in decreasing order.
        for w in breaks.windows(2).rev() {
            let mut stack = vec![(w[0], w[1], 0usize)];
            while let Some((a, b, depth)) = stack.pop() {
                let c = chebyshev_coefficients(&f, a, b, degree + 1)?;
                let p = antiderivative(&c, 0.5 * (b - a));
                let approx = clenshaw(&p, 1.0) - clenshaw(&p, -1.0);
                // A budget overrun still yields a usable estimate with an honest
                // error bound; the acceptance test below accounts for it.
                let mass = 0.5 * (b - a) * (magnitude(a) + magnitude(b)).max(2.0 * magnitude(0.5 * (a + b)));
                // Integrands that are pure cancellation noise need an absolute floor.
                let seg_cfg = QuadratureConfig {
                    abs_tol: (0.1 * rel_tol * mass).max(cfg.abs_tol),
                    ..cfg
                };
                let reference = match integrate_detailed(&f, a, b, &[], &seg_cfg) {
                    Err(Error::NonConvergence { estimate, error, .. }) => QuadEstimate {
                        value: estimate,
                        error,
                        subdivisions: cfg.max_subdivisions,
                    },
                    other => other?,
                };
                let scale = reference.value.abs().max(approx.abs()).max(mass);
                if (approx - reference.value).abs() <= rel_tol * scale + reference.error || depth >= MAX_SPLIT_DEPTH {
                    segments.push((a, b, p));
                    if segments.len() > MAX_SEGMENTS {
                        return Err(Error::NonConvergence {
                            max_subdivisions: MAX_SEGMENTS,
                            estimate: reference.value,
                            error: (approx - reference.value).abs(),
                        });
                    }
                } else {
                    let m = 0.5 * (a + b);
                    // Pushed so that the upper half is processed first.
                    stack.push((a, m, depth + 1));
                    stack.push((m, b, depth + 1));
                }
            }
        }
        segments.reverse();

        let n = segments.len();
        let mut offsets = vec![0.0; n];
        let mut above = 0.0;
        for j in (0..n).rev() {
            let p = &segments[j].2;
            offsets[j] = above + clenshaw(p, 1.0);
            above = offsets[j] - clenshaw(p, -1.0);
        }
        let mut out_breaks: Vec<f64> = segments.iter().map(|s| s.0).collect();
        out_breaks.push(segments[n - 1].1);
        Ok(Self {
            breaks: out_breaks,
            coeffs: segments.into_iter().map(|s| s.2).collect(),
            offsets,
        })
    }

    pub fn lower(&self) -> f64 {
        self.breaks[0]
    }

    pub fn upper(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn segment_count(&self) -> usize {
        self.coeffs.len()
    }

    /// Adds `delta` to the stored offset of one segment. Only meant for
    /// building corrupted tables in negative-control tests.
    pub fn perturb_segment(&mut self, segment: usize, delta: f64) {
        self.offsets[segment] += delta;
    }

    /// Value at `s`, clamped to the tabulated interval.
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.coeffs.len();
        let s = s.clamp(self.lower(), self.upper());
        let j = self.breaks.partition_point(|&b| b <= s).clamp(1, n) - 1;
        let (a, b) = (self.breaks[j], self.breaks[j + 1]);
        let x = ((2.0 * s - a - b) / (b - a)).clamp(-1.0, 1.0);
        self.offsets[j] - clenshaw(&self.coeffs[j], x)
    }

    /// Checks the structural invariants of a deserialized table.
    pub fn validate(&self) -> Result<()> {
        let n = self.coeffs.len();
        if n == 0 || self.breaks.len() != n + 1 || self.offsets.len() != n {
            return Err(Error::Config("cumulative table has inconsistent lengths".into()));
        }
        if self.breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("cumulative table breaks are not increasing".into()));
        }
        if self.coeffs.iter().flatten().chain(&self.offsets).any(|v| !v.is_finite()) {
            return Err(Error::Config("cumulative table holds non-finite values".into()));
        }
        Ok(())
    }
}

/// Breaks clustered geometrically toward `lo`: `lo * (hi/lo)^(i/n)`.
pub fn geometric_breaks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    let mut b: Vec<f64> = (0..=n).map(|i| lo * (ratio * i as f64 / n as f64).exp()).collect();
    b[0] = lo;
    b[n] = hi;
    b
}
