//! Sample statistics used to cross-check sampled copulas: Kolmogorov–Smirnov
//! tests and Kendall's τ with a standard error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub n: f64,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for a KS statistic `d` with effective size `n`, using Stephens'
/// finite-sample correction of the scaling.
pub fn ks_p_value(d: f64, n: f64) -> f64 {
    let rn = n.sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    if let Some(&x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(x));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> Result<KsResult> {
    let v = sorted(xs)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
        n,
    })
}

/// Two-sample test.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    let (a, b) = (sorted(xs)?, sorted(ys)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n = na * nb / (na + nb);
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallEstimate {
    pub tau: f64,
    /// Asymptotic standard error of the estimate.
    pub std_error: f64,
    pub n: usize,
}

/// Prefix counts over ranks `0..n`.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn add(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted ranks strictly below `rank`.
    fn below(&self, rank: usize) -> u64 {
        let mut i = rank;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Kendall's τ in `O(n log n)` for samples without ties.
///
/// Each point gets the score `(concordant - discordant)/(n - 1)` over its
/// partners; τ is their mean and the standard error is `2 sd / sqrt(n)`,
/// the first-order variance of a degree-two U-statistic.
pub fn kendall_tau(pairs: &[(f64, f64)]) -> Result<KendallEstimate> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::Domain(format!("Kendall's tau needs at least 3 pairs, got {n}")));
    }
    if let Some(p) = pairs.iter().find(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::NonFinite(if p.0.is_finite() { p.1 } else { p.0 }));
    }
    let mut by_y: Vec<usize> = (0..n).collect();
    by_y.sort_by(|&a, &b| pairs[a].1.total_cmp(&pairs[b].1));
    let mut y_rank = vec![0usize; n];
    for (r, &i) in by_y.iter().enumerate() {
        y_rank[i] = r;
    }
    let mut by_x: Vec<usize> = (0..n).collect();
    by_x.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0));

    // lower_left[i]: points with smaller x and smaller y.
    let mut lower_left = vec![0u64; n];
    let mut tree = Fenwick::new(n);
    for &i in &by_x {
        lower_left[i] = tree.below(y_rank[i]);
        tree.add(y_rank[i]);
    }
    // upper_right[i]: points with larger x and larger y.
    let mut tree = Fenwick::new(n);
    let mut inserted = 0u64;
    let mut upper_right = vec![0u64; n];
    for &i in by_x.iter().rev() {
        upper_right[i] = inserted - tree.below(y_rank[i] + 1);
        tree.add(y_rank[i]);
        inserted += 1;
    }

    let m = (n - 1) as f64;
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            let c = (lower_left[i] + upper_right[i]) as f64;
            (2.0 * c - m) / m
        })
        .collect();
    let nf = n as f64;
    let tau = scores.iter().sum::<f64>() / nf;
    let var = scores.iter().map(|s| (s - tau).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(KendallEstimate {
        tau,
        std_error: 2.0 * (var / nf).sqrt(),
        n,
    })
}
