//! Numerical checks of the copula axioms and of the construction identities.
//!
//! Every check produces a [`Check`] with its worst residual and where it
//! occurred; [`ValidationReport`] collects them and serializes to JSON.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{Copula, ProfileCopula};
use crate::dependence::{density_mass, kendall_tau_direct, kendall_tau_paper};
use crate::error::Result;
use crate::numerics::quadrature::QuadratureConfig;
use crate::sampling::sample_pairs;
use crate::stats::kendall_tau;

/// Tolerances applied by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub boundary: f64,
    /// Smallest accepted rectangle mass (a negative number).
    pub rectangle: f64,
    pub symmetry: f64,
    pub mass: f64,
    pub continuity: f64,
    pub ode: f64,
    pub g_prime: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            boundary: 1e-8,
            rectangle: -1e-9,
            symmetry: 1e-8,
            mass: 1e-5,
            continuity: 1e-8,
            ode: 1e-7,
            g_prime: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest residual, or for rectangle masses the smallest mass.
    pub worst: f64,
    pub location: Option<(f64, f64)>,
    pub tolerance: f64,
}

impl Check {
    fn at_most(name: &str, worst: (f64, Option<(f64, f64)>), tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: worst.0 <= tolerance,
            worst: worst.0,
            location: worst.1,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub grid_size: usize,
    pub tolerances: Tolerances,
}

impl ValidationReport {
    pub fn new(grid_size: usize, tolerances: Tolerances) -> Self {
        Self {
            checks: Vec::new(),
            grid_size,
            tolerances,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Appends the checks of `other`, replacing any with the same name.
    pub fn merge(&mut self, other: ValidationReport) {
        for c in other.checks {
            self.checks.retain(|x| x.name != c.name);
            self.checks.push(c);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Largest `|r|` and where it occurred.
fn worst_of<I: Iterator<Item = (f64, (f64, f64))>>(it: I) -> (f64, Option<(f64, f64)>) {
    it.fold((0.0, None), |acc, (r, at)| {
        let r = if r.is_nan() { f64::INFINITY } else { r.abs() };
        if r > acc.0 || (acc.1.is_none() && r >= acc.0) {
            (r, Some(at))
        } else {
            acc
        }
    })
}

fn lattice(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Boundary and margin conditions and 2-increasingness on an `n × n` lattice.
pub fn check_copula_axioms<C: Copula + ?Sized>(c: &C, grid_n: usize, tol: &Tolerances) -> ValidationReport {
    let grid_n = grid_n.max(2);
    let xs = lattice(grid_n);
    let e = c.epsilon();
    let mut report = ValidationReport::new(grid_n, *tol);

    let boundary = worst_of(xs.iter().flat_map(|&x| {
        [
            (c.cdf(x, 0.0), (x, 0.0)),
            (c.cdf(0.0, x), (0.0, x)),
            (c.cdf(x, e), (x, e)),
            (c.cdf(e, x), (e, x)),
        ]
    }));
    report.checks.push(Check::at_most("boundary", boundary, tol.boundary));

    let margins = worst_of(xs.iter().flat_map(|&x| {
        [
            (c.cdf(x, 1.0) - x, (x, 1.0)),
            (c.cdf(1.0, x) - x, (1.0, x)),
            (c.cdf(x, 1.0 - e) - x, (x, 1.0 - e)),
            (c.cdf(1.0 - e, x) - x, (1.0 - e, x)),
        ]
    }));
    report.checks.push(Check::at_most("margins", margins, tol.boundary));

    let rows: Vec<Vec<f64>> = xs.par_iter().map(|&u| xs.iter().map(|&v| c.cdf(u, v)).collect()).collect();
    let (min_mass, at) = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, (0.0, 0.0));
            for j in 0..grid_n {
                let m = rows[i + 1][j + 1] - rows[i + 1][j] - rows[i][j + 1] + rows[i][j];
                let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
                if m < best.0 {
                    best = (m, (xs[i], xs[j]));
                }
            }
            best
        })
        .reduce(|| (f64::INFINITY, (0.0, 0.0)), |a, b| if b.0 < a.0 { b } else { a });
    report.checks.push(Check {
        name: "rectangle_mass".into(),
        passed: min_mass >= tol.rectangle,
        worst: min_mass,
        location: Some(at),
        tolerance: tol.rectangle,
    });
    report
}

/// `C(u,v) = C(1-v, 1-u) + u + v - 1` and `c(u,v) = c(1-v, 1-u)` on an
/// interior lattice.
pub fn check_opposite_symmetry<C: Copula + ?Sized>(c: &C, grid_n: usize, tol: &Tolerances) -> ValidationReport {
    let grid_n = grid_n.max(2);
    let xs: Vec<f64> = (0..grid_n).map(|i| (i as f64 + 0.5) / grid_n as f64).collect();
    let mut report = ValidationReport::new(grid_n, *tol);
    let pts: Vec<(f64, f64)> = xs.iter().flat_map(|&u| xs.iter().map(move |&v| (u, v))).collect();
    let cdf = worst_of(pts.iter().map(|&(u, v)| (c.cdf(u, v) - c.cdf(1.0 - v, 1.0 - u) - u - v + 1.0, (u, v))));
    report.checks.push(Check::at_most("opposite_symmetry", cdf, tol.symmetry));
    // The density jumps across the support curve; points on it are skipped.
    let off_curve = |&&(u, v): &&(f64, f64)| (v - c.support_bound(u)).abs() > 1e-9;
    let dens = worst_of(pts.iter().filter(off_curve).map(|&(u, v)| {
        let (a, b) = (c.density(u, v), c.density(1.0 - v, 1.0 - u));
        ((a - b) / a.abs().max(1.0), (u, v))
    }));
    report.checks.push(Check::at_most("density_symmetry", dens, tol.symmetry));
    report
}

/// Total density mass by iterated adaptive quadrature.
pub fn check_density_mass<C: Copula + ?Sized>(c: &C, tol: &Tolerances) -> ValidationReport {
    let mut report = ValidationReport::new(0, *tol);
    let cfg = QuadratureConfig::new(1e-9, 1e-11, 4000).expect("valid tolerances");
    let (worst, passed) = match density_mass(c, &cfg) {
        Ok(m) => (m - 1.0, (m - 1.0).abs() <= tol.mass),
        Err(_) => (f64::INFINITY, false),
    };
    report.checks.push(Check {
        name: "density_mass".into(),
        passed,
        worst,
        location: None,
        tolerance: tol.mass,
    });
    report
}

/// Jumps of `C` across the lines where its formula changes: `u = u0`,
/// `v = H(u)`, `v = 1 - u0` and `u + v = 1`.
pub fn check_region_continuity(c: &ProfileCopula, probes: usize, tol: &Tolerances) -> ValidationReport {
    let mut report = ValidationReport::new(probes, *tol);
    let u0 = c.profile().u0();
    let d = 1e-12;
    let ts: Vec<f64> = (1..probes).map(|i| i as f64 / probes as f64).collect();
    let mut pts: Vec<((f64, f64), (f64, f64))> = Vec::new();
    for &t in &ts {
        pts.push(((t, 1.0 - t - d), (t, 1.0 - t + d)));
        if u0 > 0.0 {
            pts.push(((u0 - d, t), (u0 + d, t)));
            pts.push(((t, 1.0 - u0 - d), (t, 1.0 - u0 + d)));
            let h = c.h(t);
            if h < 1.0 - d {
                pts.push(((t, h - d), (t, h + d)));
            }
        }
    }
    let jump = worst_of(pts.iter().map(|&(a, b)| {
        // C is 1-Lipschitz in each argument.
        let dist = (a.0 - b.0).abs() + (a.1 - b.1).abs();
        (((c.cdf(b.0, b.1) - c.cdf(a.0, a.1)).abs() - dist).max(0.0), a)
    }));
    report.checks.push(Check::at_most("region_continuity", jump, tol.continuity));
    report
}

/// The defining ODE of `F` on `probes` points of `(u0, 1)`, and `G'`
/// from differencing the `G` table against the closed form `G / L(1-v)`.
pub fn check_construction(c: &ProfileCopula, probes: usize, tol: &Tolerances) -> ValidationReport {
    let mut report = ValidationReport::new(probes, *tol);
    let p = c.profile();
    let (u0, e) = (p.u0(), p.epsilon());
    let us: Vec<f64> = (1..probes).map(|i| u0 + (1.0 - u0 - 2.0 * e) * i as f64 / probes as f64).collect();
    let ode = worst_of(us.iter().map(|&u| (p.ode_residual(1.0 - u), (u, 1.0 - u))));
    report.checks.push(Check::at_most("ode_residual", ode, tol.ode));

    let f_prime = us.iter().map(|&u| c.f_prime(u)).fold(f64::INFINITY, f64::min);
    report.checks.push(Check {
        name: "f_prime_nonnegative".into(),
        passed: f_prime >= -1e-10,
        worst: f64::min(f_prime, 0.0),
        location: None,
        tolerance: -1e-10,
    });

    let s_max = p.s_max();
    let vs: Vec<f64> = (1..probes).map(|i| s_max * (i as f64 / probes as f64)).collect();
    let g_prime = worst_of(vs.iter().map(|&v| {
        let h = 1e-4 * v.min(s_max - v);
        let fd = (p.g(v + h) - p.g(v - h)) / (2.0 * h);
        let exact = p.g_prime(v);
        ((fd - exact) / exact.abs().max(1e-300), (1.0 - v, v))
    }));
    report.checks.push(Check::at_most("g_prime_two_way", g_prime, tol.g_prime));
    report
}

/// Every check above on a single copula.
pub fn validate_all(c: &ProfileCopula, grid_n: usize, tol: &Tolerances) -> ValidationReport {
    let mut r = check_copula_axioms(c, grid_n, tol);
    r.merge(check_opposite_symmetry(c, grid_n, tol));
    r.merge(check_density_mass(c, tol));
    r.merge(check_region_continuity(c, 1000, tol));
    r.merge(check_construction(c, 1000, tol));
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    /// `-1 + 8 ∫ C(u, 1-u) du`.
    pub tau_paper: f64,
    /// `1 - 4 ∬ C'_u C'_v`.
    pub tau_direct: f64,
    pub tau_sample: f64,
    pub std_error: f64,
    /// `|tau_paper - tau_sample| > 3 SE`.
    pub paper_flagged: bool,
    /// `|tau_direct - tau_sample| > 3 SE`.
    pub direct_flagged: bool,
}

/// Kendall's τ three ways: the diagonal formula, the direct double integral,
/// and the sample estimate from `n_samples` draws.
pub fn kendall_tau_report<C: Copula + ?Sized>(c: &C, n_samples: usize, seed: u64) -> Result<TauReport> {
    let cfg = QuadratureConfig::new(1e-9, 1e-12, 4000)?;
    let tau_paper = kendall_tau_paper(c, &cfg)?;
    let tau_direct = kendall_tau_direct(c, &cfg)?;
    let batch = sample_pairs(c, n_samples, seed)?;
    let est = kendall_tau(&batch.pairs)?;
    let bound = 3.0 * est.std_error;
    Ok(TauReport {
        tau_paper,
        tau_direct,
        tau_sample: est.tau,
        std_error: est.std_error,
        paper_flagged: (tau_paper - est.tau).abs() > bound,
        direct_flagged: (tau_direct - est.tau).abs() > bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separable::SeparableCopula;

    #[test]
    fn independence_passes_everything() {
        let c = SeparableCopula::independence();
        let r = validate_all(c.core(), 50, &Tolerances::default());
        assert!(r.passed(), "{}", r.to_json());
        assert!(r.get("opposite_symmetry").unwrap().worst <= 4.0 * f64::EPSILON);
        let back: ValidationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn independence_tau_flags_the_diagonal_formula() {
        let c = SeparableCopula::independence();
        let t = kendall_tau_report(&c, 20_000, 5).unwrap();
        assert!((t.tau_paper - 1.0 / 3.0).abs() < 1e-9);
        assert!(t.tau_direct.abs() < 1e-9);
        assert!(t.paper_flagged);
        assert!(!t.direct_flagged);
    }
}
