//! The functions `G`, `K`, `F` shared by both copula constructions.
//!
//! All three are held in the tail variable: `G` is evaluated at `v` directly
//! and `K(u)`, `F(u)` at `s = 1 - u`, so every table lives on `[eps, s_max]`
//! with `s_max = 1 - u0` and a grid refined geometrically toward 0, where the
//! integrands blow up. Writing `μ = -ln G` and `ℓ(σ) = L(1 - σ)`:
//!
//! * `μ(s) = μ(s_max) + ∫_s^{s_max} dσ / ℓ(σ)`
//! * `K(1-s) = ∫_s^{s_max} h(σ) e^{μ(σ)} dσ` with `h = (H⁻¹)'` (zero without support curve)
//! * `K(1-s) + F(1-s) = G(s) I(s)`, `I(s) = ∫_s^{s_max} (1 + h(σ)) e^{2μ(σ)} dσ`
//!
//! The derivative `F'` follows from the ODE. Below an anchor point it is
//! evaluated as `G'(s) Q(s)` where `Q = ℓ e^{2μ} - I` is itself tabulated
//! through `Q' = -(1 + L' - H')(1 - s) e^{2μ}`; this avoids the cancellation
//! in `1/G - G' I` as `s -> 0`. `F' >= 0` exactly when `Q >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{GFamily, LFunction};
use crate::numerics::chebyshev::{geometric_breaks, CumulativeTable};
use crate::numerics::monotone::{tabulate_monotone, TabulatedMonotone};
use crate::numerics::roots::find_root_with_values;
use crate::support::{check_gap_integral, SupportFunction};

/// Resolution and tolerances used to build tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Number of grid segments on `[eps, s_max]`.
    pub knots: usize,
    /// Smallest distance from the edges of the unit square.
    pub epsilon: f64,
    /// Relative accuracy required of each table segment.
    pub rel_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            knots: 400,
            epsilon: crate::EPSILON,
            rel_tol: 1e-10,
        }
    }
}

impl BuildOptions {
    pub fn validate(&self) -> Result<()> {
        if !(16..=100_000).contains(&self.knots) {
            return Err(Error::Config(format!("knots must be in [16, 100000], got {}", self.knots)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-4) {
            return Err(Error::Config(format!("epsilon must be in (0, 1e-4], got {}", self.epsilon)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-3) {
            return Err(Error::Config(format!("rel_tol must be in (0, 1e-3), got {}", self.rel_tol)));
        }
        Ok(())
    }

    // Tables are built well below the quadrature tolerance so that
    // differences of table values keep the requested accuracy.
    fn table_tol(&self) -> f64 {
        (self.rel_tol * 1e-3).max(1e-13)
    }
}

const DEGREE: usize = 16;

/// Where `G` comes from.
#[derive(Debug, Clone)]
pub enum GSource {
    Family(GFamily),
    FromL(LFunction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `L = H - u` with the closed forms for `K` and `F`.
    Main,
    /// General `G` with a support curve.
    Prescribed,
    /// General `G` on the whole lower triangle (`u0 = 0`, no support curve).
    Separable,
}

/// Serialized tables of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTables {
    pub mu: Option<CumulativeTable>,
    pub k: Option<CumulativeTable>,
    pub i: Option<CumulativeTable>,
    pub j: Option<CumulativeTable>,
    pub anchor: f64,
    pub q_anchor: f64,
}

/// Outcome of the positivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    /// Split point: `1 + L' - H'` changes sign from negative to positive here.
    pub u_star: f64,
    /// Smallest value of `Q` over the candidates; `F' >= 0` iff it is `>= 0`.
    pub q_min: f64,
    /// Magnitude the minimum is judged against.
    pub scale: f64,
    /// Smallest `F'(u) G(1-u)` found on the probe grid.
    pub min_scaled_f_prime: f64,
}

impl Positivity {
    pub fn holds(&self) -> bool {
        self.q_min >= -1e-9 * self.scale && self.min_scaled_f_prime >= -1e-8
    }
}

#[derive(Debug, Clone)]
pub struct Profile {
    kind: ProfileKind,
    source: GSource,
    support: Option<SupportFunction>,
    u0: f64,
    s_max: f64,
    eps: f64,
    tables: ProfileTables,
}

impl Profile {
    /// Main construction: `G` from `L = H - u`, closed-form `K` and `F`.
    pub fn main(h: &SupportFunction, opts: &BuildOptions) -> Result<Self> {
        Self::build(ProfileKind::Main, GSource::FromL(LFunction::support_gap(h)), Some(h.clone()), opts)
    }

    /// Prescribed support with a general `G`.
    pub fn prescribed(h: &SupportFunction, source: GSource, opts: &BuildOptions) -> Result<Self> {
        Self::build(ProfileKind::Prescribed, source, Some(h.clone()), opts)
    }

    /// Separable construction on the lower triangle.
    pub fn separable(source: GSource, opts: &BuildOptions) -> Result<Self> {
        Self::build(ProfileKind::Separable, source, None, opts)
    }

    /// Rebuilds a profile from stored tables without quadrature.
    pub fn from_tables(
        kind: ProfileKind,
        source: GSource,
        support: Option<SupportFunction>,
        epsilon: f64,
        tables: ProfileTables,
    ) -> Result<Self> {
        for t in [&tables.mu, &tables.k, &tables.i, &tables.j].into_iter().flatten() {
            t.validate()?;
        }
        let u0 = support.as_ref().map_or(0.0, |h| h.u0());
        let p = Self {
            kind,
            source,
            support,
            u0,
            s_max: 1.0 - u0,
            eps: epsilon,
            tables,
        };
        p.check_table_layout()?;
        Ok(p)
    }

    fn check_table_layout(&self) -> Result<()> {
        let needs_mu = matches!(self.source, GSource::FromL(_));
        let general = self.kind != ProfileKind::Main;
        let needs_k = general && self.support.is_some();
        let ok = self.tables.mu.is_some() == needs_mu
            && self.tables.k.is_some() == needs_k
            && self.tables.i.is_some() == general
            && self.tables.j.is_some() == general;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("stored tables do not match the construction".into()))
        }
    }

    fn build(kind: ProfileKind, source: GSource, support: Option<SupportFunction>, opts: &BuildOptions) -> Result<Self> {
        opts.validate()?;
        if let GSource::Family(g) = &source {
            g.validate()?;
        }
        let u0 = support.as_ref().map_or(0.0, |h| h.u0());
        let s_max = 1.0 - u0;
        let eps = opts.epsilon;
        let tol = opts.table_tol();
        let breaks = geometric_breaks(eps, s_max, opts.knots);

        let mut p = Self {
            kind,
            source,
            support,
            u0,
            s_max,
            eps,
            tables: ProfileTables {
                mu: None,
                k: None,
                i: None,
                j: None,
                anchor: s_max,
                q_anchor: 0.0,
            },
        };

        if let GSource::FromL(l) = &p.source {
            if let Some(&s) = breaks.iter().find(|&&s| !(l.tail(s) > 0.0)) {
                return Err(Error::LNotPositive(1.0 - s));
            }
            if let Some(msg) = check_gap_integral(|s| l.tail(s), s_max) {
                return Err(Error::IntegralDiverged(msg));
            }
            p.tables.mu = Some(CumulativeTable::build(|s| 1.0 / l.tail(s), &breaks, DEGREE, tol)?);
        }
        if kind == ProfileKind::Main {
            return Ok(p);
        }

        if p.support.is_some() {
            p.tables.k = Some(CumulativeTable::build(|s| p.hinv_prime(s) * p.mu(s).exp(), &breaks, DEGREE, tol)?);
        }
        p.tables.i = Some(CumulativeTable::build(
            |s| (1.0 + p.hinv_prime(s)) * (2.0 * p.mu(s)).exp(),
            &breaks,
            DEGREE,
            tol,
        )?);
        let anchor = 0.5 * s_max;
        let j_breaks = geometric_breaks(eps, anchor, opts.knots);
        let j = CumulativeTable::build_scaled(
            |s| p.phi_tail(s) * (2.0 * p.mu(s)).exp(),
            |s| (1.0 + p.l_prime_tail(s).abs() + p.hinv_prime(s)) * (2.0 * p.mu(s)).exp(),
            &j_breaks,
            DEGREE,
            tol,
        )?;
        p.tables.anchor = anchor;
        p.tables.q_anchor = p.ell(anchor) * (2.0 * p.mu(anchor)).exp() - p.i_integral(anchor);
        p.tables.j = Some(j);
        Ok(p)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn source(&self) -> &GSource {
        &self.source
    }

    pub fn support(&self) -> Option<&SupportFunction> {
        self.support.as_ref()
    }

    pub fn tables(&self) -> &ProfileTables {
        &self.tables
    }

    /// Mutable access for building corrupted models in negative controls.
    pub fn tables_mut(&mut self) -> &mut ProfileTables {
        &mut self.tables
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    fn clamp(&self, s: f64) -> f64 {
        s.clamp(self.eps, self.s_max)
    }

    /// `L(1 - s)`.
    pub fn ell(&self, s: f64) -> f64 {
        match &self.source {
            GSource::Family(g) => g.log_scale(s),
            GSource::FromL(l) => l.tail(s),
        }
    }

    /// `L'(1 - s)`.
    pub fn l_prime_tail(&self, s: f64) -> f64 {
        match &self.source {
            GSource::Family(g) => g.l_prime_tail(s),
            GSource::FromL(l) => l.tail_derivative(s),
        }
    }

    /// `(H⁻¹)'(s) = H'(1 - s)`, zero without a support curve.
    pub fn hinv_prime(&self, s: f64) -> f64 {
        self.support.as_ref().map_or(0.0, |h| h.inverse_derivative(s))
    }

    /// `1 + L'(u) - H'(u)` at `u = 1 - s`.
    pub fn phi_tail(&self, s: f64) -> f64 {
        let one_plus_l = match &self.source {
            GSource::Family(g) => g.one_plus_l_prime_tail(s),
            GSource::FromL(l) => 1.0 + l.tail_derivative(s),
        };
        one_plus_l - self.hinv_prime(s)
    }

    /// `-ln G(v)`, clamped to the tabulated range.
    pub fn mu(&self, v: f64) -> f64 {
        let v = self.clamp(v);
        match &self.source {
            GSource::Family(g) => g.neg_log(v),
            GSource::FromL(_) => self.tables.mu.as_ref().map_or(0.0, |t| t.eval(v)),
        }
    }

    pub fn g(&self, v: f64) -> f64 {
        (-self.mu(v)).exp()
    }

    pub fn g_prime(&self, v: f64) -> f64 {
        let v = self.clamp(v);
        self.g(v) / self.ell(v)
    }

    /// Solves `μ(v) = m` for `v`, clamped to `[eps, s_max]`.
    pub fn inverse_mu(&self, m: f64) -> f64 {
        let (lo, hi) = (self.eps, self.s_max);
        let (m_lo, m_hi) = (self.mu(lo), self.mu(hi));
        if m >= m_lo {
            return lo;
        }
        if m <= m_hi {
            return hi;
        }
        if let GSource::Family(g) = &self.source {
            return g.inverse_neg_log(m).clamp(lo, hi);
        }
        let t = self.tables.mu.as_ref().expect("mu table");
        let b = t.breaks();
        // μ decreases in v: find the segment whose values bracket m.
        let j = b.partition_point(|&x| self.mu(x) > m).clamp(1, b.len() - 1);
        let (a, c) = (b[j - 1], b[j]);
        let tol = 2.0 * f64::EPSILON * c;
        find_root_with_values(|v| self.mu(v) - m, a, c, self.mu(a) - m, self.mu(c) - m, tol).unwrap_or(a)
    }

    /// `G⁻¹(y)`.
    pub fn g_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.eps;
        }
        self.inverse_mu(-y.ln())
    }

    fn i_integral(&self, s: f64) -> f64 {
        self.tables.i.as_ref().map_or(0.0, |t| t.eval(s))
    }

    /// `K(1 - s)`.
    pub fn k_tail(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        match self.kind {
            ProfileKind::Main => self.ell(s) * self.mu(s).exp() - 1.0 + 2.0 * self.u0,
            ProfileKind::Separable => 0.0,
            ProfileKind::Prescribed => self.tables.k.as_ref().map_or(0.0, |t| t.eval(s)),
        }
    }

    /// `K(1 - s) + F(1 - s)`.
    pub fn kf_tail(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        match self.kind {
            ProfileKind::Main => self.ell(s) * self.mu(s).exp() - (1.0 - 2.0 * self.u0) * self.g(s),
            _ => self.g(s) * self.i_integral(s),
        }
    }

    /// `F(1 - s)`.
    pub fn f_tail(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        match self.kind {
            ProfileKind::Main => -(1.0 - 2.0 * self.u0) * (-self.mu(s)).exp_m1(),
            _ => self.kf_tail(s) - self.k_tail(s),
        }
    }

    /// `Q(s)`, proportional to `F'(1 - s)` with a positive factor.
    pub fn q_tail(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        match self.kind {
            ProfileKind::Main => 1.0 - 2.0 * self.u0,
            _ if s <= self.tables.anchor => self.tables.q_anchor + self.tables.j.as_ref().map_or(0.0, |t| t.eval(s)),
            _ => self.ell(s) * (2.0 * self.mu(s)).exp() - self.i_integral(s),
        }
    }

    /// `F'(u)` at `u = 1 - s`.
    pub fn f_prime_tail(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        match self.kind {
            ProfileKind::Main => (1.0 - 2.0 * self.u0) * self.g_prime(s),
            _ if s <= self.tables.anchor => self.g_prime(s) * self.q_tail(s),
            _ => 1.0 / self.g(s) - self.g_prime(s) * self.i_integral(s),
        }
    }

    /// Residual of `F'(u) G(1-u) + G'(1-u)(F(u) + K(u)) = 1` at `u = 1 - s`.
    pub fn ode_residual(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        self.f_prime_tail(s) * self.g(s) + self.g_prime(s) * self.kf_tail(s) - 1.0
    }

    /// Locates the split point `u*` and evaluates `Q` there and at the other
    /// local minima, together with a scan of `F' G` on the table grid.
    pub fn positivity(&self) -> Positivity {
        let n = 4000;
        let probes = geometric_breaks(self.eps, self.s_max, n);
        // Walk in increasing u (decreasing s); Q has a local minimum in u
        // where φ = 1 + L' - H' turns from negative to positive.
        let tol = 1e-12;
        let mut candidates = vec![(self.s_max, self.q_tail(self.s_max))];
        let mut u_star = 1.0 - self.s_max;
        let phi: Vec<f64> = probes.iter().map(|&s| self.phi_tail(s)).collect();
        for idx in (1..probes.len()).rev() {
            let (s_hi, s_lo) = (probes[idx], probes[idx - 1]);
            let (p_hi, p_lo) = (phi[idx], phi[idx - 1]);
            if p_hi < -tol && p_lo > tol {
                let root = find_root_with_values(|s| self.phi_tail(s), s_lo, s_hi, p_lo, p_hi, 1e-15 * s_hi)
                    .unwrap_or(s_lo);
                candidates.push((root, self.q_tail(root)));
            }
        }
        if phi[0] < -tol {
            candidates.push((self.eps, self.q_tail(self.eps)));
        }
        let mut q_min = f64::INFINITY;
        for &(s, q) in &candidates {
            if q < q_min {
                q_min = q;
                u_star = 1.0 - s;
            }
        }
        if phi.iter().all(|&p| p >= -tol) {
            u_star = 1.0 - self.s_max;
        }
        let scale = self.tables.q_anchor.abs().max(candidates.iter().map(|c| c.1.abs()).fold(0.0, f64::max)).max(1e-300);
        let min_scaled_f_prime = match self.kind {
            ProfileKind::Main => 0.0,
            _ => probes
                .iter()
                .map(|&s| self.f_prime_tail(s) * self.g(s))
                .fold(f64::INFINITY, f64::min),
        };
        Positivity {
            u_star,
            q_min,
            scale,
            min_scaled_f_prime,
        }
    }

    /// `G` as a shape-preserving table on `n` uniform knots of `[eps, s_max]`.
    pub fn tabulated_g(&self, n: usize) -> Result<TabulatedMonotone> {
        tabulate_monotone(|v| self.g(v), self.eps, self.s_max, n)
    }
}
