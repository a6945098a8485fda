//! Copulas whose density vanishes above a support curve `v = H(u)`.
//!
//! Below `u0` the density is `G'(v) / G(H(u))` under the curve; beyond it is
//! `F'(u) G'(v)` on the lower triangle, with
//! `K(u) = ∫_{u0}^u H'(z) / G(1-z) dz` and `F` solving
//! `F'(u) G(1-u) + G'(1-u)(F(u) + K(u)) = 1`, `F(u0) = 0`.

use serde::{Deserialize, Serialize};

use crate::copula::{forward_copula, ProfileCopula, Region};
use crate::error::{Error, Result};
use crate::families::{GFamily, LFunction};
use crate::profile::{BuildOptions, GSource, Positivity, Profile};
use crate::support::{validate_support, SupportFunction};

/// Number of probe points used when validating a support curve.
const SUPPORT_PROBES: usize = 2000;

/// How the copula was put together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `L = H - u`, with `K` and `F` in closed form.
    Main,
    /// `G` from a general `L`.
    FromL,
    /// A closed-form `G`.
    FromG,
    /// Piecewise-linear `H` with `G(v) = v^k`.
    PiecewisePower,
    /// Gaussian-shift `H` with `L(u) = (1 - u)/k`.
    GaussianPower,
}

#[derive(Debug, Clone)]
pub struct PrescribedCopula {
    core: ProfileCopula,
    construction: Construction,
    positivity: Positivity,
}

forward_copula!(PrescribedCopula, core);

fn checked_support(h: &SupportFunction) -> Result<()> {
    let problems = validate_support(h, SUPPORT_PROBES);
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::SupportInvalid(problems))
    }
}

impl PrescribedCopula {
    /// `G(v) = exp(-∫_{u0}^{1-v} dz / (H(z) - z))`, `K(u) = (H(u) - u)/G(1-u) - 1 + 2u0`
    /// and `F(u) = (1 - 2u0)(1 - G(1-u))`.
    pub fn build_main(h: &SupportFunction, opts: &BuildOptions) -> Result<Self> {
        checked_support(h)?;
        Self::finish(Profile::main(h, opts)?, Construction::Main)
    }

    /// `G(v) = exp(-∫_{u0}^{1-v} dz / L(z))`, so that `G(1 - u0) = 1`.
    pub fn build_with_l(h: &SupportFunction, l: LFunction, opts: &BuildOptions) -> Result<Self> {
        checked_support(h)?;
        Self::finish(Profile::prescribed(h, GSource::FromL(l), opts)?, Construction::FromL)
    }

    pub fn build_with_g(h: &SupportFunction, g: GFamily, opts: &BuildOptions) -> Result<Self> {
        checked_support(h)?;
        Self::finish(Profile::prescribed(h, GSource::Family(g), opts)?, Construction::FromG)
    }

    /// Piecewise-linear support through `(u0, 1 - u0)` and `G(v) = v^k`.
    /// Valid exactly when `k >= (1 - u0)/(1 - 2 u0)`.
    pub fn piecewise_power(u0: f64, k: f64, opts: &BuildOptions) -> Result<Self> {
        let h = SupportFunction::piecewise_linear(u0)?;
        let mut c = Self::build_with_g(&h, GFamily::Power { k }, opts)?;
        c.construction = Construction::PiecewisePower;
        Ok(c)
    }

    /// Gaussian-shift support with `L(u) = (1 - u)/k`, `k > 1`.
    pub fn gaussian_power(delta: f64, k: f64, opts: &BuildOptions) -> Result<Self> {
        if !(k > 1.0 && k.is_finite()) {
            return Err(Error::Domain(format!("k must exceed 1, got {k}")));
        }
        let h = SupportFunction::gaussian_shift(delta)?;
        let mut c = Self::build_with_l(&h, LFunction::linear(k)?, opts)?;
        c.construction = Construction::GaussianPower;
        Ok(c)
    }

    /// Wraps an existing profile, re-running the positivity check.
    pub fn from_profile(profile: Profile, construction: Construction) -> Result<Self> {
        if profile.support().is_none() {
            return Err(Error::Config("a prescribed copula needs a support curve".into()));
        }
        Self::finish(profile, construction)
    }

    fn finish(profile: Profile, construction: Construction) -> Result<Self> {
        let positivity = profile.positivity();
        if !positivity.holds() {
            return Err(Error::PositivityViolated(format!(
                "F' would be negative: Q = {:e} at u* = {}, min F'G = {:e}",
                positivity.q_min, positivity.u_star, positivity.min_scaled_f_prime
            )));
        }
        Ok(Self {
            core: ProfileCopula::new(profile),
            construction,
            positivity,
        })
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn positivity(&self) -> Positivity {
        self.positivity
    }

    pub fn u_star(&self) -> f64 {
        self.positivity.u_star
    }

    pub fn core(&self) -> &ProfileCopula {
        &self.core
    }

    pub fn core_mut(&mut self) -> &mut ProfileCopula {
        &mut self.core
    }

    pub fn profile(&self) -> &Profile {
        self.core.profile()
    }

    pub fn support(&self) -> &SupportFunction {
        self.profile().support().expect("support curve")
    }

    pub fn u0(&self) -> f64 {
        self.profile().u0()
    }

    pub fn h(&self, u: f64) -> f64 {
        self.core.h(u)
    }

    pub fn classify(&self, u: f64, v: f64) -> Region {
        self.core.classify(u, v)
    }

    pub fn k(&self, u: f64) -> f64 {
        self.core.k(u)
    }

    pub fn f(&self, u: f64) -> f64 {
        self.core.f(u)
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        self.core.f_prime(u)
    }

    pub fn g(&self, v: f64) -> f64 {
        self.core.g(v)
    }

    pub fn g_prime(&self, v: f64) -> f64 {
        self.core.g_prime(v)
    }

    /// `F'(u) G(1-u) + G'(1-u)(F(u) + K(u)) - 1`.
    pub fn ode_residual(&self, u: f64) -> f64 {
        self.profile().ode_residual(1.0 - u)
    }

    /// `|K(1 - H(u)) - K(H⁻¹(1 - u))|`.
    pub fn k_form_residual(&self, u: f64) -> f64 {
        self.core.k_form_residual(u)
    }
}
