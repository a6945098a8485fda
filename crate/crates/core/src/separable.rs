//! Copulas whose density is `F'(u) G'(v)` below the anti-diagonal and the
//! reflection of it above.
//!
//! `F` solves `G(1-u) F'(u) + G'(1-u) F(u) = 1` with `F(0) = 0`, which gives
//! `F(u) = G(1-u) ∫_0^u dz / G(1-z)^2`. The density is nonnegative when
//! `-∫_0^{u*} (1 + L'(z)) / G(1-z)^2 dz <= L(0) / G(1)^2`, with `L` the log-scale
//! of `G` and `u*` the point where `1 + L'` turns positive.

use serde::{Deserialize, Serialize};

use crate::copula::{forward_copula, ProfileCopula};
use crate::error::{Error, Result};
use crate::families::{GFamily, LFunction};
use crate::profile::{BuildOptions, GSource, Positivity, Profile};

pub use crate::dependence::{
    kendall_tau_direct, kendall_tau_paper, l_from_omega, opposite_diagonal, opposite_diagonal_derivative,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FromG,
    FromL,
}

#[derive(Debug, Clone)]
pub struct SeparableCopula {
    core: ProfileCopula,
    provenance: Provenance,
    positivity: Positivity,
}

forward_copula!(SeparableCopula, core);

impl SeparableCopula {
    /// Builds the copula from a closed-form `G`.
    pub fn from_g(g: GFamily, opts: &BuildOptions) -> Result<Self> {
        Self::finish(Profile::separable(GSource::Family(g), opts)?, Provenance::FromG)
    }

    /// Builds the copula from `L`, with `G(v) = exp(-∫_0^{1-v} dz / L(z))`.
    pub fn from_l(l: LFunction, opts: &BuildOptions) -> Result<Self> {
        Self::finish(Profile::separable(GSource::FromL(l), opts)?, Provenance::FromL)
    }

    pub fn independence() -> Self {
        Self::from_g(GFamily::Independence, &BuildOptions::default()).expect("independence copula")
    }

    /// Wraps an existing profile, re-running the positivity check.
    pub fn from_profile(profile: Profile, provenance: Provenance) -> Result<Self> {
        Self::finish(profile, provenance)
    }

    fn finish(profile: Profile, provenance: Provenance) -> Result<Self> {
        let positivity = profile.positivity();
        if !positivity.holds() {
            return Err(Error::PositivityViolated(format!(
                "F' would be negative: Q = {:e} at u* = {}, min F'G = {:e}",
                positivity.q_min, positivity.u_star, positivity.min_scaled_f_prime
            )));
        }
        Ok(Self {
            core: ProfileCopula::new(profile),
            provenance,
            positivity,
        })
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
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

    /// `G(1-u) F'(u) + G'(1-u) F(u) - 1`.
    pub fn ode_residual(&self, u: f64) -> f64 {
        self.profile().ode_residual(1.0 - u)
    }
}

/// `F` in closed form for the families where it is known.
pub fn closed_form_f(g: GFamily, u: f64) -> f64 {
    match g {
        GFamily::Independence => u,
        GFamily::Power { k } => {
            let s = 1.0 - u;
            if (2.0 * k - 1.0).abs() < 1e-12 {
                -s.sqrt() * s.ln()
            } else {
                (s.powf(1.0 - k) - s.powf(k)) / (2.0 * k - 1.0)
            }
        }
        GFamily::Sine => 2.0 * (std::f64::consts::FRAC_PI_2 * u).sin() / std::f64::consts::PI,
    }
}
