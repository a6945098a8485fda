//! Evaluation of opposite-symmetric copulas built from a [`Profile`].
//!
//! The lower triangle `u + v <= 1` carries the formulas; the upper triangle
//! follows from `C(u,v) = C(1-v, 1-u) + u + v - 1`. In the lower triangle:
//!
//! * `u <= u0`, `v <= H(u)`: `C = H⁻¹(v) + (K(1-v) - K(1-H(u))) G(v)`
//! * `u <= u0`, `v > H(u)`: `C = u`
//! * `u > u0`: `C = H⁻¹(v) + (K(1-v) + F(u)) G(v)`
//!
//! Without a support curve (`u0 = 0`, `H⁻¹ = 0`, `K = 0`) only the last case
//! occurs and it reduces to `F(u) G(v)`.

use crate::error::{Error, Result};
use crate::numerics::roots::find_root_with_values;
use crate::profile::Profile;

/// A bivariate copula with the evaluation hooks used by sampling and
/// validation.
pub trait Copula: Send + Sync {
    fn cdf(&self, u: f64, v: f64) -> f64;

    fn density(&self, u: f64, v: f64) -> f64;

    /// `∂C/∂u`, the conditional CDF of `V` given `U = u`.
    fn conditional_cdf(&self, u: f64, v: f64) -> f64;

    /// `∂C/∂v`, obtained from the symmetry.
    fn conditional_cdf_v(&self, u: f64, v: f64) -> f64 {
        1.0 - self.conditional_cdf(1.0 - v, 1.0 - u)
    }

    /// The `v` with `conditional_cdf(u, v) = t`.
    fn invert_conditional(&self, u: f64, t: f64) -> f64;

    /// Upper edge of the density support above `u` (1 when unrestricted).
    fn support_bound(&self, u: f64) -> f64;

    /// Points in `(0,1)` where the density is discontinuous in `u`.
    fn u_breaks(&self) -> Vec<f64>;

    /// Points in `(0,1)` where the density is discontinuous in `v` at fixed `u`.
    fn v_breaks(&self, u: f64) -> Vec<f64>;

    fn epsilon(&self) -> f64;

    /// `cdf` with a domain check.
    fn checked_cdf(&self, u: f64, v: f64) -> Result<f64> {
        check_unit(u, v)?;
        Ok(self.cdf(u, v))
    }

    /// `density` with a domain check.
    fn checked_density(&self, u: f64, v: f64) -> Result<f64> {
        check_unit(u, v)?;
        Ok(self.density(u, v))
    }
}

pub fn check_unit(u: f64, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("({u}, {v}) lies outside the unit square")))
    }
}

/// Region of the unit square, numbered as in the construction: 1-3 for
/// `u <= u0` (below the curve, between curve and anti-diagonal, above the
/// anti-diagonal) and 4-7 for `u > u0` (below the anti-diagonal, up to
/// `1 - u0`, up to the curve, above the curve).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Region(pub u8);

/// Copula evaluation on top of a profile.
#[derive(Debug, Clone)]
pub struct ProfileCopula {
    profile: Profile,
}

impl ProfileCopula {
    pub fn new(profile: Profile) -> Self {
        Self { profile }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn profile_mut(&mut self) -> &mut Profile {
        &mut self.profile
    }

    fn u0(&self) -> f64 {
        self.profile.u0()
    }

    pub fn h(&self, u: f64) -> f64 {
        self.profile.support().map_or(1.0, |h| h.eval(u))
    }

    pub fn h_inv(&self, v: f64) -> f64 {
        self.profile.support().map_or(0.0, |h| h.inverse(v))
    }

    /// `K(u)`.
    pub fn k(&self, u: f64) -> f64 {
        self.profile.k_tail(1.0 - u)
    }

    /// `F(u)`.
    pub fn f(&self, u: f64) -> f64 {
        self.profile.f_tail(1.0 - u)
    }

    /// `F'(u)`.
    pub fn f_prime(&self, u: f64) -> f64 {
        self.profile.f_prime_tail(1.0 - u)
    }

    pub fn g(&self, v: f64) -> f64 {
        self.profile.g(v)
    }

    pub fn g_prime(&self, v: f64) -> f64 {
        self.profile.g_prime(v)
    }

    pub fn classify(&self, u: f64, v: f64) -> Region {
        let u0 = self.u0();
        if u <= u0 {
            if v <= self.h(u) {
                Region(1)
            } else if v <= 1.0 - u {
                Region(2)
            } else {
                Region(3)
            }
        } else if v <= 1.0 - u {
            Region(4)
        } else if v <= 1.0 - u0 {
            Region(5)
        } else if v <= self.h(u) {
            Region(6)
        } else {
            Region(7)
        }
    }

    /// `C` on the closed lower triangle, with `v <= 1 - u`.
    fn lower_cdf(&self, u: f64, v: f64) -> f64 {
        let p = &self.profile;
        if u <= self.u0() {
            let hu = self.h(u);
            if v <= hu {
                self.h_inv(v) + (p.k_tail(v) - p.k_tail(hu)) * p.g(v)
            } else {
                u
            }
        } else {
            let s = 1.0 - u;
            if self.profile.support().is_none() {
                return p.kf_tail(s) * p.g(v);
            }
            self.h_inv(v) + (p.k_tail(v) + p.f_tail(s)) * p.g(v)
        }
    }

    /// `∂C/∂u` on the closed lower triangle.
    fn lower_du(&self, u: f64, v: f64) -> f64 {
        let p = &self.profile;
        if u <= self.u0() {
            let hu = self.h(u);
            if v <= hu {
                (p.mu(hu) - p.mu(v)).exp().min(1.0)
            } else {
                1.0
            }
        } else {
            self.f_prime(u) * p.g(v)
        }
    }

    /// `∂C/∂v` on the closed lower triangle.
    fn lower_dv(&self, u: f64, v: f64) -> f64 {
        let p = &self.profile;
        if u <= self.u0() {
            let hu = self.h(u);
            if v <= hu {
                (p.k_tail(v) - p.k_tail(hu)) * p.g_prime(v)
            } else {
                0.0
            }
        } else {
            (p.k_tail(v) + p.f_tail(1.0 - u)) * p.g_prime(v)
        }
    }

    fn lower_density(&self, u: f64, v: f64) -> f64 {
        let p = &self.profile;
        if u <= self.u0() {
            let hu = self.h(u);
            if v <= hu {
                (p.mu(hu) - p.mu(v)).exp() / p.ell(v.clamp(p.epsilon(), p.s_max()))
            } else {
                0.0
            }
        } else {
            self.f_prime(u) * p.g_prime(v)
        }
    }

    /// `K(1 - H(u))` and `K(H⁻¹(1 - u))`, which coincide by the symmetry of
    /// the support. Returns their absolute difference.
    pub fn k_form_residual(&self, u: f64) -> f64 {
        let a = self.profile.k_tail(self.h(u));
        let b = self.k(self.h_inv(1.0 - u));
        (a - b).abs()
    }

    fn eps(&self) -> f64 {
        self.profile.epsilon()
    }
}

impl Copula for ProfileCopula {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        if u + v <= 1.0 {
            self.lower_cdf(u, v)
        } else {
            self.lower_cdf(1.0 - v, 1.0 - u) + u + v - 1.0
        }
    }

    fn density(&self, u: f64, v: f64) -> f64 {
        if u + v <= 1.0 {
            self.lower_density(u, v)
        } else {
            self.lower_density(1.0 - v, 1.0 - u)
        }
    }

    fn conditional_cdf(&self, u: f64, v: f64) -> f64 {
        let e = self.eps();
        let u = u.clamp(e, 1.0 - e);
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        let d = if u + v <= 1.0 {
            self.lower_du(u, v)
        } else {
            1.0 - self.lower_dv(1.0 - v, 1.0 - u)
        };
        d.clamp(0.0, 1.0)
    }

    fn invert_conditional(&self, u: f64, t: f64) -> f64 {
        let e = self.eps();
        let p = &self.profile;
        let u = u.clamp(e, 1.0 - e);
        let top = self.h(u).min(1.0 - e);
        if t >= 1.0 {
            return top;
        }
        if t <= 0.0 {
            return e;
        }
        if u <= self.u0() {
            let hu = self.h(u);
            return p.inverse_mu(p.mu(hu) - t.ln()).min(hu);
        }
        let s = 1.0 - u;
        let fp = self.f_prime(u);
        let t1 = fp * p.g(s);
        if t <= t1 {
            return p.g_inverse(t / fp).min(s);
        }
        let f = |v: f64| self.conditional_cdf(u, v) - t;
        let (f_lo, f_hi) = (t1 - t, f(top));
        let tol = 2.0 * f64::EPSILON;
        find_root_with_values(f, s, top, f_lo, f_hi, tol).unwrap_or(if f_hi.abs() < f_lo.abs() { top } else { s })
    }

    fn support_bound(&self, u: f64) -> f64 {
        self.h(u)
    }

    fn u_breaks(&self) -> Vec<f64> {
        let u0 = self.u0();
        if u0 > 0.0 {
            vec![u0, 1.0 - u0]
        } else {
            Vec::new()
        }
    }

    fn v_breaks(&self, u: f64) -> Vec<f64> {
        let mut b = vec![1.0 - u];
        if self.profile.support().is_some() {
            b.push(self.h(u));
            b.push(1.0 - self.u0());
            b.push(self.u0());
        }
        b.retain(|&x| x > 0.0 && x < 1.0);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn epsilon(&self) -> f64 {
        self.eps()
    }
}

/// Implements [`Copula`] for a wrapper by forwarding to a `ProfileCopula` field.
macro_rules! forward_copula {
    ($ty:ty, $field:ident) => {
        impl $crate::copula::Copula for $ty {
            fn cdf(&self, u: f64, v: f64) -> f64 {
                self.$field.cdf(u, v)
            }
            fn density(&self, u: f64, v: f64) -> f64 {
                self.$field.density(u, v)
            }
            fn conditional_cdf(&self, u: f64, v: f64) -> f64 {
                self.$field.conditional_cdf(u, v)
            }
            fn invert_conditional(&self, u: f64, t: f64) -> f64 {
                self.$field.invert_conditional(u, t)
            }
            fn support_bound(&self, u: f64) -> f64 {
                self.$field.support_bound(u)
            }
            fn u_breaks(&self) -> Vec<f64> {
                self.$field.u_breaks()
            }
            fn v_breaks(&self, u: f64) -> Vec<f64> {
                self.$field.v_breaks(u)
            }
            fn epsilon(&self) -> f64 {
                self.$field.epsilon()
            }
        }
    };
}
pub(crate) use forward_copula;
