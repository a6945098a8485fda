//! Kendall's τ, the opposite diagonal section, and iterated 2-D integrals.

use std::cell::RefCell;

use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate_with_breaks, QuadratureConfig};

/// Integrates `f(u, v)` over the unit square as an iterated integral, with
/// the copula's discontinuity lines as panel boundaries.
pub fn integrate_square<C, F>(c: &C, f: F, cfg: &QuadratureConfig) -> Result<f64>
where
    C: Copula + ?Sized,
    F: Fn(f64, f64) -> f64,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_cfg = QuadratureConfig {
        rel_tol: cfg.rel_tol * 0.1,
        abs_tol: cfg.abs_tol * 0.1,
        max_subdivisions: cfg.max_subdivisions,
    };
    let outer = integrate_with_breaks(
        |u| match integrate_with_breaks(|v| f(u, v), 0.0, 1.0, &c.v_breaks(u), &inner_cfg) {
            Ok(x) => x,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        0.0,
        1.0,
        &c.u_breaks(),
        cfg,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}

fn diverged(e: Error) -> Error {
    match e {
        Error::NonConvergence { .. } | Error::NonFinite(_) => Error::IntegralDiverged(e.to_string()),
        other => other,
    }
}

/// `ω(u) = C(u, 1 - u)`.
pub fn opposite_diagonal<C: Copula + ?Sized>(c: &C, u: f64) -> f64 {
    c.cdf(u, 1.0 - u)
}

/// `ω'(u) = C'_u(u, 1-u) - C'_v(u, 1-u)`.
pub fn opposite_diagonal_derivative<C: Copula + ?Sized>(c: &C, u: f64) -> f64 {
    c.conditional_cdf(u, 1.0 - u) - c.conditional_cdf_v(u, 1.0 - u)
}

/// Recovers `L(u) = 2 ω(u) / (1 - ω'(u))` from the opposite diagonal.
pub fn l_from_omega(omega: f64, omega_prime: f64) -> Result<f64> {
    let d = 1.0 - omega_prime;
    if d.abs() < 1e-12 {
        return Err(Error::DegenerateDiagonal(d));
    }
    Ok(2.0 * omega / d)
}

/// `-1 + 8 ∫ C(u, 1-u) du`.
///
/// This is the closed form obtained by expanding `C'_u C'_v` over the upper
/// triangle without its cross term; it differs from Kendall's τ (it gives 1/3
/// for the independence copula) and is reported for comparison only.
pub fn kendall_tau_paper<C: Copula + ?Sized>(c: &C, cfg: &QuadratureConfig) -> Result<f64> {
    let mut breaks = c.u_breaks();
    breaks.push(0.5);
    let integral =
        integrate_with_breaks(|u| opposite_diagonal(c, u), 0.0, 1.0, &breaks, cfg).map_err(diverged)?;
    Ok(-1.0 + 8.0 * integral)
}

/// Kendall's τ as `1 - 4 ∬ C'_u C'_v`.
pub fn kendall_tau_direct<C: Copula + ?Sized>(c: &C, cfg: &QuadratureConfig) -> Result<f64> {
    let integral = integrate_square(c, |u, v| c.conditional_cdf(u, v) * c.conditional_cdf_v(u, v), cfg)
        .map_err(diverged)?;
    Ok(1.0 - 4.0 * integral)
}

/// Total mass of the density.
pub fn density_mass<C: Copula + ?Sized>(c: &C, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_square(c, |u, v| c.density(u, v), cfg).map_err(diverged)
}
