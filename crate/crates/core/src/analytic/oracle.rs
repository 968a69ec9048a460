//! Quadrature oracles for the closed forms.

use std::cell::RefCell;

use super::bivariate::BivariateGamma;
use super::moments::GammaApproxParams;
use crate::error::{Error, Result};
use crate::quadrature::integrate_to_infinity;
use crate::special::SeriesControl;

/// Absolute tolerance of the outer quadrature.
pub const ORACLE_ABS_TOL: f64 = 1e-9;

/// `∫∫ ρx₁²/(1+ρx₃) f(x₁, x₃) dx₁ dx₃` by nested adaptive quadrature
/// against the bivariate density, `x₃` outside.
pub fn jensen_expectation_oracle(p: &GammaApproxParams, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::param("rho", format!("must be positive and finite, got {rho}")));
    }
    let dist = BivariateGamma::new(*p, SeriesControl::new(1e-14, 5000)?)?;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let record = |e: Error| {
        failure.borrow_mut().get_or_insert(e);
        f64::NAN
    };
    let x1_scale = p.nu * p.theta;
    let outer = integrate_to_infinity(
        |x3| {
            let mut slice = match dist.slice(x3) {
                Ok(s) => s,
                Err(e) => return record(e),
            };
            let inner = integrate_to_infinity(
                |x1| match slice.density(x1) {
                    Ok(f) => x1 * x1 * f,
                    Err(e) => record(e),
                },
                0.0,
                x1_scale,
                1e-13,
                1e-12,
            );
            match inner {
                Ok(v) => rho * v.value / (1.0 + rho * x3),
                Err(e) => record(e),
            }
        },
        0.0,
        p.mu * p.phi,
        ORACLE_ABS_TOL * 1e-2,
        1e-11,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(outer?.value)
}

/// `E[g(X)]` for `X ~ Exp(β)`, by quadrature.
pub fn exponential_expectation<F: FnMut(f64) -> f64>(beta: f64, mut g: F) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    let v = integrate_to_infinity(|x| g(x) * beta * (-beta * x).exp(), 0.0, 1.0 / beta, 0.0, 1e-13)?;
    Ok(v.value)
}
