//! Confluent hypergeometric function of the first kind.

use super::SeriesControl;
use crate::error::{Error, Result};

/// `₁F₁(a; b; z)` by its defining power series.
///
/// Intended for moderate `|z|`; the series is summed term by term, so for
/// large negative `z` with large `|a|` cancellation limits the accuracy.
pub fn kummer_1f1(a: f64, b: f64, z: f64, ctrl: SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    if !(b > 0.0) {
        return Err(Error::domain("kummer_1f1", format!("b = {b} must be positive")));
    }
    if !(a.is_finite() && z.is_finite()) {
        return Err(Error::domain("kummer_1f1", "arguments must be finite"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..ctrl.max_terms {
        let fnn = n as f64;
        term *= (a + fnn) / (b + fnn) * z / (fnn + 1.0);
        sum += term;
        if term == 0.0 || (term.abs() <= ctrl.rel_tol * sum.abs() && fnn + 1.0 > z.abs()) {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        what: "Kummer 1F1 series",
        limit: ctrl.max_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctrl() -> SeriesControl {
        SeriesControl::new(1e-15, 2000).unwrap()
    }

    #[test]
    fn reduces_to_exponential() {
        for &z in &[-3.0, 0.0, 0.5, 7.0] {
            let v = kummer_1f1(2.5, 2.5, z, ctrl()).unwrap();
            assert!((v - f64::exp(z)).abs() < 1e-13 * f64::exp(z).max(1.0));
        }
    }

    #[test]
    fn terminating_polynomial() {
        // 1F1(−2; 1; z) = 1 − 2z + z²/2
        let z = 0.7;
        let v = kummer_1f1(-2.0, 1.0, z, ctrl()).unwrap();
        assert!((v - (1.0 - 2.0 * z + 0.5 * z * z)).abs() < 1e-15);
    }

    #[test]
    fn kummer_transformation() {
        // 1F1(a; b; z) = e^z 1F1(b − a; b; −z)
        let (a, b, z) = (1.3, 3.7, 2.2);
        let lhs = kummer_1f1(a, b, z, ctrl()).unwrap();
        let rhs = z.exp() * kummer_1f1(b - a, b, -z, ctrl()).unwrap();
        assert!((lhs - rhs).abs() < 1e-13 * lhs);
    }

    #[test]
    fn reference_points() {
        assert_eq!(kummer_1f1(0.3, 1.7, 0.0, ctrl()).unwrap(), 1.0);
        let v = kummer_1f1(1.0, 2.0, 1.0, ctrl()).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_b() {
        assert!(kummer_1f1(1.0, 0.0, 1.0, ctrl()).is_err());
    }
}
