//! Tricomi's confluent hypergeometric function `U(a, b, y)` along integer
//! steps of `a`.

use super::incgamma::ln_upper_incomplete_gamma_scaled;
use crate::error::{Error, Result};

const MAX_START: usize = 1 << 20;

/// `U(a, b, y)` for `a = 1, 2, …, count + 1` at fixed `b` and `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TricomiLadder {
    /// `ln U(1, b, y)`.
    pub ln_u1: f64,
    /// `ratios[k] = U(k + 2, b, y) / U(k + 1, b, y)`.
    pub ratios: Vec<f64>,
}

impl TricomiLadder {
    /// `ln U(n + 1, b, y)`.
    pub fn ln_u(&self, n: usize) -> f64 {
        self.ln_u1 + self.ratios[..n].iter().map(|r| r.ln()).sum::<f64>()
    }
}

/// Builds the ladder `U(1, b, y), U(2, b, y), …` with `count` ratios.
///
/// `U(1, b, y) = y^(1−b) e^y Γ(b − 1, y)` anchors the ladder; the ratios come
/// from the three-term recurrence in `a`, run backwards because `U` is its
/// recessive solution. The backward start is pushed out until the wanted
/// ratios stop moving.
pub fn tricomi_u_ladder(b: f64, y: f64, count: usize) -> Result<TricomiLadder> {
    if !(y > 0.0) || !y.is_finite() || !b.is_finite() {
        return Err(Error::domain(
            "tricomi_u_ladder",
            format!("need y > 0 and finite b, got b = {b}, y = {y}"),
        ));
    }
    let ln_u1 = ln_upper_incomplete_gamma_scaled(b - 1.0, y)? + (1.0 - b) * y.ln();
    if count == 0 {
        return Ok(TricomiLadder {
            ln_u1,
            ratios: Vec::new(),
        });
    }
    let mut start = 2 * count + 32;
    let mut prev = backward_ratios(b, y, count, start);
    loop {
        start *= 2;
        if start > MAX_START {
            return Err(Error::NoConvergence {
                what: "Tricomi U backward recurrence",
                limit: MAX_START,
            });
        }
        let next = backward_ratios(b, y, count, start);
        let settled = prev
            .iter()
            .zip(&next)
            .all(|(p, q)| (p - q).abs() <= 1e-15 * q.abs());
        prev = next;
        if settled {
            break;
        }
    }
    if prev.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::domain(
            "tricomi_u_ladder",
            format!("ratios left the positive range at b = {b}, y = {y}"),
        ));
    }
    Ok(TricomiLadder {
        ln_u1,
        ratios: prev,
    })
}

/// `U(a)/U(a−1)` for `a = 2..=count+1`, from
/// `U(a−1) + (b − 2a − y) U(a) + a(a − b + 1) U(a+1) = 0`.
fn backward_ratios(b: f64, y: f64, count: usize, start: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    let mut rho = 0.0;
    for a in (2..=start).rev() {
        let fa = a as f64;
        rho = 1.0 / (2.0 * fa + y - b - fa * (fa - b + 1.0) * rho);
        if a - 2 < count {
            out[a - 2] = rho;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_to_infinity;
    use crate::special::ln_gamma;

    /// `U(a, b, y) = Γ(a)^(−1) ∫_0^∞ e^(−yt) t^(a−1) (1 + t)^(b−a−1) dt`.
    fn oracle(a: f64, b: f64, y: f64) -> f64 {
        let q = integrate_to_infinity(
            |t| (-y * t).exp() * t.powf(a - 1.0) * (1.0 + t).powf(b - a - 1.0),
            0.0,
            (a / y).clamp(0.1, 50.0),
            0.0,
            1e-13,
        )
        .unwrap()
        .value;
        q / ln_gamma(a).unwrap().exp()
    }

    #[test]
    fn ladder_against_integral_representation() {
        for &(b, y) in &[(0.5, 0.3), (-3.2, 1.7), (-40.6, 0.02), (1.5, 12.0)] {
            let ladder = tricomi_u_ladder(b, y, 8).unwrap();
            for n in [0usize, 1, 3, 8] {
                let got = ladder.ln_u(n).exp();
                let want = oracle(n as f64 + 1.0, b, y);
                assert!(((got - want) / want).abs() < 1e-9, "b = {b}, y = {y}, n = {n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn b_equals_a_plus_one_is_power() {
        // U(a, a + 1, y) = y^(−a)
        let y = 0.8;
        let ladder = tricomi_u_ladder(2.0, y, 0).unwrap();
        assert!((ladder.ln_u1.exp() - 1.0 / y).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_y() {
        assert!(tricomi_u_ladder(1.0, 0.0, 3).is_err());
    }
}
