//! Exponential integrals.

use super::gamma::EULER_GAMMA;
use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// `e^x E_n(x)` for integer `n >= 0`.
///
/// Defined for `x > 0`, and at `x = 0` when `n >= 2`.
pub fn exp_scaled_en(n: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() || (x == 0.0 && n <= 1) {
        return Err(Error::domain(
            "exp_scaled_en",
            format!("E_{n}({x}) is undefined or infinite"),
        ));
    }
    if n == 0 {
        return Ok(1.0 / x);
    }
    if x == 0.0 {
        return Ok(1.0 / (n as f64 - 1.0));
    }
    if x >= 1.0 {
        return en_continued_fraction(n, x);
    }
    Ok(en_series(n, x)? * x.exp())
}

fn en_continued_fraction(n: u32, x: f64) -> Result<f64> {
    let nm1 = n as f64 - 1.0;
    let mut b = x + n as f64;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let fi = i as f64;
        let a = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        what: "exponential integral continued fraction",
        limit: MAX_ITER,
    })
}

fn en_series(n: u32, x: f64) -> Result<f64> {
    let nm1 = n as i64 - 1;
    let mut ans = if nm1 != 0 {
        1.0 / nm1 as f64
    } else {
        -x.ln() - EULER_GAMMA
    };
    let mut fact = 1.0;
    for i in 1..=MAX_ITER as i64 {
        fact *= -x / i as f64;
        let del = if i != nm1 {
            -fact / (i - nm1) as f64
        } else {
            let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / k as f64).sum::<f64>();
            fact * (-x.ln() + psi)
        };
        ans += del;
        if del.abs() < ans.abs() * EPS {
            return Ok(ans);
        }
    }
    Err(Error::NoConvergence {
        what: "exponential integral series",
        limit: MAX_ITER,
    })
}

/// `E_1(x)` for `x > 0`.
pub fn e1(x: f64) -> Result<f64> {
    Ok(exp_scaled_en(1, x)? * (-x).exp())
}

/// The exponential integral `Ei(x)` for `x < 0`, as `−E_1(−x)`.
///
/// Positive arguments are rejected; nothing in the throughput formulas needs
/// them.
pub fn ei(x: f64) -> Result<f64> {
    if !(x < 0.0) || !x.is_finite() {
        return Err(Error::domain("ei", format!("x = {x} must be negative and finite")));
    }
    Ok(-e1(-x)?)
}
