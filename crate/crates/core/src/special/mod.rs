//! Scalar special functions used by the closed-form throughput expressions.
//!
//! Everything here is real-valued and double precision. The functions that
//! feed the throughput series come in scaled or logarithmic variants, because
//! the raw quantities over- or underflow long before the products that the
//! series actually need.

mod expint;
mod gamma;
mod incgamma;
mod kummer;
mod tricomi;

pub use expint::{e1, ei, exp_scaled_en};
pub use gamma::{ln_gamma, ln_gamma_1p, log_pochhammer, signed_log_pochhammer, EULER_GAMMA};
pub use incgamma::{
    ln_upper_incomplete_gamma_scaled, upper_gamma_ratio, upper_incomplete_gamma_scaled,
    UpperGammaLadder,
};
pub use kummer::kummer_1f1;
pub use tricomi::{tricomi_u_ladder, TricomiLadder};

use crate::error::{Error, Result};

/// Truncation policy shared by the series evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Stop once the next term (or tail estimate) is below `rel_tol` times the
    /// running sum.
    pub rel_tol: f64,
    /// Hard cap on the number of terms per summation index.
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-10,
            max_terms: 500,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        let ctrl = SeriesControl { rel_tol, max_terms };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::param("rel_tol", "must be a positive finite number"));
        }
        if self.max_terms == 0 {
            return Err(Error::param("max_terms", "must be at least 1"));
        }
        Ok(())
    }
}

/// A real number stored as `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub ln_abs: f64,
    /// One of -1, 0, +1.
    pub sign: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        ln_abs: f64::NEG_INFINITY,
        sign: 0.0,
    };

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Accumulates terms given in log-magnitude form without forming them.
///
/// Positive and negative contributions are kept apart so the only
/// cancellation happens once, in [`LogSum::finish`].
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    pos: ScaledSum,
    neg: ScaledSum,
}

#[derive(Debug, Clone, Copy)]
struct ScaledSum {
    ln_scale: f64,
    acc: f64,
}

impl ScaledSum {
    const EMPTY: ScaledSum = ScaledSum {
        ln_scale: f64::NEG_INFINITY,
        acc: 0.0,
    };

    fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.ln_scale {
            self.acc = self.acc * (self.ln_scale - ln_term).exp() + 1.0;
            self.ln_scale = ln_term;
        } else {
            self.acc += (ln_term - self.ln_scale).exp();
        }
    }

    fn ln_value(&self) -> f64 {
        if self.acc == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.ln_scale + self.acc.ln()
        }
    }
}

impl LogSum {
    pub(crate) fn new() -> Self {
        LogSum {
            pos: ScaledSum::EMPTY,
            neg: ScaledSum::EMPTY,
        }
    }

    pub(crate) fn add(&mut self, term: SignedLog) {
        if term.sign > 0.0 {
            self.pos.add(term.ln_abs);
        } else if term.sign < 0.0 {
            self.neg.add(term.ln_abs);
        }
    }

    pub(crate) fn add_positive(&mut self, ln_term: f64) {
        self.pos.add(ln_term);
    }

    /// Log of the largest absolute partial total seen so far; used for
    /// relative truncation tests.
    pub(crate) fn ln_magnitude(&self) -> f64 {
        self.pos.ln_value().max(self.neg.ln_value())
    }

    pub(crate) fn finish(&self) -> SignedLog {
        let lp = self.pos.ln_value();
        let ln = self.neg.ln_value();
        if lp == ln {
            return SignedLog::ZERO;
        }
        if lp > ln {
            SignedLog {
                ln_abs: lp + (-(ln - lp).exp()).ln_1p(),
                sign: 1.0,
            }
        } else {
            SignedLog {
                ln_abs: ln + (-(lp - ln).exp()).ln_1p(),
                sign: -1.0,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_matches_plain_sum() {
        let terms: [f64; 5] = [3.5, -1.25, 1e-3, -2.0, 0.75];
        let mut s = LogSum::new();
        for &t in &terms {
            s.add(SignedLog {
                ln_abs: f64::ln(t.abs()),
                sign: t.signum(),
            });
        }
        let expected: f64 = terms.iter().sum();
        assert!((s.finish().value() - expected).abs() < 1e-14);
    }

    #[test]
    fn log_sum_survives_huge_terms() {
        let mut s = LogSum::new();
        s.add_positive(2000.0);
        s.add_positive(2000.0);
        let out = s.finish();
        assert!((out.ln_abs - (2000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn control_validation() {
        assert!(SeriesControl::new(0.0, 10).is_err());
        assert!(SeriesControl::new(1e-8, 0).is_err());
        assert!(SeriesControl::new(1e-8, 10).is_ok());
    }
}
