//! Bivariate gamma density with distinct shapes, written as a negative
//! binomial mixture over `i` with a Kummer function in `x₃`.

use super::moments::GammaApproxParams;
use crate::error::{Error, Result};
use crate::special::{kummer_1f1, ln_gamma, SeriesControl};

const NEGLIGIBLE_LN_DENSITY: f64 = -700.0;

/// The joint law of `(X₁, X₃)` for fixed parameters.
#[derive(Debug, Clone, Copy)]
pub struct BivariateGamma {
    pub params: GammaApproxParams,
    pub ctrl: SeriesControl,
}

impl BivariateGamma {
    pub fn new(params: GammaApproxParams, ctrl: SeriesControl) -> Result<Self> {
        params.validate()?;
        ctrl.validate()?;
        Ok(BivariateGamma { params, ctrl })
    }

    pub fn pdf(&self, x1: f64, x3: f64) -> Result<f64> {
        self.slice(x3)?.density(x1)
    }

    /// Everything that depends only on `x₃`, for repeated evaluation along
    /// `x₁`.
    ///
    /// Where the `X₃` marginal density is below `e^−700` the joint density
    /// is reported as zero.
    pub fn slice(&self, x3: f64) -> Result<PdfSlice> {
        if !(x3 > 0.0) || !x3.is_finite() {
            return Err(Error::param("x3", format!("must be positive, got {x3}")));
        }
        let p = self.params;
        let one_minus = 1.0 - p.eta;
        let ln_marginal = (p.mu - 1.0) * x3.ln() - x3 / p.phi - p.mu * p.phi.ln() - ln_gamma(p.mu)?;
        Ok(PdfSlice {
            dist: *self,
            x3,
            negligible: ln_marginal < NEGLIGIBLE_LN_DENSITY,
            c1: p.theta * one_minus,
            c3: p.phi * one_minus,
            ln_eta: p.eta.ln(),
            coeffs: Vec::new(),
        })
    }
}

/// Coefficients `sign · exp(ln)` multiplying `x₁^(ν+i−1) e^(−x₁/(θ(1−η)))`.
#[derive(Debug, Clone)]
pub struct PdfSlice {
    dist: BivariateGamma,
    x3: f64,
    negligible: bool,
    c1: f64,
    c3: f64,
    ln_eta: f64,
    coeffs: Vec<(f64, f64)>,
}

impl PdfSlice {
    fn coefficient(&mut self, i: usize) -> Result<(f64, f64)> {
        while self.coeffs.len() <= i {
            let n = self.coeffs.len();
            let p = self.dist.params;
            let fi = n as f64;
            // (ν)_i / Γ(ν + i) = 1 / Γ(ν)
            let weight = if n == 0 {
                0.0
            } else {
                fi * self.ln_eta - ln_gamma(fi + 1.0)?
            };
            let ln = weight - ln_gamma(p.nu)? + p.mu * (-p.eta).ln_1p()
                - (p.mu + fi) * self.c3.ln()
                - (p.nu + fi) * self.c1.ln()
                - ln_gamma(p.mu + fi)?
                + (p.mu + fi - 1.0) * self.x3.ln()
                - self.x3 / self.c3;
            let f = kummer_1f1(p.mu - p.nu, p.mu + fi, p.eta * self.x3 / self.c3, self.dist.ctrl)?;
            let entry = if f == 0.0 {
                (f64::NEG_INFINITY, 0.0)
            } else {
                (ln + f.abs().ln(), f.signum())
            };
            self.coeffs.push(entry);
        }
        Ok(self.coeffs[i])
    }

    pub fn density(&mut self, x1: f64) -> Result<f64> {
        if !(x1 > 0.0) || !x1.is_finite() {
            return Err(Error::param("x1", format!("must be positive, got {x1}")));
        }
        if self.negligible {
            return Ok(0.0);
        }
        let p = self.dist.params;
        let ctrl = self.dist.ctrl;
        let lx = x1.ln();
        let base = -x1 / self.c1;
        let mut sum = 0.0;
        let mut magnitude = 0.0;
        let mut previous = f64::INFINITY;
        for i in 0..ctrl.max_terms {
            let (ln, sign) = self.coefficient(i)?;
            let term = sign * (ln + (p.nu + i as f64 - 1.0) * lx + base).exp();
            sum += term;
            magnitude += term.abs();
            if p.eta == 0.0 {
                return Ok(sum);
            }
            let size = term.abs();
            if i > 0 && size <= previous && size <= ctrl.rel_tol * magnitude {
                return Ok(sum);
            }
            previous = size;
        }
        Err(Error::NoConvergence {
            what: "bivariate gamma density series",
            limit: ctrl.max_terms,
        })
    }
}

/// `f(x₁, x₃)` of the bivariate gamma law.
pub fn bivariate_gamma_pdf(x1: f64, x3: f64, p: &GammaApproxParams, ctrl: SeriesControl) -> Result<f64> {
    BivariateGamma::new(*p, ctrl)?.pdf(x1, x3)
}

/// `Gamma(shape, scale)` density.
pub fn gamma_pdf(x: f64, shape: f64, scale: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(((shape - 1.0) * x.ln() - x / scale - shape * scale.ln() - ln_gamma(shape)?).exp())
}
