//! The double series for `Σ = E[ρX₁² / (1 + ρX₃)]` under the bivariate
//! gamma law.
//!
//! Integrating `x₁` out leaves
//! `Σ = θ²(1−η)² Σᵢ wᵢ (ν+i)(ν+i+1) · ρ E[1/(1+ρX₃) | i]`
//! with negative binomial weights `wᵢ = (ν)ᵢ ηⁱ (1−η)^ν / i!`. The inner
//! expectation is summed over `j` in one of two equivalent ways:
//!
//! * Kummer form, straight from the `₁F₁` expansion of the density:
//!   `(1/(φ(1−η))) Σⱼ pⱼ r(1−μ−i−j, x)` with `x = 1/(ρφ(1−η))`,
//!   `pⱼ = (μ−ν)ⱼ ηʲ (1−η)^(μ−ν) / j!` and `r(a, x) = eˣ Γ(a, x) x^(−a)`.
//!   The weights change sign when `μ < ν`.
//! * Tricomi form, all terms positive:
//!   `(1/φ) Σⱼ (ν+i)ⱼ ηʲ U(j+1, 2−μ−i, 1/(ρφ))`.

use serde::{Deserialize, Serialize};

use super::moments::GammaApproxParams;
use crate::error::{Error, Result};
use crate::special::{
    ln_gamma, signed_log_pochhammer, tricomi_u_ladder, LogSum, SeriesControl, SignedLog,
    UpperGammaLadder,
};

/// Which inner expansion to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesForm {
    /// Kummer, switching to Tricomi when `μ < ν` and the signed Kummer sums cancel.
    #[default]
    Auto,
    Kummer,
    Tricomi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    /// The form actually summed.
    pub form: SeriesForm,
    /// Terms in the outer index `i`.
    pub outer_terms: usize,
    /// Total inner terms over all `i`.
    pub inner_terms: usize,
    /// Largest inner term count for a single `i`.
    pub max_inner_terms: usize,
    /// Estimated absolute truncation error of `Σ`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Value {
    pub sigma: f64,
    pub diagnostics: SeriesDiagnostics,
}

/// `Σ` with the form picked automatically.
pub fn lemma1_sigma(p: &GammaApproxParams, rho: f64, ctrl: SeriesControl) -> Result<Lemma1Value> {
    lemma1_sigma_with(p, rho, ctrl, SeriesForm::Auto)
}

pub fn lemma1_sigma_with(
    p: &GammaApproxParams,
    rho: f64,
    ctrl: SeriesControl,
    form: SeriesForm,
) -> Result<Lemma1Value> {
    p.validate()?;
    ctrl.validate()?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::param("rho", format!("must be positive and finite, got {rho}")));
    }
    match form {
        SeriesForm::Auto if p.mu >= p.nu => sum_series(p, rho, ctrl, SeriesForm::Kummer, None),
        SeriesForm::Auto => {
            // Mildly signed Kummer weights are harmless; fall back to the
            // positive Tricomi form only when the inner sums cancel.
            match sum_series(p, rho, ctrl, SeriesForm::Kummer, Some(MAX_KUMMER_CANCELLATION)) {
                Err(Error::Degenerate(_)) => sum_series(p, rho, ctrl, SeriesForm::Tricomi, None),
                r => r,
            }
        }
        f => sum_series(p, rho, ctrl, f, None),
    }
}

/// Largest tolerated ratio between the biggest inner Kummer term and the
/// inner sum under [`SeriesForm::Auto`].
const MAX_KUMMER_CANCELLATION: f64 = 1e4;

fn sum_series(
    p: &GammaApproxParams,
    rho: f64,
    ctrl: SeriesControl,
    form: SeriesForm,
    cancellation: Option<f64>,
) -> Result<Lemma1Value> {
    let mut inner = match form {
        SeriesForm::Kummer => Inner::Kummer(KummerInner::new(p, rho, cancellation)?),
        _ => Inner::Tricomi(TricomiInner { y: 1.0 / (rho * p.phi) }),
    };

    let ln_eta = p.eta.ln();
    let mut ln_w = p.nu * (-p.eta).ln_1p();
    let mut total = LogSum::new();
    let mut residual = 0.0;
    let mut diag = SeriesDiagnostics {
        form,
        outer_terms: 0,
        inner_terms: 0,
        max_inner_terms: 0,
        residual: 0.0,
    };
    let mut converged = false;
    for i in 0..ctrl.max_terms {
        let fi = i as f64;
        if i > 0 {
            ln_w += (p.nu + fi - 1.0).ln() + ln_eta - fi.ln();
        }
        let step = inner.eval(p, i, ctrl)?;
        diag.outer_terms += 1;
        diag.inner_terms += step.terms;
        diag.max_inner_terms = diag.max_inner_terms.max(step.terms);
        let ln_prefix = ln_w + (p.nu + fi).ln() + (p.nu + fi + 1.0).ln();
        let ln_term = ln_prefix + step.ln_value;
        total.add_positive(ln_term);
        residual += (ln_prefix + step.ln_residual).exp();
        if p.eta == 0.0 {
            converged = true;
            break;
        }
        // wᵢ(ν+i)(ν+i+1) has ratio η(ν+i+2)/(i+1), decreasing in i, and the
        // inner expectation is decreasing in i, so the tail is geometric.
        let q = p.eta * (p.nu + fi + 2.0) / (fi + 1.0);
        if q < 1.0 {
            let tail = ln_term + (q / (1.0 - q)).ln();
            if tail <= ctrl.rel_tol.ln() + total.ln_magnitude() {
                residual += tail.exp();
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "outer sum of the bivariate gamma series",
            limit: ctrl.max_terms,
        });
    }
    let ln_scale = 2.0 * (p.theta.ln() + (-p.eta).ln_1p());
    let sum = total.finish();
    let sigma = (ln_scale + sum.ln_abs).exp() * sum.sign;
    diag.residual = (ln_scale).exp() * residual;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Degenerate(format!("series summed to {sigma}")));
    }
    Ok(Lemma1Value {
        sigma,
        diagnostics: diag,
    })
}

/// `ln(ρ E[1/(1+ρX₃) | i])` and the log of its truncation residual.
struct InnerValue {
    ln_value: f64,
    ln_residual: f64,
    terms: usize,
}

enum Inner {
    Kummer(KummerInner),
    Tricomi(TricomiInner),
}

impl Inner {
    fn eval(&mut self, p: &GammaApproxParams, i: usize, ctrl: SeriesControl) -> Result<InnerValue> {
        match self {
            Inner::Kummer(k) => k.eval(p, i, ctrl),
            Inner::Tricomi(t) => t.eval(p, i, ctrl),
        }
    }
}

struct KummerInner {
    ladder: UpperGammaLadder,
    /// `ln|pⱼ|` and signs, shared by every `i`.
    weights: Vec<SignedLog>,
    ln_b: f64,
    ln_max_cancellation: f64,
}

impl KummerInner {
    fn new(p: &GammaApproxParams, rho: f64, cancellation: Option<f64>) -> Result<Self> {
        let b = p.phi * (1.0 - p.eta);
        Ok(KummerInner {
            ladder: UpperGammaLadder::new(1.0 - p.mu, 1.0 / (rho * b))?,
            weights: Vec::new(),
            ln_b: b.ln(),
            ln_max_cancellation: cancellation.map_or(f64::INFINITY, f64::ln),
        })
    }

    fn weight(&mut self, p: &GammaApproxParams, j: usize) -> Result<SignedLog> {
        while self.weights.len() <= j {
            let n = self.weights.len();
            let a = p.mu - p.nu;
            let poch = signed_log_pochhammer(a, n as u32);
            let ln_eta_part = if n == 0 { 0.0 } else { n as f64 * p.eta.ln() };
            self.weights.push(SignedLog {
                ln_abs: poch.ln_abs + ln_eta_part + a * (-p.eta).ln_1p() - ln_gamma(n as f64 + 1.0)?,
                sign: poch.sign,
            });
        }
        Ok(self.weights[j])
    }

    fn eval(&mut self, p: &GammaApproxParams, i: usize, ctrl: SeriesControl) -> Result<InnerValue> {
        let mut sum = LogSum::new();
        let mut largest = f64::NEG_INFINITY;
        for j in 0..ctrl.max_terms {
            let w = self.weight(p, j)?;
            if w.sign == 0.0 {
                // (μ−ν)ⱼ hit an exact zero; every later weight is zero too.
                return self.finish(sum, largest, f64::NEG_INFINITY, j + 1);
            }
            let r = self.ladder.ratio(i + j)?;
            let ln_term = w.ln_abs + r.ln();
            largest = largest.max(ln_term);
            sum.add(SignedLog {
                ln_abs: ln_term,
                sign: w.sign,
            });
            if p.eta == 0.0 {
                return self.finish(sum, largest, f64::NEG_INFINITY, 1);
            }
            // Later term ratios are η|a+l|/(l+1) times a ladder ratio below
            // one; once a + j >= 0 that is bounded by q below.
            let a = p.mu - p.nu;
            let fj = j as f64;
            if a + fj >= 0.0 {
                let q = p.eta * ((a + fj) / (fj + 1.0)).max(1.0);
                if q < 1.0 {
                    let tail = ln_term + (q / (1.0 - q)).ln();
                    if tail <= ctrl.rel_tol.ln() + sum.ln_magnitude() {
                        return self.finish(sum, largest, tail, j + 1);
                    }
                }
            }
        }
        Err(Error::NoConvergence {
            what: "inner Kummer-form sum",
            limit: ctrl.max_terms,
        })
    }

    fn finish(&self, sum: LogSum, ln_largest: f64, ln_tail: f64, terms: usize) -> Result<InnerValue> {
        let s = sum.finish();
        if s.sign <= 0.0 {
            return Err(Error::Degenerate(
                "inner Kummer-form sum cancelled to a nonpositive value".into(),
            ));
        }
        if ln_largest - s.ln_abs > self.ln_max_cancellation {
            return Err(Error::Degenerate("inner Kummer-form sum loses too many digits".into()));
        }
        Ok(InnerValue {
            ln_value: s.ln_abs - self.ln_b,
            ln_residual: ln_tail - self.ln_b,
            terms,
        })
    }
}

struct TricomiInner {
    y: f64,
}

impl TricomiInner {
    fn eval(&mut self, p: &GammaApproxParams, i: usize, ctrl: SeriesControl) -> Result<InnerValue> {
        let fi = i as f64;
        let b = 2.0 - p.mu - fi;
        let a = p.nu + fi;
        let ln_phi = p.phi.ln();
        let ln_eta = p.eta.ln();
        let mut count = 64.min(ctrl.max_terms);
        loop {
            let ladder = tricomi_u_ladder(b, self.y, count)?;
            let mut sum = LogSum::new();
            let mut ln_term = ladder.ln_u1;
            sum.add_positive(ln_term);
            if p.eta == 0.0 {
                return Ok(InnerValue {
                    ln_value: ln_term - ln_phi,
                    ln_residual: f64::NEG_INFINITY,
                    terms: 1,
                });
            }
            for j in 1..=count {
                let fj = j as f64;
                let previous = ln_term;
                ln_term += (a + fj - 1.0).ln() + ln_eta + ladder.ratios[j - 1].ln();
                sum.add_positive(ln_term);
                if ln_term < previous {
                    let q = (ln_term - previous).exp();
                    let tail = ln_term + (q / (1.0 - q)).ln();
                    if tail <= ctrl.rel_tol.ln() + sum.ln_magnitude() {
                        return Ok(InnerValue {
                            ln_value: sum.finish().ln_abs - ln_phi,
                            ln_residual: tail - ln_phi,
                            terms: j + 1,
                        });
                    }
                }
            }
            if count >= ctrl.max_terms {
                return Err(Error::NoConvergence {
                    what: "inner Tricomi-form sum",
                    limit: ctrl.max_terms,
                });
            }
            count = (2 * count).min(ctrl.max_terms);
        }
    }
}

/// `Σ` without interference: `E[ρX₁²] = ρθ²ν(ν+1)`.
pub fn interference_free_sigma(nu: f64, theta: f64, rho: f64) -> f64 {
    rho * theta * theta * nu * (nu + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::upper_gamma_ratio;

    fn ctrl() -> SeriesControl {
        SeriesControl::new(1e-13, 2000).unwrap()
    }

    fn p(nu: f64, mu: f64, eta: f64) -> GammaApproxParams {
        GammaApproxParams {
            nu,
            theta: 0.6,
            mu,
            phi: 1.9,
            eta,
        }
    }

    #[test]
    fn forms_agree_when_mu_exceeds_nu() {
        for &(nu, mu, eta) in &[(2.0, 5.5, 0.3), (1.2, 1.2, 0.6), (3.0, 9.0, 0.05)] {
            for &rho in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
                let par = p(nu, mu, eta);
                let k = lemma1_sigma_with(&par, rho, ctrl(), SeriesForm::Kummer).unwrap().sigma;
                let t = lemma1_sigma_with(&par, rho, ctrl(), SeriesForm::Tricomi).unwrap().sigma;
                assert!((k / t - 1.0).abs() < 1e-10, "{par:?} rho {rho}: {k} vs {t}");
            }
        }
    }

    #[test]
    fn forms_agree_for_mildly_signed_weights() {
        let par = p(4.0, 2.5, 0.3);
        for &rho in &[0.1, 1.0, 10.0] {
            let k = lemma1_sigma_with(&par, rho, ctrl(), SeriesForm::Kummer).unwrap().sigma;
            let t = lemma1_sigma_with(&par, rho, ctrl(), SeriesForm::Tricomi).unwrap().sigma;
            assert!((k / t - 1.0).abs() < 1e-9, "rho {rho}: {k} vs {t}");
        }
    }

    #[test]
    fn kummer_does_not_stop_at_a_small_weight() {
        // μ − ν + 9 ≈ 0.16 makes the tenth weight tiny; later ones grow again.
        let par = GammaApproxParams {
            nu: 13.123865652186433,
            theta: 2.6799902064431986,
            mu: 4.28423086307269,
            phi: 154.0115757761015,
            eta: 0.3318725881681395,
        };
        let rho = 1.0 / 22.0;
        let k = lemma1_sigma_with(&par, rho, SeriesControl::default(), SeriesForm::Kummer).unwrap().sigma;
        let t = lemma1_sigma_with(&par, rho, ctrl(), SeriesForm::Tricomi).unwrap().sigma;
        assert!((k / t - 1.0).abs() < 1e-9, "{k} vs {t}");
    }

    #[test]
    fn independent_case_closed_form() {
        // η = 0: Σ = θ²ν(ν+1) r(1−μ, 1/(ρφ)) / φ.
        let par = p(3.5, 2.2, 0.0);
        for &rho in &[0.01, 1.0, 50.0] {
            let x = 1.0 / (rho * par.phi);
            let want = par.theta.powi(2) * par.nu * (par.nu + 1.0) * upper_gamma_ratio(1.0 - par.mu, x).unwrap() / par.phi;
            for form in [SeriesForm::Kummer, SeriesForm::Tricomi] {
                let got = lemma1_sigma_with(&par, rho, ctrl(), form).unwrap().sigma;
                assert!((got / want - 1.0).abs() < 1e-12, "{form:?} rho {rho}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn low_power_limit() {
        let par = p(6.0, 2.0, 0.4);
        let v = lemma1_sigma(&par, 1e-9, ctrl()).unwrap().sigma;
        let want = interference_free_sigma(par.nu, par.theta, 1e-9);
        assert!((v / want - 1.0).abs() < 1e-6);
    }

    #[test]
    fn diagnostics_are_reported() {
        for (par, form) in [(p(8.0, 3.0, 0.5), SeriesForm::Kummer), (p(30.0, 0.5, 0.8), SeriesForm::Tricomi)] {
            let v = lemma1_sigma(&par, 2.0, SeriesControl::default()).unwrap();
            let d = v.diagnostics;
            assert_eq!(d.form, form);
            assert!(d.outer_terms > 1 && d.inner_terms >= d.outer_terms);
            assert!(d.residual >= 0.0 && d.residual < 1e-8 * v.sigma);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(lemma1_sigma(&p(2.0, 2.0, 0.1), 0.0, ctrl()).is_err());
        assert!(lemma1_sigma(&p(2.0, 2.0, 1.0), 1.0, ctrl()).is_err());
        let tight = SeriesControl::new(1e-15, 2).unwrap();
        assert!(matches!(
            lemma1_sigma(&p(20.0, 2.0, 0.9), 1.0, tight),
            Err(Error::NoConvergence { .. })
        ));
    }
}
