//! Closed-form throughput under matched-filter precoding.
//!
//! All rates are in nats per channel use.

mod bivariate;
mod lemma1;
mod lemma2;
mod moments;
pub mod oracle;

pub use bivariate::{bivariate_gamma_pdf, gamma_pdf, BivariateGamma, PdfSlice};
pub use lemma1::{
    interference_free_sigma, lemma1_sigma, lemma1_sigma_with, Lemma1Value, SeriesDiagnostics,
    SeriesForm,
};
pub use lemma2::{beta_parameter, no_csi_sigma, partial_csi_sigma, BetaMode, ExpApproxParams, NoCsiModel};
pub use moments::{
    exact_moments, moment_match_gamma, EtaMapping, ExactMoments, GammaApproxParams, MomentMode,
    MomentOptions,
};
pub use oracle::jensen_expectation_oracle;

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingModel;
use crate::error::{Error, Result};
use crate::linalg::spectral_sum;
use crate::special::SeriesControl;

/// What the transmitter knows about the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Full,
    Partial,
    None,
}

impl CsiMode {
    pub const ALL: [CsiMode; 3] = [CsiMode::Full, CsiMode::Partial, CsiMode::None];

    pub fn name(self) -> &'static str {
        match self {
            CsiMode::Full => "full",
            CsiMode::Partial => "partial",
            CsiMode::None => "none",
        }
    }
}

/// Every modelling switch of the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyticOptions {
    pub moments: MomentOptions,
    pub ctrl: SeriesControl,
    pub form: SeriesForm,
    pub beta_mode: BetaMode,
    pub no_csi: NoCsiModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputResult {
    /// `ln(1 + Σ)`, nats.
    pub value: f64,
    pub csi_mode: CsiMode,
    /// Series bookkeeping, for the full-CSI series only.
    pub diagnostics: Option<SeriesDiagnostics>,
}

fn result(sigma: f64, csi_mode: CsiMode, diagnostics: Option<SeriesDiagnostics>) -> Result<ThroughputResult> {
    let value = sigma.ln_1p();
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::Degenerate(format!("mean SINR {sigma} gives no finite rate")));
    }
    Ok(ThroughputResult {
        value,
        csi_mode,
        diagnostics,
    })
}

/// Full-CSI rate of a user with variance `sigma_k2`, given the spectrum of
/// `Q` and the other users' variances. An empty interferer list is the
/// single-user case.
pub fn throughput_full_csi(
    eigenvalues: &[f64],
    sigma_k2: f64,
    interferers: &[f64],
    rho: f64,
    opts: &AnalyticOptions,
) -> Result<ThroughputResult> {
    if interferers.is_empty() {
        if !(sigma_k2 > 0.0) || !(rho > 0.0) {
            return Err(Error::param("sigma_k2", "variance and rho must be positive"));
        }
        let (l1, l2) = (spectral_sum(eigenvalues, 1), spectral_sum(eigenvalues, 2));
        if !(l2 > 0.0) {
            return Err(Error::Degenerate("spectrum is identically zero".into()));
        }
        let sigma = interference_free_sigma(l1 * l1 / l2, sigma_k2 * l2 / l1, rho);
        return result(sigma, CsiMode::Full, None);
    }
    let p = moment_match_gamma(eigenvalues, sigma_k2, interferers, opts.moments)?;
    let v = lemma1_sigma_with(&p, rho, opts.ctrl, opts.form)?;
    result(v.sigma, CsiMode::Full, Some(v.diagnostics))
}

pub fn throughput_partial_csi(beta: &ExpApproxParams, sigma_k2: f64, g2: f64, rho: f64) -> Result<ThroughputResult> {
    result(partial_csi_sigma(beta.beta, sigma_k2, g2, rho)?, CsiMode::Partial, None)
}

/// No-CSI rate with `copies` interfering beams (see [`NoCsiModel::copies`]).
pub fn throughput_no_csi(beta: &ExpApproxParams, rho: f64, copies: usize) -> Result<ThroughputResult> {
    result(no_csi_sigma(beta.beta, rho, copies)?, CsiMode::None, None)
}

/// Rate of user `k` out of `variances` for the given array.
pub fn user_throughput(
    model: &CouplingModel,
    variances: &[f64],
    k: usize,
    rho: f64,
    csi: CsiMode,
    opts: &AnalyticOptions,
) -> Result<ThroughputResult> {
    let sigma_k2 = *variances
        .get(k)
        .ok_or_else(|| Error::param("k", format!("user {k} out of {}", variances.len())))?;
    let interferers: Vec<f64> = variances
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, &v)| v)
        .collect();
    match csi {
        CsiMode::Full => throughput_full_csi(&model.spectrum.eigenvalues, sigma_k2, &interferers, rho, opts),
        CsiMode::Partial => {
            let beta = beta_parameter(&model.q, sigma_k2, opts.beta_mode)?;
            throughput_partial_csi(&beta, sigma_k2, interferers.iter().sum(), rho)
        }
        CsiMode::None => {
            let beta = beta_parameter(&model.q, sigma_k2, opts.beta_mode)?;
            throughput_no_csi(&beta, rho, opts.no_csi.copies(variances.len()))
        }
    }
}

/// Rate averaged over all users.
pub fn mean_throughput(
    model: &CouplingModel,
    variances: &[f64],
    rho: f64,
    csi: CsiMode,
    opts: &AnalyticOptions,
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..variances.len() {
        total += user_throughput(model, variances, k, rho, csi, opts)?.value;
    }
    Ok(total / variances.len() as f64)
}
