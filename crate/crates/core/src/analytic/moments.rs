//! Gamma moment matching for the pair `(X₁, X₃)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_sum;

/// Parameters of `X₁ ~ Gamma(ν, θ)`, `X₃ ~ Gamma(μ, φ)` and the dependence
/// parameter `η` of the bivariate gamma law that couples them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaApproxParams {
    pub nu: f64,
    pub theta: f64,
    pub mu: f64,
    pub phi: f64,
    pub eta: f64,
}

impl GammaApproxParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("nu", self.nu), ("theta", self.theta), ("mu", self.mu), ("phi", self.phi)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::param("eta", format!("must lie in [0, 1), got {}", self.eta)));
        }
        Ok(())
    }

    /// Correlation coefficient between `X₁` and `X₃` implied by the
    /// bivariate law, `η √(ν / μ)`.
    pub fn implied_correlation(&self) -> f64 {
        self.eta * (self.nu / self.mu).sqrt()
    }
}

/// Which formulas produce `(ν, θ, μ, φ, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMode {
    /// Exact first and second moments of the quadratic forms.
    #[default]
    FirstPrinciples,
    /// The closed-form expressions exactly as printed alongside the series.
    PaperLiteral,
}

/// How the target correlation is turned into the density parameter `η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMapping {
    /// Choose `η` so that the bivariate law reproduces `Cov(X₁, X₃)`:
    /// `η = corr · √(μ / ν)`.
    #[default]
    CovarianceMatched,
    /// Use the correlation coefficient itself as `η`.
    CorrelationCoefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentOptions {
    pub mode: MomentMode,
    pub eta_mapping: EtaMapping,
}

/// Exact moments of `X₁ = Σλᵢ|α̃ᵢ|²` and `X₃ = (Σλᵢ²|α̃ᵢ|²)(Σσⱼ²|yⱼ|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMoments {
    pub mean_x1: f64,
    pub var_x1: f64,
    pub mean_x3: f64,
    pub var_x3: f64,
    pub cov: f64,
}

impl ExactMoments {
    pub fn correlation(&self) -> f64 {
        self.cov / (self.var_x1 * self.var_x3).sqrt()
    }
}

fn check_inputs(eigenvalues: &[f64], sigma_k2: f64, interferers: &[f64]) -> Result<()> {
    if !(sigma_k2 > 0.0) || !sigma_k2.is_finite() {
        return Err(Error::param("sigma_k2", format!("must be positive, got {sigma_k2}")));
    }
    if interferers.is_empty() {
        return Err(Error::param("interferers", "need at least one interferer (K >= 2)"));
    }
    if interferers.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::param("interferers", "variances must be positive"));
    }
    if eigenvalues.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::param("eigenvalues", "must be nonnegative and finite"));
    }
    if !(spectral_sum(eigenvalues, 2) > 0.0) {
        return Err(Error::Degenerate("spectrum is identically zero".into()));
    }
    Ok(())
}

pub fn exact_moments(eigenvalues: &[f64], sigma_k2: f64, interferers: &[f64]) -> Result<ExactMoments> {
    check_inputs(eigenvalues, sigma_k2, interferers)?;
    let s = sigma_k2;
    let l = |n| spectral_sum(eigenvalues, n);
    let (l1, l2, l3, l4) = (l(1), l(2), l(3), l(4));
    let g2: f64 = interferers.iter().sum();
    let g4: f64 = interferers.iter().map(|v| v * v).sum();
    let mean_x3 = s * l2 * g2;
    let second_x3 = s * s * (l4 + l2 * l2) * (g4 + g2 * g2);
    Ok(ExactMoments {
        mean_x1: s * l1,
        var_x1: s * s * l2,
        mean_x3,
        var_x3: second_x3 - mean_x3 * mean_x3,
        cov: s * s * l3 * g2,
    })
}

/// Fits the two gamma marginals and the dependence parameter.
///
/// `interferers` holds the `K − 1` variances `σⱼ²` of the other users.
pub fn moment_match_gamma(
    eigenvalues: &[f64],
    sigma_k2: f64,
    interferers: &[f64],
    opts: MomentOptions,
) -> Result<GammaApproxParams> {
    let p = match opts.mode {
        MomentMode::FirstPrinciples => {
            let m = exact_moments(eigenvalues, sigma_k2, interferers)?;
            let nu = m.mean_x1 * m.mean_x1 / m.var_x1;
            let mu = m.mean_x3 * m.mean_x3 / m.var_x3;
            let corr = m.correlation();
            let eta = match opts.eta_mapping {
                EtaMapping::CovarianceMatched => corr * (mu / nu).sqrt(),
                EtaMapping::CorrelationCoefficient => corr,
            };
            GammaApproxParams {
                nu,
                theta: m.var_x1 / m.mean_x1,
                mu,
                phi: m.var_x3 / m.mean_x3,
                eta,
            }
        }
        MomentMode::PaperLiteral => literal(eigenvalues, sigma_k2, interferers)?,
    };
    p.validate().map_err(|e| match e {
        Error::InvalidParameter { name: "eta", reason } => {
            Error::Degenerate(format!("moment matching produced an unusable eta: {reason}"))
        }
        other => other,
    })?;
    Ok(p)
}

fn literal(eigenvalues: &[f64], sigma_k2: f64, interferers: &[f64]) -> Result<GammaApproxParams> {
    check_inputs(eigenvalues, sigma_k2, interferers)?;
    let s = sigma_k2;
    let l = |n| spectral_sum(eigenvalues, n);
    let (l1, l2, l4) = (l(1), l(2), l(4));
    let k = interferers.len() as f64 + 1.0;
    let g2: f64 = interferers.iter().sum();
    let g4: f64 = interferers.iter().map(|v| v * v).sum();
    let shared = s * s * (k - 1.0) * l2 * l2 + k * l4;
    Ok(GammaApproxParams {
        nu: l1 * l1 / l2,
        theta: s * l2 / l1,
        mu: (k - 1.0) * l2 * l2 / shared,
        phi: shared / ((k - 1.0) * l2),
        eta: s * l2.sqrt() * g2 / (l4 * g2 + 2.0 * s * l4 * g4).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> MomentOptions {
        MomentOptions::default()
    }

    #[test]
    fn equal_eigenvalues_give_erlang_shape() {
        let eig = vec![0.7; 12];
        let p = moment_match_gamma(&eig, 2.0, &[1.0, 0.5], opts()).unwrap();
        assert!((p.nu - 12.0).abs() < 1e-12);
        assert!((p.nu * p.theta - 2.0 * 0.7 * 12.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_reproduce_targeted_moments() {
        let eig = [3.0, 1.5, 0.4, 0.1];
        let m = exact_moments(&eig, 0.8, &[1.0, 2.0, 0.3]).unwrap();
        let p = moment_match_gamma(&eig, 0.8, &[1.0, 2.0, 0.3], opts()).unwrap();
        assert!((p.nu * p.theta / m.mean_x1 - 1.0).abs() < 1e-12);
        assert!((p.nu * p.theta * p.theta / m.var_x1 - 1.0).abs() < 1e-12);
        assert!((p.mu * p.phi / m.mean_x3 - 1.0).abs() < 1e-12);
        assert!((p.mu * p.phi * p.phi / m.var_x3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_mappings() {
        let eig = [3.0, 1.5, 0.4, 0.1];
        let m = exact_moments(&eig, 1.0, &[1.0; 7]).unwrap();
        let cov = moment_match_gamma(&eig, 1.0, &[1.0; 7], opts()).unwrap();
        assert!((cov.implied_correlation() - m.correlation()).abs() < 1e-12);
        let corr = moment_match_gamma(
            &eig,
            1.0,
            &[1.0; 7],
            MomentOptions {
                eta_mapping: EtaMapping::CorrelationCoefficient,
                ..opts()
            },
        )
        .unwrap();
        assert!((corr.eta - m.correlation()).abs() < 1e-15);
    }

    #[test]
    fn literal_mode_formulas() {
        let eig = [2.0, 1.0];
        let p = moment_match_gamma(
            &eig,
            1.0,
            &[1.0],
            MomentOptions {
                mode: MomentMode::PaperLiteral,
                ..opts()
            },
        )
        .unwrap();
        // L1 = 3, L2 = 5, L4 = 17, K = 2, G2 = G4 = 1.
        assert!((p.nu - 9.0 / 5.0).abs() < 1e-15);
        assert!((p.theta - 5.0 / 3.0).abs() < 1e-15);
        assert!((p.mu - 25.0 / 59.0).abs() < 1e-15);
        assert!((p.phi - 59.0 / 5.0).abs() < 1e-15);
        assert!((p.eta - 5f64.sqrt() / 51f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_single_user() {
        assert!(moment_match_gamma(&[1.0, 1.0], 1.0, &[], opts()).is_err());
        assert!(moment_match_gamma(&[0.0, 0.0], 1.0, &[1.0], opts()).is_err());
    }
}
