//! Statistics-only precoders: the exponential law of `X = |α Q 1ᵀ|²` and
//! the resulting mean SINR.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::exp_scaled_en;

/// `X ~ Exp(β)`, i.e. `E[X] = 1/β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpApproxParams {
    pub beta: f64,
}

/// How `β` is obtained from `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// `1/β = σ_k² Σᵢ |Σⱼ qᵢⱼ|²`, the exact mean of `X`.
    #[default]
    RowSums,
    /// `β = σ_k² |Σᵢ Σⱼ qᵢⱼ|^(−2)`.
    PaperLiteral,
}

/// How many copies of the common beam interfere with user `k` when no CSI
/// is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoCsiModel {
    /// All `K − 1` other users' beams, as the precoder actually produces.
    #[default]
    Interferers,
    /// A single interference term, `ρX / (1 + ρX)`.
    PaperLiteral,
}

pub fn beta_parameter(q: &DMatrix<Complex64>, sigma_k2: f64, mode: BetaMode) -> Result<ExpApproxParams> {
    if !(sigma_k2 > 0.0) || !sigma_k2.is_finite() {
        return Err(Error::param("sigma_k2", format!("must be positive, got {sigma_k2}")));
    }
    if q.nrows() != q.ncols() {
        return Err(Error::Dimension(format!("Q is {}x{}", q.nrows(), q.ncols())));
    }
    let row_sums: Vec<Complex64> = q.row_iter().map(|r| r.iter().sum()).collect();
    let beta = match mode {
        BetaMode::RowSums => {
            let s: f64 = row_sums.iter().map(|z| z.norm_sqr()).sum();
            1.0 / (sigma_k2 * s)
        }
        BetaMode::PaperLiteral => {
            let total: Complex64 = row_sums.iter().sum();
            sigma_k2 / total.norm_sqr()
        }
    };
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Degenerate("row sums of Q vanish".into()));
    }
    Ok(ExpApproxParams { beta })
}

fn check(beta: f64, rho: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::param("rho", format!("must be positive and finite, got {rho}")));
    }
    Ok(())
}

/// `E[ρσ_k²X / (1 + ρG₂X)] = (σ_k²/G₂) eʸ E₂(y)` with `y = β/(ρG₂)`.
///
/// `eʸ E₂(y) = 1 + y eʸ Ei(−y)`, so this is the usual
/// `σ_k²/G₂ + σ_k²β/(ρG₂²) e^y Ei(−y)` without the cancellation.
pub fn partial_csi_sigma(beta: f64, sigma_k2: f64, g2: f64, rho: f64) -> Result<f64> {
    check(beta, rho)?;
    if !(g2 > 0.0) || !g2.is_finite() {
        return Err(Error::param("g2", "need at least one interferer (K >= 2)"));
    }
    let y = beta / (rho * g2);
    Ok(sigma_k2 / g2 * exp_scaled_en(2, y)?)
}

/// `E[ρX / (1 + cρX)]` for `c` interfering copies of the common beam.
///
/// `c = 0` is the single-user case `ρ/β`.
pub fn no_csi_sigma(beta: f64, rho: f64, copies: usize) -> Result<f64> {
    check(beta, rho)?;
    if copies == 0 {
        return Ok(rho / beta);
    }
    let c = copies as f64;
    Ok(exp_scaled_en(2, beta / (c * rho))? / c)
}

impl NoCsiModel {
    /// Interfering copies seen by one user out of `k`.
    pub fn copies(self, k: usize) -> usize {
        match self {
            NoCsiModel::Interferers => k.saturating_sub(1),
            NoCsiModel::PaperLiteral => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::oracle::exponential_expectation;
    use crate::special::ei;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn beta_examples() {
        let id = DMatrix::<Complex64>::identity(5, 5);
        let b = beta_parameter(&id, 2.0, BetaMode::RowSums).unwrap();
        assert!((1.0 / b.beta - 10.0).abs() < 1e-14);
        let q = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.5), c(1.0)]);
        let b = beta_parameter(&q, 1.0, BetaMode::RowSums).unwrap();
        assert!((1.0 / b.beta - 4.5).abs() < 1e-14);
        let b = beta_parameter(&q, 1.0, BetaMode::PaperLiteral).unwrap();
        assert!((b.beta - 1.0 / 9.0).abs() < 1e-15);
        assert!(beta_parameter(&DMatrix::zeros(2, 2), 1.0, BetaMode::RowSums).is_err());
    }

    #[test]
    fn partial_matches_printed_form() {
        let (beta, s, g2, rho): (f64, f64, f64, f64) = (0.7, 1.3, 4.0, 2.5);
        let y = beta / (rho * g2);
        let printed = s / g2 + s * beta / (rho * g2 * g2) * y.exp() * ei(-y).unwrap();
        let ours = partial_csi_sigma(beta, s, g2, rho).unwrap();
        assert!((ours / printed - 1.0).abs() < 1e-13);
    }

    #[test]
    fn partial_against_quadrature() {
        for &(beta, s, g2) in &[(0.3, 1.0, 7.0), (5.0, 0.2, 0.9)] {
            for &rho in &[0.01, 1.0, 100.0] {
                let want = exponential_expectation(beta, |x| rho * s * x / (1.0 + rho * g2 * x)).unwrap();
                let got = partial_csi_sigma(beta, s, g2, rho).unwrap();
                assert!((got / want - 1.0).abs() < 1e-10, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn partial_high_power_limit() {
        let v = partial_csi_sigma(0.5, 2.0, 3.0, 1e9).unwrap();
        assert!((v / (2.0 / 3.0) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn no_csi_literal_limits() {
        let big = no_csi_sigma(1.0, 1e12, 1).unwrap();
        assert!((big - 1.0).abs() < 1e-9);
        for &rho in &[1e-3, 0.4, 30.0] {
            let v = no_csi_sigma(2.0, rho, 1).unwrap();
            assert!((0.0..=1.0).contains(&v));
            if rho < 0.1 {
                // The printed form cancels catastrophically here.
                continue;
            }
            let printed = 1.0 + 2.0 / rho * (2.0 / rho).exp() * ei(-2.0 / rho).unwrap();
            assert!((v - printed).abs() < 1e-10 * v.max(1e-3));
        }
    }

    #[test]
    fn no_csi_copies() {
        let (beta, rho) = (0.8, 3.0);
        for copies in 0..5 {
            let want =
                exponential_expectation(beta, |x| rho * x / (1.0 + copies as f64 * rho * x)).unwrap();
            let got = no_csi_sigma(beta, rho, copies).unwrap();
            assert!((got / want - 1.0).abs() < 1e-10, "{copies}: {got} vs {want}");
        }
        assert_eq!(NoCsiModel::Interferers.copies(8), 7);
        assert_eq!(NoCsiModel::PaperLiteral.copies(8), 1);
    }
}
