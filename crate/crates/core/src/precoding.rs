//! Matched-filter precoders, SINR evaluation and the equivalent SINR model.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::analytic::CsiMode;
use crate::coupling::CouplingModel;
use crate::error::{Error, Result};

/// Which precoder produced a [`Precoder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderMode {
    Full,
    Partial,
    None,
    Optimal,
}

impl From<CsiMode> for PrecoderMode {
    fn from(c: CsiMode) -> Self {
        match c {
            CsiMode::Full => PrecoderMode::Full,
            CsiMode::Partial => PrecoderMode::Partial,
            CsiMode::None => PrecoderMode::None,
        }
    }
}

/// How a matched filter is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MfScaling {
    /// `W = √(P/M) Ĥᴴ`; the radiated power varies with the channel.
    #[default]
    PerElement,
    /// Same directions, rescaled so that `‖W‖²_F = P`.
    TotalPower,
}

/// `M × K` precoding matrix; column `k` serves user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub w: DMatrix<Complex64>,
    pub mode: PrecoderMode,
    /// `‖W‖²_F`, W.
    pub power_used: f64,
}

impl Precoder {
    pub fn new(w: DMatrix<Complex64>, mode: PrecoderMode) -> Self {
        let power_used = w.iter().map(|z| z.norm_sqr()).sum();
        Precoder { w, mode, power_used }
    }

    /// Rescales to total power `p`.
    pub fn with_total_power(self, p: f64) -> Result<Self> {
        if !(self.power_used > 0.0) {
            return Err(Error::Degenerate("cannot rescale an all-zero precoder".into()));
        }
        let s = Complex64::new((p / self.power_used).sqrt(), 0.0);
        Ok(Precoder::new(self.w * s, self.mode))
    }

    pub fn scaled(self, scaling: MfScaling, p: f64) -> Result<Self> {
        match scaling {
            MfScaling::PerElement => Ok(self),
            MfScaling::TotalPower => self.with_total_power(p),
        }
    }
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    Ok(())
}

/// `W = √(P/M) Ĥᴴ` from a `K × M` channel estimate.
pub fn mf_precoder_full(h_known: &DMatrix<Complex64>, p: f64) -> Result<Precoder> {
    check_power(p)?;
    let m = h_known.ncols() as f64;
    let s = Complex64::new((p / m).sqrt(), 0.0);
    Ok(Precoder::new(h_known.adjoint() * s, PrecoderMode::Full))
}

/// Column `k` is `√(P/M) σ_k (1_M R)ᴴ`.
pub fn mf_precoder_partial(model: &CouplingModel, variances: &[f64], p: f64) -> Result<Precoder> {
    check_power(p)?;
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::param("variances", "must be positive"));
    }
    let beam = common_beam(model, p);
    let w = DMatrix::from_fn(model.m(), variances.len(), |i, k| beam[i] * variances[k].sqrt());
    Ok(Precoder::new(w, PrecoderMode::Partial))
}

/// Every column is `√(P/M) (1_M R)ᴴ`.
pub fn mf_precoder_no_csi(model: &CouplingModel, k: usize, p: f64) -> Result<Precoder> {
    check_power(p)?;
    if k == 0 {
        return Err(Error::param("k", "need at least one user"));
    }
    let beam = common_beam(model, p);
    let w = DMatrix::from_fn(model.m(), k, |i, _| beam[i]);
    Ok(Precoder::new(w, PrecoderMode::None))
}

fn common_beam(model: &CouplingModel, p: f64) -> Vec<Complex64> {
    let s = (p / model.m() as f64).sqrt();
    model.ones_times_r().iter().map(|z| z.conj() * s).collect()
}

/// `SINR_k = |h_k w_k|² / (N0 + Σ_{j≠k} |h_k w_j|²)` on the true channel.
pub fn sinr_per_user(h_true: &DMatrix<Complex64>, w: &DMatrix<Complex64>, n0: f64) -> Result<Vec<f64>> {
    if h_true.ncols() != w.nrows() || h_true.nrows() != w.ncols() {
        return Err(Error::Dimension(format!(
            "channel is {}x{}, precoder is {}x{}",
            h_true.nrows(),
            h_true.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if !(n0 > 0.0) {
        return Err(Error::param("n0", "must be positive"));
    }
    let gains = (h_true * w).map(|z| z.norm_sqr());
    Ok((0..gains.nrows())
        .map(|k| {
            let row = gains.row(k);
            let interference: f64 = row.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, g)| g).sum();
            row[k] / (n0 + interference)
        })
        .collect())
}

/// One draw of `ρX₁² / (1 + ρX₂Y)`.
pub fn sinr_equivalent_sample<R: Rng + ?Sized>(
    eigenvalues: &[f64],
    sigma_k2: f64,
    interferers: &[f64],
    rho: f64,
    rng: &mut R,
) -> f64 {
    let (mut x1, mut x2) = (0.0, 0.0);
    for &l in eigenvalues {
        let e: f64 = sigma_k2 * Distribution::<f64>::sample(&Exp1, rng);
        x1 += l * e;
        x2 += l * l * e;
    }
    let y: f64 = interferers.iter().map(|&v| v * Distribution::<f64>::sample(&Exp1, rng)).sum::<f64>();
    rho * x1 * x1 / (1.0 + rho * x2 * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, effective_channel};
    use crate::coupling::{coupling_matrix, excitation_matrix, CouplingKernel};
    use crate::geometry::{build_array_geometry, ArrayLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn model(m: usize, seed: u64) -> CouplingModel {
        let g = build_array_geometry(m, ArrayLayout::Line { spacing: 0.05 }).unwrap();
        let cm = coupling_matrix(&g, 0.1874, CouplingKernel::Sinc).unwrap();
        CouplingModel::new(cm, excitation_matrix(m, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap()
    }

    #[test]
    fn single_user_unit_channel() {
        let h = DMatrix::from_row_slice(1, 3, &[c(1.0), c(0.0), c(0.0)]);
        let pc = mf_precoder_full(&h, 6.0).unwrap();
        assert!((pc.w[(0, 0)] - c(2f64.sqrt())).norm() < 1e-15);
        assert_eq!(pc.w[(1, 0)], c(0.0));
        let (p, m, n0) = (6.0, 3.0, 0.5);
        let sinr = sinr_per_user(&h, &pc.w, n0).unwrap();
        assert!((sinr[0] - p / (m * n0)).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_users_do_not_interfere() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(2.0)]);
        let pc = mf_precoder_full(&h, 1.0).unwrap();
        let g = &h * &pc.w;
        assert_eq!(g[(0, 1)], c(0.0));
        assert_eq!(g[(1, 0)], c(0.0));
    }

    #[test]
    fn mf_matches_transcribed_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let md = model(8, 1);
        let vars = [1.0, 0.4, 2.0, 0.7];
        let h = effective_channel(&draw_channel(&vars, 8, &mut rng), &md).unwrap();
        let (p, n0) = (2.0, 0.1);
        let rho = p / (8.0 * n0);
        let pc = mf_precoder_full(&h, p).unwrap();
        let ours = sinr_per_user(&h, &pc.w, n0).unwrap();
        let hh = &h * h.adjoint();
        for k in 0..4 {
            let own = hh[(k, k)].norm_sqr();
            let interference: f64 = (0..4).filter(|&j| j != k).map(|j| hh[(k, j)].norm_sqr()).sum();
            let want = rho * own / (1.0 + rho * interference);
            assert!((ours[k] / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn statistics_only_precoders() {
        let md = model(6, 2);
        let vars = [1.0, 0.25, 4.0];
        let part = mf_precoder_partial(&md, &vars, 1.0).unwrap();
        for k in 1..3 {
            for i in 0..6 {
                let ratio = part.w[(i, k)] / part.w[(i, 0)];
                assert!((ratio - c(vars[k].sqrt())).norm() < 1e-12);
            }
        }
        let none = mf_precoder_no_csi(&md, 3, 1.0).unwrap();
        assert_eq!(none.w.column(0), none.w.column(2));
        let id = CouplingModel::new(DMatrix::identity(4, 4), vec![c(1.0); 4]).unwrap();
        let part = mf_precoder_partial(&id, &[9.0], 4.0).unwrap();
        for i in 0..4 {
            assert!((part.w[(i, 0)] - c(3.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn statistics_only_sinr_replays_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let md = model(8, 3);
        let vars = [1.0, 0.3, 2.5];
        let (p, n0) = (1.0, 0.05);
        let rho = p / (8.0 * n0);
        let h = effective_channel(&draw_channel(&vars, 8, &mut rng), &md).unwrap();
        let a = draw_channel(&vars, 8, &mut rng);
        let h2 = effective_channel(&a, &md).unwrap();
        assert_ne!(h, h2);
        let q1 = md.q_row_sums();
        let part = sinr_per_user(&h2, &mf_precoder_partial(&md, &vars, p).unwrap().w, n0).unwrap();
        let none = sinr_per_user(&h2, &mf_precoder_no_csi(&md, 3, p).unwrap().w, n0).unwrap();
        for k in 0..3 {
            let x = (0..8).map(|i| a[(k, i)] * q1[i]).sum::<Complex64>().norm_sqr();
            let g2: f64 = vars.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, v)| v).sum();
            let want_part = rho * vars[k] * x / (1.0 + rho * g2 * x);
            let want_none = rho * x / (1.0 + 2.0 * rho * x);
            assert!((part[k] / want_part - 1.0).abs() < 1e-10);
            assert!((none[k] / want_none - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn total_power_rescaling() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.5), c(-1.0)]);
        let pc = mf_precoder_full(&h, 3.0).unwrap().with_total_power(3.0).unwrap();
        assert!((pc.power_used - 3.0).abs() < 1e-14);
    }

    #[test]
    fn equivalent_sample_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = sinr_equivalent_sample(&[1.0; 4], 1.0, &[], 2.0, &mut rng);
        assert!(v >= 0.0);
        // With unit eigenvalues X₁ = X₂, so γ̃ = ρX₁²/(1 + ρX₁Y).
        let mut a = ChaCha8Rng::seed_from_u64(6);
        let mut b = ChaCha8Rng::seed_from_u64(6);
        let g = sinr_equivalent_sample(&[1.0; 4], 1.0, &[0.5], 2.0, &mut a);
        let x1: f64 = (0..4).map(|_| Distribution::<f64>::sample(&Exp1, &mut b)).sum::<f64>();
        let y: f64 = 0.5 * Distribution::<f64>::sample(&Exp1, &mut b);
        assert!((g - 2.0 * x1 * x1 / (1.0 + 2.0 * x1 * y)).abs() < 1e-12 * g);
    }
}
