//! Random fading, the effective channel `H = A C I`, and CSI corruption.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::db_to_linear;
use crate::coupling::CouplingModel;
use crate::error::{Error, Result};

/// One draw of `CN(0, variance)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `K × M` fading matrix with row `k` i.i.d. `CN(0, σ_k²)`.
pub fn draw_channel<R: Rng + ?Sized>(variances: &[f64], m: usize, rng: &mut R) -> DMatrix<Complex64> {
    let k = variances.len();
    let mut a = DMatrix::<Complex64>::zeros(k, m);
    for (row, &v) in variances.iter().enumerate() {
        for col in 0..m {
            a[(row, col)] = complex_gaussian(rng, v);
        }
    }
    a
}

/// `H = A R`.
pub fn effective_channel(a: &DMatrix<Complex64>, model: &CouplingModel) -> Result<DMatrix<Complex64>> {
    if a.ncols() != model.m() {
        return Err(Error::Dimension(format!(
            "channel has {} columns, array has {} elements",
            a.ncols(),
            model.m()
        )));
    }
    Ok(a * &model.r)
}

/// `Ĥ = H + E` with `E` i.i.d. `CN(0, σ_e²)`.
pub fn corrupt_csi<R: Rng + ?Sized>(
    h: &DMatrix<Complex64>,
    error_variance: f64,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    if !(error_variance >= 0.0) || !error_variance.is_finite() {
        return Err(Error::param("error_variance", format!("must be >= 0, got {error_variance}")));
    }
    if error_variance == 0.0 {
        return Ok(h.clone());
    }
    let mut out = h.clone();
    for z in out.iter_mut() {
        *z += complex_gaussian(rng, error_variance);
    }
    Ok(out)
}

/// Average per-entry power `E|H_{k,m}|²` over users and elements:
/// `mean_k(σ_k²) · tr(Q) / M`.
pub fn mean_entry_power(variances: &[f64], model: &CouplingModel) -> f64 {
    let mean_var = variances.iter().sum::<f64>() / variances.len() as f64;
    mean_var * model.spectrum.spectral_sum(1) / model.m() as f64
}

/// How a CSI error level is turned into `σ_e²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiErrorScale {
    /// `σ_e² = 10^(dB/10) · E|H_{k,m}|²`.
    #[default]
    Relative,
    /// `σ_e² = 10^(dB/10)`.
    Absolute,
}

impl CsiErrorScale {
    pub fn error_variance(self, error_db: f64, variances: &[f64], model: &CouplingModel) -> f64 {
        match self {
            CsiErrorScale::Relative => db_to_linear(error_db) * mean_entry_power(variances, model),
            CsiErrorScale::Absolute => db_to_linear(error_db),
        }
    }
}

/// A single channel draw.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub a: DMatrix<Complex64>,
    pub h: DMatrix<Complex64>,
    pub h_hat: Option<DMatrix<Complex64>>,
    pub error_variance: f64,
}

impl ChannelRealization {
    pub fn draw<R: Rng + ?Sized>(
        variances: &[f64],
        model: &CouplingModel,
        error_variance: Option<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        let a = draw_channel(variances, model.m(), rng);
        let h = effective_channel(&a, model)?;
        let (h_hat, error_variance) = match error_variance {
            Some(v) => (Some(corrupt_csi(&h, v, rng)?), v),
            None => (None, 0.0),
        };
        Ok(ChannelRealization {
            a,
            h,
            h_hat,
            error_variance,
        })
    }

    /// The channel the transmitter believes in.
    pub fn known(&self) -> &DMatrix<Complex64> {
        self.h_hat.as_ref().unwrap_or(&self.h)
    }
}
