//! Mutual coupling, element excitation and the deterministic correlation
//! matrix `Q = (CI)(CI)ᴴ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::{hermitian_evd, Spectrum};

/// Kernel used for `[C]_{n,m}` as a function of `x = 2π d / λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKernel {
    /// `sin(x) / x`.
    #[default]
    Sinc,
    /// `sin(πx) / (πx)`, for sensitivity checks only.
    NormalizedSinc,
    /// No coupling, `C = I`.
    None,
}

impl CouplingKernel {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            CouplingKernel::Sinc => sinc(x),
            CouplingKernel::NormalizedSinc => sinc(PI * x),
            CouplingKernel::None => {
                if x == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Unnormalized `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `[C]_{n,m} = kernel(2π ‖a_n − a_m‖ / λ)`.
pub fn coupling_matrix(
    geometry: &ArrayGeometry,
    wavelength: f64,
    kernel: CouplingKernel,
) -> Result<DMatrix<f64>> {
    if !(wavelength > 0.0) {
        return Err(Error::param("wavelength", "must be positive"));
    }
    let m = geometry.len();
    let mut c = DMatrix::<f64>::identity(m, m);
    for n in 0..m {
        for k in (n + 1)..m {
            let d = geometry.distance(n, k);
            if d == 0.0 {
                return Err(Error::Degenerate(format!("elements {n} and {k} coincide")));
            }
            let v = kernel.eval(2.0 * PI * d / wavelength);
            c[(n, k)] = v;
            c[(k, n)] = v;
        }
    }
    Ok(c)
}

/// Unit-modulus excitations `e^{jθ_m}` from the given phases.
pub fn excitation_from_phases(phases: &[f64]) -> Vec<Complex64> {
    phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
}

/// Excitations with i.i.d. phases uniform on `[0, 2π)`.
pub fn excitation_matrix<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<Complex64> {
    let phases: Vec<f64> = (0..m).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
    excitation_from_phases(&phases)
}

/// `R = C · diag(i)`.
pub fn combined_matrix(c: &DMatrix<f64>, excitation: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let m = c.nrows();
    if excitation.len() != m || c.ncols() != m {
        return Err(Error::Dimension(format!(
            "coupling is {}x{}, excitation has {} entries",
            m,
            c.ncols(),
            excitation.len()
        )));
    }
    Ok(DMatrix::from_fn(m, m, |n, k| excitation[k] * c[(n, k)]))
}

/// `Q = (C I)(C I)ᴴ`, exactly Hermitian.
pub fn correlation_matrix(c: &DMatrix<f64>, excitation: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let r = combined_matrix(c, excitation)?;
    let q = &r * r.adjoint();
    Ok((&q + q.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Everything deterministic about the array: `C`, `I`, `R`, `Q` and the
/// spectrum of `Q`.
#[derive(Debug, Clone)]
pub struct CouplingModel {
    pub c: DMatrix<f64>,
    pub excitation: Vec<Complex64>,
    pub r: DMatrix<Complex64>,
    pub q: DMatrix<Complex64>,
    pub spectrum: Spectrum,
}

impl CouplingModel {
    pub fn new(c: DMatrix<f64>, excitation: Vec<Complex64>) -> Result<Self> {
        let r = combined_matrix(&c, &excitation)?;
        let q = correlation_matrix(&c, &excitation)?;
        let spectrum = hermitian_evd(&q)?;
        Ok(CouplingModel {
            c,
            excitation,
            r,
            q,
            spectrum,
        })
    }

    /// Builds the coupling for `geometry` with random excitation phases.
    pub fn from_geometry<R: Rng + ?Sized>(
        geometry: &ArrayGeometry,
        wavelength: f64,
        kernel: CouplingKernel,
        rng: &mut R,
    ) -> Result<Self> {
        let c = coupling_matrix(geometry, wavelength, kernel)?;
        let excitation = excitation_matrix(geometry.len(), rng);
        Self::new(c, excitation)
    }

    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    /// `1_M R`, the row vector used by the statistics-only precoders.
    pub fn ones_times_r(&self) -> Vec<Complex64> {
        (0..self.m())
            .map(|k| self.r.column(k).iter().sum())
            .collect()
    }

    /// Row sums of `Q`, i.e. `Q 1ᵀ`.
    pub fn q_row_sums(&self) -> Vec<Complex64> {
        (0..self.m()).map(|i| self.q.row(i).iter().sum()).collect()
    }
}

/// `G(σ, n) = Σ_j σ_j^n` over interferer standard deviations, taking the
/// variances `σ_j²` as input.
pub fn variance_sum(variances: &[f64], n: i32) -> f64 {
    variances.iter().map(|&v| v.sqrt().powi(n)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_array_geometry, ArrayLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn sinc_examples() {
        assert_eq!(sinc(0.0), 1.0);
        let lambda = 0.2;
        assert!(sinc(2.0 * PI * (lambda / 2.0) / lambda).abs() < 1e-15);
        let v = sinc(2.0 * PI * (lambda / 4.0) / lambda);
        assert!((v - 2.0 / PI).abs() < 1e-15);
        assert!((sinc(1e-5) - (1e-5f64).sin() / 1e-5).abs() < 1e-15);
    }

    #[test]
    fn coupling_unit_diagonal_and_bounded() {
        let g = build_array_geometry(16, ArrayLayout::Grid { spacing: 0.05 }).unwrap();
        let c = coupling_matrix(&g, 0.1874, CouplingKernel::Sinc).unwrap();
        for n in 0..16 {
            assert_eq!(c[(n, n)], 1.0);
            for k in 0..16 {
                assert_eq!(c[(n, k)], c[(k, n)]);
                assert!(c[(n, k)].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn excitation_examples() {
        let i = excitation_from_phases(&[0.0, 0.0]);
        assert_eq!(i, vec![Complex64::new(1.0, 0.0); 2]);
        let i = excitation_from_phases(&[PI]);
        assert!((i[0] + 1.0).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for z in excitation_matrix(64, &mut rng) {
            assert!((z.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn q_equals_c_ct_under_unit_modulus() {
        let g = build_array_geometry(9, ArrayLayout::Aperture { side: 0.3 }).unwrap();
        let c = coupling_matrix(&g, 0.1874, CouplingKernel::Sinc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = correlation_matrix(&c, &excitation_matrix(9, &mut rng)).unwrap();
        let cct = (&c * c.transpose()).map(|x| Complex64::new(x, 0.0));
        assert!(max_abs_diff(&q, &cct) < 1e-12);
        let ident = DMatrix::<f64>::identity(4, 4);
        let q = correlation_matrix(&ident, &excitation_matrix(4, &mut rng)).unwrap();
        assert!(max_abs_diff(&q, &DMatrix::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn two_element_eigenvalues() {
        let cc = -0.4;
        let c = DMatrix::from_row_slice(2, 2, &[1.0, cc, cc, 1.0]);
        let model = CouplingModel::new(c, excitation_from_phases(&[0.3, 2.0])).unwrap();
        let ev = &model.spectrum.eigenvalues;
        let mut want = [(1.0 + cc) * (1.0 + cc), (1.0 - cc) * (1.0 - cc)];
        want.sort_by(|a, b| b.total_cmp(a));
        assert!((ev[0] - want[0]).abs() < 1e-14 && (ev[1] - want[1]).abs() < 1e-14);
    }

    #[test]
    fn far_spacing_decouples() {
        let lambda = 0.1874;
        let g = build_array_geometry(9, ArrayLayout::Grid { spacing: 10.0 * lambda }).unwrap();
        let c = coupling_matrix(&g, lambda, CouplingKernel::Sinc).unwrap();
        let off = (0..9)
            .flat_map(|i| (0..9).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| c[(i, j)].abs())
            .fold(0.0, f64::max);
        assert!(off <= 1.0 / (2.0 * PI * 10.0));
    }

    #[test]
    fn variance_sum_examples() {
        assert_eq!(variance_sum(&[1.0, 1.0, 1.0], 2), 3.0);
        assert_eq!(variance_sum(&[], 2), 0.0);
        let v = variance_sum(&[0.25, 0.04], 4);
        assert!((v - (0.5f64.powi(4) + 0.2f64.powi(4))).abs() < 1e-16);
    }
}
