//! Hermitian eigendecomposition by the cyclic Jacobi method.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Relative threshold below which negative eigenvalues are treated as
/// rounding noise and clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Eigenvalues (descending, nonnegative) and unitary eigenvectors of a
/// Hermitian positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<Complex64>,
}

impl Spectrum {
    /// `L(λ, n) = Σ λ_i^n`.
    pub fn spectral_sum(&self, n: i32) -> f64 {
        spectral_sum(&self.eigenvalues, n)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `U diag(λ) Uᴴ`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * u.adjoint()
    }
}

/// `Σ λ_i^n`.
pub fn spectral_sum(eigenvalues: &[f64], n: i32) -> f64 {
    eigenvalues.iter().map(|&l| l.powi(n)).sum()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized as `(Q + Qᴴ)/2` first. Eigenvalues down to
/// `−PSD_TOLERANCE · max λ` are clamped to zero; anything more negative is
/// reported as an error.
pub fn hermitian_evd(q: &DMatrix<Complex64>) -> Result<Spectrum> {
    let (values, vectors) = jacobi_eigen(q)?;
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let floor = -PSD_TOLERANCE * max;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let n = values.len();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let v = values[src];
        if v < floor {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: v,
                tolerance: -floor,
            });
        }
        eigenvalues.push(v.max(0.0));
        eigenvectors.set_column(dst, &vectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Raw cyclic Jacobi: returns unsorted eigenvalues and eigenvectors.
pub fn jacobi_eigen(q: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = q.nrows();
    if n != q.ncols() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", n, q.ncols())));
    }
    if q.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("matrix has non-finite entries".into()));
    }
    let mut a = (q + q.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            let values = (0..n).map(|i| a[(i, i)].re).collect();
            return Ok((values, v));
        }
        for p in 0..n {
            for qi in (p + 1)..n {
                rotate(&mut a, &mut v, p, qi, scale);
            }
        }
    }
    Err(Error::NoConvergence {
        what: "Jacobi eigenvalue sweeps",
        limit: MAX_SWEEPS,
    })
}

fn rotate(a: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>, p: usize, q: usize, scale: f64) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r <= 1e-18 * scale {
        return;
    }
    // Phase-rotate the pair to a real off-diagonal, then a real rotation.
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.nrows();
    let e_minus = phase.conj();
    // Columns: A ← A G with G_pp = c, G_pq = s, G_qp = −s e^{−iφ}, G_qq = c e^{−iφ}.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * e_minus * s;
        a[(k, q)] = akp * s + akq * e_minus * c;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }
    // Rows: A ← Gᴴ A.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}
