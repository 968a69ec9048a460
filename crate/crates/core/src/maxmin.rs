//! Max-min SINR beamforming under a total power budget.
//!
//! Feasibility of a common target `t` is decided in the virtual uplink:
//! with MMSE receivers the minimal uplink powers `λ` solve
//! `λ_k = 1 / ((1 + 1/t) [G (I + ΛG)⁻¹]_kk)` (noise normalized to one,
//! `G = ĤĤᴴ`), and `t` is feasible iff `N0 Σλ ≤ P`. The best `t` is found by
//! bisection; the final beam directions are then polished by alternating
//! MMSE receivers with uplink power balancing, and the downlink powers come
//! from the Perron vector of the balanced downlink problem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precoding::{sinr_per_user, Precoder, PrecoderMode};

pub const MAX_BISECTION_STEPS: usize = 200;
pub const MAX_FIXED_POINT_ITERATIONS: usize = 10_000;
const MAX_DOUBLINGS: usize = 60;
const MAX_POLISH_ROUNDS: usize = 500;

/// How the optimal common SINR is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Bisection on `t` with the uplink feasibility test, then polishing.
    #[default]
    Bisection,
    /// Alternating MMSE receivers and uplink power balancing only; much
    /// faster and reaches the same optimum.
    PowerBalancing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative bisection tolerance on `t`.
    pub tol: f64,
    pub method: SolverMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            method: SolverMethod::Bisection,
        }
    }
}

impl SolverOptions {
    pub fn with_method(method: SolverMethod) -> Self {
        SolverOptions {
            method,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    pub precoder: Precoder,
    /// Balanced minimum SINR, linear.
    pub t_star: f64,
    pub per_user_sinr: Vec<f64>,
    /// Bisection steps taken.
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of one feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Downlink precoder meeting the target, when feasible.
    pub candidate: Option<DMatrix<Complex64>>,
    /// Fixed-point iterations spent.
    pub iterations: usize,
    /// Normalized uplink powers at exit.
    pub uplink: Vec<f64>,
}

fn check_inputs(h: &DMatrix<Complex64>, p: f64, n0: f64) -> Result<()> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(Error::Dimension("empty channel".into()));
    }
    if !(p > 0.0) || !p.is_finite() || !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::param("p", format!("need P > 0 and N0 > 0, got {p} and {n0}")));
    }
    if (0..h.nrows()).any(|k| h.row(k).iter().all(|z| z.norm_sqr() == 0.0)) {
        return Err(Error::Degenerate("a user has an all-zero channel".into()));
    }
    Ok(())
}

fn gram(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    h * h.adjoint()
}

/// `diag(G (I + ΛG)⁻¹)`, real and positive.
fn mmse_diagonal(g: &DMatrix<Complex64>, lambda: &[f64]) -> Result<Vec<f64>> {
    let k = g.nrows();
    let a = DMatrix::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) + g[(i, j)] * lambda[i]
    });
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular MMSE system".into()))?;
    let m = g * inv;
    Ok((0..k).map(|i| m[(i, i)].re).collect())
}

/// Unit-norm MMSE directions `Ĥᴴ (I + ΛG)⁻¹`, column by column.
fn mmse_directions(h: &DMatrix<Complex64>, g: &DMatrix<Complex64>, lambda: &[f64]) -> Result<DMatrix<Complex64>> {
    let k = g.nrows();
    let a = DMatrix::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) + lambda[i] * g[(i, j)]
    });
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular MMSE system".into()))?;
    let mut u = h.adjoint() * inv;
    for mut col in u.column_iter_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Degenerate("MMSE direction vanished".into()));
        }
        col.scale_mut(1.0 / norm);
    }
    Ok(u)
}

/// `Ψ[k][j] = |h_k u_j|²`.
fn cross_gains(h: &DMatrix<Complex64>, u: &DMatrix<Complex64>) -> DMatrix<f64> {
    (h * u).map(|z| z.norm_sqr())
}

/// Downlink powers giving every user SINR `t` along directions `u`, from
/// `(diag(Ψ)/t − Ψ_off) p = N0 1`.
fn downlink_powers(psi: &DMatrix<f64>, t: f64, n0: f64) -> Option<Vec<f64>> {
    let k = psi.nrows();
    let a = DMatrix::from_fn(k, k, |i, j| if i == j { psi[(i, i)] / t } else { -psi[(i, j)] });
    let p = a.lu().solve(&DVector::from_element(k, n0))?;
    p.iter().all(|x| *x >= 0.0 && x.is_finite()).then(|| p.iter().cloned().collect())
}

/// Decides whether every user can reach SINR `t` with total power `p`.
pub fn feasibility_check(h_known: &DMatrix<Complex64>, t: f64, p: f64, n0: f64) -> Result<Feasibility> {
    feasibility_from(h_known, t, p, n0, None)
}

fn feasibility_from(
    h: &DMatrix<Complex64>,
    t: f64,
    p: f64,
    n0: f64,
    warm: Option<&[f64]>,
) -> Result<Feasibility> {
    check_inputs(h, p, n0)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
    }
    let k = h.nrows();
    if t == 0.0 {
        return Ok(Feasibility {
            feasible: true,
            candidate: Some(DMatrix::zeros(h.ncols(), k)),
            iterations: 0,
            uplink: vec![0.0; k],
        });
    }
    let g = gram(h);
    let budget = p / n0;
    let mut lambda: Vec<f64> = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; k]);
    let factor = 1.0 + 1.0 / t;
    for it in 1..=MAX_FIXED_POINT_ITERATIONS {
        let d = mmse_diagonal(&g, &lambda)?;
        let next: Vec<f64> = d.iter().map(|&x| 1.0 / (factor * x)).collect();
        let total: f64 = next.iter().sum();
        if !total.is_finite() || total > budget {
            return Ok(Feasibility {
                feasible: false,
                candidate: None,
                iterations: it,
                uplink: next,
            });
        }
        let change = next
            .iter()
            .zip(&lambda)
            .map(|(a, b)| (a - b).abs() / a)
            .fold(0.0, f64::max);
        lambda = next;
        if change < 1e-13 {
            let u = mmse_directions(h, &g, &lambda)?;
            let psi = cross_gains(h, &u);
            let candidate = downlink_powers(&psi, t, n0).map(|pw| {
                let mut w = u.clone();
                for (j, mut col) in w.column_iter_mut().enumerate() {
                    col.scale_mut(pw[j].sqrt());
                }
                w
            });
            return Ok(Feasibility {
                feasible: candidate.is_some(),
                candidate,
                iterations: it,
                uplink: lambda,
            });
        }
    }
    // Still below budget but not settled: the target sits at the edge of the
    // feasible set, so call it infeasible.
    Ok(Feasibility {
        feasible: false,
        candidate: None,
        iterations: MAX_FIXED_POINT_ITERATIONS,
        uplink: lambda,
    })
}

/// Perron root and vector of a positive matrix by power iteration; the
/// vector is scaled to sum to one.
fn perron(b: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let k = b.nrows();
    let mut v = DVector::from_element(k, 1.0 / k as f64);
    let mut root = 0.0;
    for _ in 0..100_000 {
        let next = b * &v;
        let s = next.sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Degenerate("Perron iteration lost positivity".into()));
        }
        let next = next / s;
        let change = (&next - &v).amax();
        v = next;
        root = s;
        if change < 1e-16 {
            return Ok((root, v.iter().cloned().collect()));
        }
    }
    Ok((root, v.iter().cloned().collect()))
}

/// `D (Ψ_off + (N0/P) 11ᵀ)` with `D = diag(1/Ψ_kk)`, transposing `Ψ_off` for
/// the uplink.
fn balancing_matrix(psi: &DMatrix<f64>, n0: f64, p: f64, uplink: bool) -> DMatrix<f64> {
    let k = psi.nrows();
    DMatrix::from_fn(k, k, |i, j| {
        let cross = if i == j {
            0.0
        } else if uplink {
            psi[(j, i)]
        } else {
            psi[(i, j)]
        };
        (cross + n0 / p) / psi[(i, i)]
    })
}

/// Max-min SINR beamformer for the known channel `Ĥ` (`K × M`).
pub fn maxmin_beamforming(h_known: &DMatrix<Complex64>, p: f64, n0: f64, opts: SolverOptions) -> Result<BeamformerSolution> {
    check_inputs(h_known, p, n0)?;
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let h = h_known;
    let g = gram(h);
    let k = h.nrows();
    let (start, steps) = match opts.method {
        SolverMethod::Bisection => {
            let (uplink, steps) = bisect(h, &g, p, n0, opts.tol)?;
            (uplink, steps)
        }
        SolverMethod::PowerBalancing => (vec![p / (n0 * k as f64); k], 0),
    };
    let (u, rounds, converged) = balance(h, &g, p, n0, start)?;
    let psi = cross_gains(h, &u);
    let (root, powers) = perron(&balancing_matrix(&psi, n0, p, false))?;
    let mut w = u;
    for (j, mut col) in w.column_iter_mut().enumerate() {
        col.scale_mut((powers[j] * p).sqrt());
    }
    let per_user_sinr = sinr_per_user(h, &w, n0)?;
    Ok(BeamformerSolution {
        precoder: Precoder::new(w, PrecoderMode::Optimal),
        t_star: 1.0 / root,
        per_user_sinr,
        iterations: match opts.method {
            SolverMethod::Bisection => steps,
            SolverMethod::PowerBalancing => rounds,
        },
        converged,
    })
}

/// Bisection on `t`; returns the uplink powers at the best feasible target
/// and the number of steps.
fn bisect(h: &DMatrix<Complex64>, g: &DMatrix<Complex64>, p: f64, n0: f64, tol: f64) -> Result<(Vec<f64>, usize)> {
    let max_norm = (0..h.nrows()).map(|k| g[(k, k)].re).fold(0.0, f64::max);
    let mut hi = p * max_norm / n0;
    let mut lo = 0.0;
    let mut lo_uplink: Option<Vec<f64>> = None;
    let mut doublings = 0;
    loop {
        let f = feasibility_from(h, hi, p, n0, None)?;
        if !f.feasible {
            break;
        }
        lo = hi;
        lo_uplink = Some(f.uplink);
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::NoConvergence {
                what: "bisection bracket growth",
                limit: MAX_DOUBLINGS,
            });
        }
        hi *= 2.0;
    }
    let mut steps = 0;
    while hi - lo > tol * hi {
        if steps == MAX_BISECTION_STEPS {
            return Err(Error::NoConvergence {
                what: "max-min bisection",
                limit: MAX_BISECTION_STEPS,
            });
        }
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let f = feasibility_from(h, mid, p, n0, lo_uplink.as_deref())?;
        if f.feasible {
            lo = mid;
            lo_uplink = Some(f.uplink);
        } else {
            hi = mid;
        }
    }
    let k = h.nrows();
    Ok((lo_uplink.unwrap_or_else(|| vec![p / (n0 * k as f64); k]), steps))
}

/// Alternates MMSE receivers with uplink power balancing until the balanced
/// SINR settles. Returns the final unit-norm directions.
fn balance(
    h: &DMatrix<Complex64>,
    g: &DMatrix<Complex64>,
    p: f64,
    n0: f64,
    mut lambda: Vec<f64>,
) -> Result<(DMatrix<Complex64>, usize, bool)> {
    let mut u = mmse_directions(h, g, &lambda)?;
    let mut t_prev = 0.0;
    for round in 1..=MAX_POLISH_ROUNDS {
        let psi = cross_gains(h, &u);
        let (root, q) = perron(&balancing_matrix(&psi, n0, p, true))?;
        let t = 1.0 / root;
        lambda = q.iter().map(|x| x * p / n0).collect();
        u = mmse_directions(h, g, &lambda)?;
        if (t - t_prev).abs() <= 1e-14 * t {
            return Ok((u, round, true));
        }
        t_prev = t;
    }
    Ok((u, MAX_POLISH_ROUNDS, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_channel(k: usize, m: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(k, m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn single_user_is_matched_filter() {
        let h = DMatrix::from_row_slice(1, 3, &[c(1.0, 1.0), c(0.5, 0.0), c(0.0, -2.0)]);
        let (p, n0) = (2.0, 0.1);
        let s = maxmin_beamforming(&h, p, n0, SolverOptions::default()).unwrap();
        let norm2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        assert!((s.t_star / (p * norm2 / n0) - 1.0).abs() < 1e-9);
        let w = s.precoder.w.column(0);
        let inner: Complex64 = (0..3).map(|i| h[(0, i)] * w[i]).sum();
        assert!((inner.norm() - (p * norm2).sqrt()).abs() < 1e-9 * inner.norm());
    }

    #[test]
    fn orthogonal_equal_users_split_power() {
        let h = DMatrix::from_row_slice(2, 3, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let s = maxmin_beamforming(&h, 4.0, 0.5, SolverOptions::default()).unwrap();
        assert!((s.t_star - 2.0 / 0.5).abs() < 1e-9);
    }

    #[test]
    fn equal_sinr_and_full_power() {
        let h = random_channel(4, 6, 1);
        let s = maxmin_beamforming(&h, 1.0, 0.01, SolverOptions::default()).unwrap();
        let max = s.per_user_sinr.iter().cloned().fold(0.0, f64::max);
        let min = s.per_user_sinr.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((max - min) <= 1e-6 * s.t_star);
        assert!((min / s.t_star - 1.0).abs() < 1e-9);
        assert!((s.precoder.power_used - 1.0).abs() < 1e-9);
        assert!(s.converged);
    }

    #[test]
    fn feasibility_brackets_the_optimum() {
        let h = random_channel(3, 4, 2);
        let (p, n0) = (1.0, 0.05);
        let s = maxmin_beamforming(&h, p, n0, SolverOptions::default()).unwrap();
        assert!(feasibility_check(&h, 0.0, p, n0).unwrap().feasible);
        assert!(!feasibility_check(&h, s.t_star * 1.01, p, n0).unwrap().feasible);
        let f = feasibility_check(&h, s.t_star * 0.99, p, n0).unwrap();
        assert!(f.feasible);
        let w = f.candidate.unwrap();
        let power: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        assert!(power <= p * (1.0 + 1e-9));
        for g in sinr_per_user(&h, &w, n0).unwrap() {
            assert!(g >= s.t_star * 0.99 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn only_rho_matters() {
        let h = random_channel(3, 5, 3);
        let a = maxmin_beamforming(&h, 1.0, 0.02, SolverOptions::default()).unwrap();
        let b = maxmin_beamforming(&h, 50.0, 1.0, SolverOptions::default()).unwrap();
        assert!((a.t_star / b.t_star - 1.0).abs() < 1e-8);
    }

    #[test]
    fn methods_agree() {
        for seed in 10..20 {
            let h = random_channel(4, 6, seed);
            let a = maxmin_beamforming(&h, 1.0, 0.05, SolverOptions::default()).unwrap();
            let b = maxmin_beamforming(&h, 1.0, 0.05, SolverOptions::with_method(SolverMethod::PowerBalancing)).unwrap();
            assert!((a.t_star / b.t_star - 1.0).abs() < 1e-9, "{} vs {}", a.t_star, b.t_star);
            assert!(b.converged);
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(maxmin_beamforming(&h, 1.0, 1.0, SolverOptions::default()).is_err());
        assert!(feasibility_check(&random_channel(2, 2, 1), -1.0, 1.0, 1.0).is_err());
    }
}
